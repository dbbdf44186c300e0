"""Shared sweep configurations for the heavy acceptance criteria.

Both the acceptance tests and the standalone batch runner use these, so a
batch started ahead of time is found in the cache and reused by pytest.
All sweeps are resume-safe: interrupting and rerunning continues from the
last complete record.
"""

import os

CACHE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "_cache")

SHARED_SEED = 20250  # criteria 5-7 must see identical disorder instances

HOMOGENEOUS_SWEEP = {
    "model": "ising",
    "distribution": {"kind": "uniform", "lo": -1.0, "hi": 1.0},
    "N": [256],
    "T": [100.0, 316.0, 1000.0, 3162.0, 10000.0, 20000.0],
    "schedule": {"family": "homogeneous"},
    "alpha": [0.0],
    "instances": 200,
    "base_seed": SHARED_SEED,
    "g_initial": 2.0,
    "g_final": 0.0,
    "integrator": {"method": "cn", "dt_ref_time": 2000.0, "dt_min": 0.25, "dt_max": 2.0},
}

TYPE2_SWEEP = {
    "model": "ising",
    "distribution": {"kind": "uniform", "lo": -1.0, "hi": 1.0},
    "N": [256],
    "T": [100.0, 464.0, 2154.0, 10000.0],
    "schedule": {"family": "multifront_piecewise"},
    "alpha": [0.125],
    "kappa": 2.0,
    "instances": 200,
    "base_seed": SHARED_SEED,
    "g_initial": 2.0,
    "g_final": 0.0,
    "integrator": {"method": "cn", "dt_ref_time": 2000.0, "dt_min": 0.25, "dt_max": 2.0},
}

# optimal-slope comparison at fixed T (criterion: alpha = 1/8 beats 1/32, 1/2)
ALPHA_SWEEP = {
    "model": "ising",
    "distribution": {"kind": "uniform", "lo": -1.0, "hi": 1.0},
    "N": [256],
    "T": [1000.0],
    "schedule": {"family": "multifront_piecewise"},
    "alpha": [0.03125, 0.125, 0.5],
    "kappa": 2.0,
    "instances": 200,
    "base_seed": SHARED_SEED,
    "g_initial": 2.0,
    "g_final": 0.0,
    "integrator": {"method": "cn", "dt_ref_time": 2000.0, "dt_min": 0.25, "dt_max": 2.0},
}

CLUSTER_HOMOGENEOUS_SWEEP = {
    "model": "cluster_ising",
    "distribution": {"kind": "uniform", "lo": -0.75, "hi": 0.75},
    "k_distribution": {"kind": "uniform", "lo": -0.25, "hi": 0.25},
    "N": [256],
    "T": [300.0, 1000.0, 3000.0],
    "schedule": {"family": "homogeneous"},
    "alpha": [0.0],
    "instances": 64,
    "base_seed": 30111,
    "g_initial": 2.0,
    "g_final": 0.0,
    "integrator": {"method": "cn", "dt_ref_time": 2000.0, "dt_min": 0.25, "dt_max": 2.0},
}

CLUSTER_FRONT_SWEEP = {
    "model": "cluster_ising",
    "distribution": {"kind": "uniform", "lo": -0.75, "hi": 0.75},
    "k_distribution": {"kind": "uniform", "lo": -0.25, "hi": 0.25},
    "N": [256],
    "T": [300.0, 1000.0, 3000.0],
    "schedule": {"family": "multifront_piecewise", "partition": "single"},
    "alpha": [0.125],
    "instances": 64,
    "base_seed": 30111,
    "g_initial": 2.0,
    "g_final": 0.0,
    "integrator": {"method": "cn", "dt_ref_time": 2000.0, "dt_min": 0.25, "dt_max": 2.0},
}

QUENCH_SWEEPS = {
    "c5_homogeneous": HOMOGENEOUS_SWEEP,
    "c6_type2": TYPE2_SWEEP,
    "c7_alpha": ALPHA_SWEEP,
    "c11_cluster_homog": CLUSTER_HOMOGENEOUS_SWEEP,
    "c11_cluster_front": CLUSTER_FRONT_SWEEP,
}


def sweep_dir(name):
    return os.path.join(CACHE_DIR, name)
