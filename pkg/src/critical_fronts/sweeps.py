"""Sweep orchestration: deterministic seeding, resumable result files.

A quench sweep iterates (N, T, alpha, instance) keys, runs
sample -> partition (multi-front only) -> evolve -> measure, and appends
one CSV record per key.  Instance seeds derive from (base_seed, index) with
a counter construction, so results never depend on worker count or on how
many instances ran before.  Completed keys are skipped on resume.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import dynamics, instance, schedules

__all__ = [
    "ConfigError",
    "instance_seed",
    "load_config",
    "validate_quench_config",
    "build_schedule",
    "run_quench",
    "RESULT_COLUMNS",
]

RESULT_COLUMNS = [
    "seed",
    "N",
    "schedule_hash",
    "T",
    "alpha",
    "eps_q",
    "defect_density",
    "n_clusters",
    "n_steps",
    "max_drift",
    "oracle_diff",
    "wall_time",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def instance_seed(base_seed, index):
    """64-bit instance seed from (base seed, counter); stable under extension."""
    ss = np.random.SeedSequence((int(base_seed), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def config_hash(config):
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()
    ).hexdigest()[:16]


_QUENCH_KEYS = {
    "model",
    "distribution",
    "k_distribution",
    "N",
    "T",
    "schedule",
    "alpha",
    "kappa",
    "instances",
    "base_seed",
    "g_initial",
    "g_final",
    "integrator",
    "oracle",
    "dump_defects",
    "periodic",
    "j_wrap",
}

_SCHEDULE_KEYS = {"family", "amplitude", "wavenumber", "fronts", "g_crit", "partition"}
_INTEGRATOR_KEYS = {"method", "rtol", "dt", "dt_ref_time", "dt_min", "dt_max"}


def load_config(path):
    with open(path) as fh:
        return json.load(fh)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate_quench_config(config):
    unknown = set(config) - _QUENCH_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    for key in ("model", "distribution", "N", "T", "schedule", "instances", "base_seed"):
        _require(key in config, f"missing config key: {key}")
    _require(config["model"] in ("ising", "cluster_ising"), "model must be ising|cluster_ising")
    _require(
        isinstance(config["N"], list) and config["N"], "N must be a non-empty list"
    )
    _require(
        isinstance(config["T"], list) and config["T"], "T must be a non-empty list"
    )
    _require(int(config["instances"]) >= 1, "instances must be >= 1")
    sched = config["schedule"]
    _require(isinstance(sched, dict) and "family" in sched, "schedule.family required")
    unknown = set(sched) - _SCHEDULE_KEYS
    _require(not unknown, f"unknown schedule keys: {sorted(unknown)}")
    fam = sched["family"]
    _require(
        fam in ("homogeneous", "periodic_type1", "tanh_type2", "multifront_piecewise"),
        f"unknown schedule family {fam!r}",
    )
    alphas = config.get("alpha", [0.0])
    _require(isinstance(alphas, list) and alphas, "alpha must be a non-empty list")
    if fam == "multifront_piecewise":
        _require(all(a > 0 for a in alphas), "multifront schedule needs alpha > 0")
    integ = config.get("integrator", {"method": "cn"})
    unknown = set(integ) - _INTEGRATOR_KEYS
    _require(not unknown, f"unknown integrator keys: {sorted(unknown)}")
    _require(integ.get("method", "cn") in ("cn", "rk45"), "integrator.method must be cn|rk45")
    if config["model"] == "cluster_ising":
        _require("k_distribution" in config, "cluster_ising needs k_distribution")
    return config


def _distribution(d):
    return instance.Distribution.from_dict(d)


def _dt_for(T, integ):
    ref = integ.get("dt_ref_time", 5000.0)
    lo = integ.get("dt_min", 0.25)
    hi = integ.get("dt_max", 2.0)
    return float(min(hi, max(lo, T / ref)))


def build_schedule(config, realization, N, T, alpha):
    """Construct the ScheduleSpec for one sweep key."""
    sched = config["schedule"]
    fam = sched["family"]
    g_i = float(config.get("g_initial", 2.0))
    g_f = float(config.get("g_final", 0.0))
    if fam == "homogeneous":
        return schedules.HomogeneousRamp(
            g_initial=g_i, g_final=g_f, total_time=T, n_sites=N
        )
    if fam == "periodic_type1":
        return schedules.PeriodicWave(
            g_initial=g_i,
            g_final=g_f,
            total_time=T,
            n_sites=N,
            amplitude=float(sched["amplitude"]),
            wavenumber=float(sched["wavenumber"]),
        )
    if fam == "tanh_type2":
        g_c = sched.get("g_crit")
        if g_c is None:
            g_c = instance.critical_field_analytic(realization.distribution)
        fronts = tuple(
            schedules.Front(
                center=float(f["center"]),
                steepness=float(f["steepness"]),
                weight=float(f.get("weight", 1.0)),
                velocity=float(f.get("velocity", 0.0)),
            )
            for f in sched["fronts"]
        )
        return schedules.TanhFronts(
            g_initial=g_i,
            g_final=g_f,
            total_time=T,
            n_sites=N,
            g_crit=float(g_c),
            fronts=fronts,
        )
    # multifront_piecewise
    mode = sched.get("partition", "weakest_link")
    if mode == "single":
        v_vert = (abs(g_f - g_i) + alpha * N / 2.0) / T
        part = instance.ClusterPartition.from_lengths([N], [v_vert / alpha], [v_vert])
    else:
        part = instance.partition_clusters(
            realization,
            T,
            alpha,
            kappa=float(config.get("kappa", 2.0)),
            g_i=g_i,
            g_f=g_f,
        )
    return schedules.PiecewiseFronts(
        g_initial=g_i,
        g_final=g_f,
        total_time=T,
        n_sites=N,
        alpha=alpha,
        partition=part,
    )


def _run_one(config, N, T, alpha, index):
    t0 = time.time()
    dist = _distribution(config["distribution"])
    kdist = (
        _distribution(config["k_distribution"])
        if config["model"] == "cluster_ising"
        else None
    )
    seed = instance_seed(config["base_seed"], index)
    real = instance.sample_couplings(dist, N, seed, k_distribution=kdist)
    spec = build_schedule(config, real, N, T, alpha)
    integ = config.get("integrator", {"method": "cn"})
    method = integ.get("method", "cn")
    periodic = bool(config.get("periodic", False))
    j_wrap = config.get("j_wrap")
    kwargs = dict(periodic=periodic, j_wrap=j_wrap)
    if method == "cn":
        kwargs["dt"] = integ.get("dt") or _dt_for(T, integ)
    else:
        kwargs["rtol"] = float(integ.get("rtol", 1e-8))
    state = dynamics.evolve(real, spec, method=method, **kwargs)
    report = dynamics.measure(state)
    n_clusters = (
        spec.partition.n_clusters
        if isinstance(spec, schedules.PiecewiseFronts)
        else 1
    )
    oracle_diff = ""
    if config.get("oracle"):
        res = dynamics.dense_oracle(real, spec, state=state, j_wrap=j_wrap)
        oracle_diff = "%.3e" % abs(res.energy_problem - report.energy_problem)
    row = {
        "seed": seed,
        "N": N,
        "schedule_hash": schedules.schedule_hash(spec),
        "T": "%.10g" % T,
        "alpha": "%.10g" % alpha,
        "eps_q": "%.12g" % report.eps_q,
        "defect_density": "%.12g" % report.defect_density,
        "n_clusters": n_clusters,
        "n_steps": state.n_steps,
        "max_drift": "%.3e" % state.max_drift,
        "oracle_diff": oracle_diff,
        "wall_time": "%.3f" % (time.time() - t0),
    }
    defects = report.p if config.get("dump_defects") else None
    return row, defects


def _key_of(row):
    return (str(row["N"]), str(row["T"]), str(row["alpha"]), str(row["seed"]))


def _read_done(path):
    done = set()
    if os.path.exists(path):
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                done.add(_key_of(row))
    return done


def run_quench(config, out_dir, workers=1, log=print):
    """Execute a quench sweep config; returns a summary dict.

    Appends to <out_dir>/results.csv (resume-safe), then rewrites it sorted
    by key.  Integration failures are recorded in failures.csv and skipped;
    more than 1% failures marks the sweep failed in the summary.
    """
    validate_quench_config(config)
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    done = _read_done(results_path)
    # instances outermost so a partially complete file holds full T/alpha
    # grids for the first instances
    keys = [
        (N, float(T), float(alpha), idx)
        for idx in range(int(config["instances"]))
        for N in config["N"]
        for T in config["T"]
        for alpha in config.get("alpha", [0.0])
    ]
    todo = []
    for N, T, alpha, idx in keys:
        seed = instance_seed(config["base_seed"], idx)
        key = (str(N), "%.10g" % T, "%.10g" % alpha, str(seed))
        if key not in done:
            todo.append((N, T, alpha, idx))
    log(f"quench sweep: {len(keys)} keys, {len(keys) - len(todo)} done, {len(todo)} to run")

    failures = []
    new_file = not os.path.exists(results_path)
    defect_rows = []
    t_start = time.time()
    with open(results_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if new_file:
            writer.writeheader()
            fh.flush()
        if workers > 1:
            import multiprocessing as mp

            with mp.Pool(workers) as pool:
                args = [(config, N, T, alpha, idx) for N, T, alpha, idx in todo]
                for i, out in enumerate(pool.imap(_run_one_star, args)):
                    _collect(out, writer, fh, failures, defect_rows, todo[i], log)
        else:
            for i, (N, T, alpha, idx) in enumerate(todo):
                try:
                    out = _run_one(config, N, T, alpha, idx)
                except dynamics.IntegrationFailureError as exc:
                    out = exc
                _collect(out, writer, fh, failures, defect_rows, todo[i], log)
                if (i + 1) % 25 == 0:
                    log(f"  {i + 1}/{len(todo)} done ({time.time() - t_start:.0f}s)")
    _rewrite_sorted(results_path)
    if failures:
        fail_path = os.path.join(out_dir, "failures.csv")
        with open(fail_path, "a", newline="") as fh:
            w = csv.writer(fh)
            for key, msg in failures:
                w.writerow(list(key) + [msg])
    if defect_rows:
        import gzip

        with gzip.open(os.path.join(out_dir, "defects.csv.gz"), "at") as fh:
            w = csv.writer(fh)
            for key, p in defect_rows:
                for b, pb in enumerate(p):
                    w.writerow([key[0], key[1], key[2], key[3], b + 1, "%.10g" % pb])
    n_total = len(keys)
    n_failed = len(failures)
    summary = {
        "config_hash": config_hash(config),
        "n_keys": n_total,
        "n_failures": n_failed,
        "failed_fraction": n_failed / max(1, len(todo)),
        "ok": n_failed <= 0.01 * n_total,
        "wall_time": time.time() - t_start,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    return summary


def _run_one_star(args):
    try:
        return _run_one(*args)
    except dynamics.IntegrationFailureError as exc:
        return exc


def _collect(out, writer, fh, failures, defect_rows, key, log):
    if isinstance(out, dynamics.IntegrationFailureError):
        failures.append((key, str(out)))
        log(f"  integration failure at key {key}: {out}")
        return
    row, defects = out
    writer.writerow(row)
    fh.flush()
    if defects is not None:
        defect_rows.append(((row["N"], row["T"], row["alpha"], row["seed"]), defects))


def _rewrite_sorted(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: (int(r["N"]), float(r["T"]), float(r["alpha"]), int(r["seed"])))
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)
