"""Annealing-field families g(n, t) and their local hyperparameters.

Four schedule variants are supported: a spatially uniform linear ramp,
a periodic standing-wave modulation, travelling activation fronts
(tanh-shaped or linearized), and the piecewise-linear multi-front
schedule that sweeps every cluster of a partition from its middle
outwards.  All evaluation functions are pure; sites are indexed 1..N.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .instance import ClusterPartition

__all__ = [
    "ScheduleDomainError",
    "Front",
    "HomogeneousRamp",
    "PeriodicWave",
    "TanhFronts",
    "PiecewiseFronts",
    "field_at",
    "field_profile",
    "hyperparameters",
    "completion_time",
    "schedule_to_dict",
    "schedule_from_dict",
    "schedule_to_json",
    "schedule_from_json",
    "schedule_hash",
]


class ScheduleDomainError(ValueError):
    """Raised when (n, t) falls outside the schedule's domain."""


@dataclass(frozen=True)
class Front:
    """One travelling front: activation centred at `center`, moving at `velocity`."""

    center: float
    steepness: float
    weight: float = 1.0
    velocity: float = 0.0


@dataclass(frozen=True)
class HomogeneousRamp:
    """g(n, t) = g_initial + (g_final - g_initial) * t / total_time, uniform in n."""

    g_initial: float
    g_final: float
    total_time: float
    n_sites: int

    def __post_init__(self):
        _check_common(self)


@dataclass(frozen=True)
class PeriodicWave:
    """Linear ramp plus a standing wave a*cos(k n)*sin(pi t / T)."""

    g_initial: float
    g_final: float
    total_time: float
    n_sites: int
    amplitude: float
    wavenumber: float

    def __post_init__(self):
        _check_common(self)


@dataclass(frozen=True)
class TanhFronts:
    """Travelling activation fronts g = g_crit * (1 + sum_k w_k act(theta_k ((n - n_k) - v_k t))).

    The activation is tanh, or its saturating linearization clamp(x, -1, 1)
    when `linearized` is set.
    """

    g_initial: float
    g_final: float
    total_time: float
    n_sites: int
    g_crit: float
    fronts: tuple[Front, ...]
    linearized: bool = False

    def __post_init__(self):
        _check_common(self)
        if self.g_crit <= 0:
            raise ValueError("g_crit must be positive")
        if not self.fronts:
            raise ValueError("need at least one front")
        object.__setattr__(self, "fronts", tuple(self.fronts))


@dataclass(frozen=True)
class PiecewiseFronts:
    """Per-cluster piecewise-linear double fronts sweeping outwards from cluster middles.

    Within a cluster of length L (local sites 1..L) the field is the linear
    profile (g_i+g_f)/2 + alpha*(|l - L/2| - t v) clamped to [g_final,
    g_initial]; v is the cluster's horizontal front velocity in sites per
    unit time.
    """

    g_initial: float
    g_final: float
    total_time: float
    n_sites: int
    alpha: float
    partition: ClusterPartition

    def __post_init__(self):
        _check_common(self)
        if self.alpha <= 0:
            raise ValueError("alpha must be positive for the piecewise schedule")
        if self.partition.n_sites != self.n_sites:
            raise ValueError("partition does not tile the chain")
        if self.g_initial <= self.g_final:
            raise ValueError("piecewise schedule requires g_initial > g_final")
        w = (self.g_initial - self.g_final) / (2.0 * self.alpha)
        for L, v in zip(self.partition.lengths, self.partition.velocities):
            if self.total_time * v + 1e-9 < w + L / 2.0:
                raise ValueError(
                    "sweep does not complete: need T*v >= (g_i-g_f)/(2 alpha) + L/2"
                )
        object.__setattr__(self, "half_width", w)

    half_width: float = field(init=False, repr=False, default=0.0)


ScheduleSpec = HomogeneousRamp | PeriodicWave | TanhFronts | PiecewiseFronts


def _check_common(spec):
    if spec.total_time <= 0:
        raise ValueError("total_time must be positive")
    if spec.n_sites < 1:
        raise ValueError("n_sites must be at least 1")


def _check_domain(spec, n, t):
    if not (0.0 <= t <= spec.total_time):
        raise ScheduleDomainError(f"t={t} outside [0, {spec.total_time}]")
    if not (1 <= n <= spec.n_sites):
        raise ScheduleDomainError(f"site {n} outside 1..{spec.n_sites}")


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def field_at(spec, n, t):
    """Evaluate the transverse field g(n, t) at site n (1-based) and time t."""
    _check_domain(spec, n, t)
    if isinstance(spec, HomogeneousRamp):
        return spec.g_initial + (spec.g_final - spec.g_initial) * t / spec.total_time
    if isinstance(spec, PeriodicWave):
        ramp = spec.g_initial + (spec.g_final - spec.g_initial) * t / spec.total_time
        return ramp + spec.amplitude * math.cos(spec.wavenumber * n) * math.sin(
            math.pi * t / spec.total_time
        )
    if isinstance(spec, TanhFronts):
        acc = 1.0
        for f in spec.fronts:
            arg = f.steepness * ((n - f.center) - f.velocity * t)
            acc += f.weight * (_clamp(arg, -1.0, 1.0) if spec.linearized else math.tanh(arg))
        return spec.g_crit * acc
    if isinstance(spec, PiecewiseFronts):
        k = spec.partition.cluster_of_site(n)
        start = spec.partition.starts[k]
        L = spec.partition.lengths[k]
        v = spec.partition.velocities[k]
        loc = n - start + 1
        x = abs(loc - L / 2.0) - t * v
        w = spec.half_width
        if x > w:
            return spec.g_initial
        if x < -w:
            return spec.g_final
        return 0.5 * (spec.g_initial + spec.g_final) + spec.alpha * x
    raise TypeError(f"unknown schedule spec {type(spec)!r}")


def field_profile(spec, t):
    """Vectorized field over all sites: array of shape (n_sites,), entry i = g(i+1, t)."""
    if not (0.0 <= t <= spec.total_time):
        raise ScheduleDomainError(f"t={t} outside [0, {spec.total_time}]")
    n = np.arange(1, spec.n_sites + 1, dtype=float)
    if isinstance(spec, HomogeneousRamp):
        g = spec.g_initial + (spec.g_final - spec.g_initial) * t / spec.total_time
        return np.full(spec.n_sites, g)
    if isinstance(spec, PeriodicWave):
        ramp = spec.g_initial + (spec.g_final - spec.g_initial) * t / spec.total_time
        return ramp + spec.amplitude * np.cos(spec.wavenumber * n) * math.sin(
            math.pi * t / spec.total_time
        )
    if isinstance(spec, TanhFronts):
        acc = np.ones(spec.n_sites)
        for f in spec.fronts:
            arg = f.steepness * ((n - f.center) - f.velocity * t)
            act = np.clip(arg, -1.0, 1.0) if spec.linearized else np.tanh(arg)
            acc += f.weight * act
        return spec.g_crit * acc
    if isinstance(spec, PiecewiseFronts):
        out = np.empty(spec.n_sites)
        mid = 0.5 * (spec.g_initial + spec.g_final)
        w = spec.half_width
        for start, L, v in zip(
            spec.partition.starts, spec.partition.lengths, spec.partition.velocities
        ):
            loc = np.arange(1, L + 1, dtype=float)
            x = np.abs(loc - L / 2.0) - t * v
            out[start - 1 : start - 1 + L] = np.clip(
                mid + spec.alpha * x, spec.g_final, spec.g_initial
            )
        return out
    raise TypeError(f"unknown schedule spec {type(spec)!r}")


def hyperparameters(spec, n, t):
    """Local slope and velocities (alpha, v_h, v_v) = (dg/dn, dn/dt at fixed g, -dg/dt).

    v_h is math.inf wherever the field is locally flat in n (the formal
    homogeneous limit); the sentinel is never used in arithmetic here.
    At kinks of the piecewise variants the left limit in t is returned.
    """
    _check_domain(spec, n, t)
    if isinstance(spec, HomogeneousRamp):
        return 0.0, math.inf, (spec.g_initial - spec.g_final) / spec.total_time
    if isinstance(spec, PeriodicWave):
        T = spec.total_time
        a, k = spec.amplitude, spec.wavenumber
        alpha = -a * k * math.sin(k * n) * math.sin(math.pi * t / T)
        v_v = (spec.g_initial - spec.g_final) / T - a * math.cos(k * n) * (
            math.pi / T
        ) * math.cos(math.pi * t / T)
        v_h = v_v / alpha if alpha != 0.0 else math.inf
        return alpha, v_h, v_v
    if isinstance(spec, TanhFronts):
        alpha = 0.0
        v_v = 0.0
        for f in spec.fronts:
            arg = f.steepness * ((n - f.center) - f.velocity * t)
            if spec.linearized:
                act_d = 1.0 if -1.0 <= arg < 1.0 else 0.0
            else:
                act_d = 1.0 - math.tanh(arg) ** 2
            alpha += spec.g_crit * f.weight * f.steepness * act_d
            v_v += spec.g_crit * f.weight * f.steepness * f.velocity * act_d
        v_h = v_v / alpha if alpha != 0.0 else math.inf
        return alpha, v_h, v_v
    if isinstance(spec, PiecewiseFronts):
        k = spec.partition.cluster_of_site(n)
        start = spec.partition.starts[k]
        L = spec.partition.lengths[k]
        v = spec.partition.velocities[k]
        loc = n - start + 1
        x = abs(loc - L / 2.0) - t * v
        w = spec.half_width
        if x >= w or x < -w:
            return 0.0, math.inf, 0.0
        s = 1.0 if loc > L / 2.0 else -1.0
        return spec.alpha * s, v * s, spec.alpha * v
    raise TypeError(f"unknown schedule spec {type(spec)!r}")


def completion_time(spec):
    """Earliest time after which the field equals g_final everywhere, or total_time."""
    if isinstance(spec, PiecewiseFronts):
        w = spec.half_width
        t = max(
            (L / 2.0 + w) / v
            for L, v in zip(spec.partition.lengths, spec.partition.velocities)
        )
        return min(t, spec.total_time)
    return spec.total_time


# ---------------------------------------------------------------------------
# Serialization: JSON object with a "variant" discriminator.
# ---------------------------------------------------------------------------

_VARIANTS = {
    "homogeneous": HomogeneousRamp,
    "periodic_type1": PeriodicWave,
    "tanh_type2": TanhFronts,
    "multifront_piecewise": PiecewiseFronts,
}
_VARIANT_NAMES = {v: k for k, v in _VARIANTS.items()}


def schedule_to_dict(spec):
    d = {
        "variant": _VARIANT_NAMES[type(spec)],
        "g_initial": spec.g_initial,
        "g_final": spec.g_final,
        "total_time": spec.total_time,
        "n_sites": spec.n_sites,
    }
    if isinstance(spec, PeriodicWave):
        d["amplitude"] = spec.amplitude
        d["wavenumber"] = spec.wavenumber
    elif isinstance(spec, TanhFronts):
        d["g_crit"] = spec.g_crit
        d["linearized"] = spec.linearized
        d["fronts"] = [
            {
                "center": f.center,
                "steepness": f.steepness,
                "weight": f.weight,
                "velocity": f.velocity,
            }
            for f in spec.fronts
        ]
    elif isinstance(spec, PiecewiseFronts):
        d["alpha"] = spec.alpha
        d["boundaries"] = list(spec.partition.boundaries)
        d["clusters"] = [
            {"length": int(L), "velocity": v, "vertical_velocity": vv}
            for L, v, vv in zip(
                spec.partition.lengths,
                spec.partition.velocities,
                spec.partition.vertical_velocities,
            )
        ]
    return d


def schedule_from_dict(d):
    variant = d.get("variant")
    if variant not in _VARIANTS:
        raise ValueError(f"unknown schedule variant {variant!r}")
    common = dict(
        g_initial=d["g_initial"],
        g_final=d["g_final"],
        total_time=d["total_time"],
        n_sites=d["n_sites"],
    )
    if variant == "homogeneous":
        return HomogeneousRamp(**common)
    if variant == "periodic_type1":
        return PeriodicWave(amplitude=d["amplitude"], wavenumber=d["wavenumber"], **common)
    if variant == "tanh_type2":
        fronts = tuple(
            Front(
                center=f["center"],
                steepness=f["steepness"],
                weight=f.get("weight", 1.0),
                velocity=f.get("velocity", 0.0),
            )
            for f in d["fronts"]
        )
        return TanhFronts(
            g_crit=d["g_crit"],
            fronts=fronts,
            linearized=d.get("linearized", False),
            **common,
        )
    lengths = [c["length"] for c in d["clusters"]]
    velocities = [c["velocity"] for c in d["clusters"]]
    vertical = [c.get("vertical_velocity", float("nan")) for c in d["clusters"]]
    partition = ClusterPartition.from_lengths(lengths, velocities, vertical)
    return PiecewiseFronts(alpha=d["alpha"], partition=partition, **common)


def schedule_to_json(spec):
    return json.dumps(schedule_to_dict(spec), sort_keys=True)


def schedule_from_json(s):
    return schedule_from_dict(json.loads(s))


def schedule_hash(spec):
    """Stable short content hash of a schedule, used to key result records."""
    import hashlib

    return hashlib.sha256(schedule_to_json(spec).encode()).hexdigest()[:12]
