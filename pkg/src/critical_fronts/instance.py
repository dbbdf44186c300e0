"""Quenched-disorder realizations and the weakest-link cluster preprocessing.

Couplings are drawn i.i.d. from a descriptor (uniform interval or constant),
deterministically in a 64-bit seed.  The critical transverse field of a
realization is the geometric mean exp(mean log |J|).  `partition_clusters`
tiles the chain into clusters whose fronts can sweep quasi-adiabatically in
the available time, cutting candidate clusters at their weakest links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Distribution",
    "uniform",
    "constant",
    "DisorderRealization",
    "SingularCouplingError",
    "sample_couplings",
    "critical_field",
    "critical_field_analytic",
    "ClusterPartition",
    "partition_clusters",
]


@dataclass(frozen=True)
class Distribution:
    """Coupling distribution descriptor: uniform on [lo, hi] or a constant."""

    kind: str  # "uniform" | "constant"
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "constant"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform" and not self.hi > self.lo:
            raise ValueError("uniform distribution needs hi > lo")

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.lo}
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}

    @staticmethod
    def from_dict(d):
        if d["kind"] == "constant":
            return constant(d["value"])
        return uniform(d["lo"], d["hi"])


def uniform(lo, hi):
    return Distribution("uniform", float(lo), float(hi))


def constant(value):
    return Distribution("constant", float(value), float(value))


class SingularCouplingError(ValueError):
    """A coupling is exactly zero where a nonzero value is required."""


@dataclass(frozen=True)
class DisorderRealization:
    """One quenched chain: N sites, N-1 bond couplings J, optional N-2 three-local K."""

    N: int
    J: np.ndarray
    distribution: Distribution
    seed: int
    K: np.ndarray | None = None
    k_distribution: Distribution | None = None

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        object.__setattr__(self, "J", J)
        if len(J) != self.N - 1:
            raise ValueError(f"J must have length N-1={self.N - 1}, got {len(J)}")
        if self.K is not None:
            K = np.asarray(self.K, dtype=float)
            object.__setattr__(self, "K", K)
            if len(K) != self.N - 2:
                raise ValueError(f"K must have length N-2={self.N - 2}, got {len(K)}")

    def to_dict(self):
        d = {
            "N": self.N,
            "seed": int(self.seed),
            "distribution": self.distribution.to_dict(),
            "J": [float(x) for x in self.J],
        }
        if self.K is not None:
            d["K"] = [float(x) for x in self.K]
            d["k_distribution"] = self.k_distribution.to_dict()
        return d

    @staticmethod
    def from_dict(d):
        K = np.asarray(d["K"], dtype=float) if "K" in d else None
        kdist = Distribution.from_dict(d["k_distribution"]) if "k_distribution" in d else None
        return DisorderRealization(
            N=d["N"],
            J=np.asarray(d["J"], dtype=float),
            distribution=Distribution.from_dict(d["distribution"]),
            seed=d["seed"],
            K=K,
            k_distribution=kdist,
        )


def _draw(rng, dist, size):
    if dist.kind == "constant":
        return np.full(size, dist.lo)
    x = rng.uniform(dist.lo, dist.hi, size)
    # exact zeros are probability-zero events but would break log |J|; resample
    while np.any(x == 0.0):
        x[x == 0.0] = rng.uniform(dist.lo, dist.hi, int(np.sum(x == 0.0)))
    return x


def sample_couplings(distribution, N, seed, k_distribution=None):
    """Draw a DisorderRealization of length N, deterministic in (distribution, seed, N).

    When `k_distribution` is given, three-local couplings K (length N-2) are
    drawn from the same stream after J, for the cluster-Ising model.
    """
    if N < 2:
        raise ValueError(f"chain length must be at least 2, got N={N}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    J = _draw(rng, distribution, N - 1)
    K = None
    if k_distribution is not None:
        K = _draw(rng, k_distribution, N - 2)
    return DisorderRealization(
        N=N, J=J, distribution=distribution, seed=int(seed), K=K,
        k_distribution=k_distribution,
    )


def critical_field(realization):
    """Critical transverse field g_c = exp(mean log |J_n|) of one realization."""
    J = realization.J
    if np.any(J == 0.0):
        raise SingularCouplingError("critical field undefined: some J_n is exactly zero")
    return float(np.exp(np.mean(np.log(np.abs(J)))))


def critical_field_analytic(distribution):
    """Distribution-level g_c where a closed form exists (else None).

    For the uniform interval, E[log|J|] integrates to (b log b - b - a log a + a)
    / (b - a) over the positive part, extended evenly to sign-symmetric
    intervals; a flat [-1, 1] gives e^{-1}.
    """
    if distribution.kind == "constant":
        return abs(distribution.lo)
    lo, hi = distribution.lo, distribution.hi
    if lo < 0.0 < hi:
        # mean of log|x| over [lo, hi] splits into the two positive triangles
        m = (_int_log(hi) + _int_log(-lo)) / (hi - lo)
        return math.exp(m)
    if lo >= 0.0:
        if lo == 0.0:
            m = _int_log(hi) / hi
        else:
            m = (_int_log(hi) - _int_log(lo)) / (hi - lo)
        return math.exp(m)
    return critical_field_analytic(uniform(-hi, -lo))


def _int_log(b):
    # integral of log x over [0, b], b > 0
    return b * (math.log(b) - 1.0)


@dataclass(frozen=True)
class ClusterPartition:
    """Tiling of sites 1..N into contiguous clusters with per-cluster front velocities.

    `boundaries` are the internal cut positions as bond indices (bond b joins
    sites b and b+1).  `velocities` are horizontal front speeds in sites per
    unit time; `vertical_velocities` are the field sweep rates
    (|g_f - g_i| + alpha L_k / 2) / T from which they derive.
    """

    boundaries: tuple[int, ...]
    lengths: tuple[int, ...]
    velocities: tuple[float, ...]
    vertical_velocities: tuple[float, ...]
    cut_context: tuple = ()  # (bond, lo_site, hi_site) of the candidate at cut time

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        object.__setattr__(self, "lengths", tuple(int(x) for x in self.lengths))
        object.__setattr__(self, "velocities", tuple(float(v) for v in self.velocities))
        object.__setattr__(
            self, "vertical_velocities", tuple(float(v) for v in self.vertical_velocities)
        )
        if len(self.lengths) != len(self.velocities):
            raise ValueError("one velocity per cluster required")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise ValueError("boundaries must be strictly increasing")
        starts = []
        s = 1
        for L in self.lengths:
            starts.append(s)
            s += L
        object.__setattr__(self, "starts", tuple(starts))
        expect = tuple(sum(self.lengths[: i + 1]) for i in range(len(self.lengths) - 1))
        if self.boundaries != expect:
            raise ValueError("boundaries inconsistent with cluster lengths")

    starts: tuple[int, ...] = field(init=False, repr=False, default=())

    @property
    def n_sites(self):
        return sum(self.lengths)

    @property
    def n_clusters(self):
        return len(self.lengths)

    def cluster_of_site(self, n):
        """Index of the cluster containing site n (1-based site, 0-based cluster)."""
        if not 1 <= n <= self.n_sites:
            raise ValueError(f"site {n} outside 1..{self.n_sites}")
        import bisect

        return bisect.bisect_right(self.boundaries, n - 1)

    @staticmethod
    def from_lengths(lengths, velocities, vertical_velocities=None):
        if vertical_velocities is None:
            vertical_velocities = [float("nan")] * len(lengths)
        bounds = tuple(
            sum(lengths[: i + 1]) for i in range(len(lengths) - 1)
        )
        return ClusterPartition(bounds, tuple(lengths), tuple(velocities),
                                tuple(vertical_velocities))

    def to_dict(self):
        return {
            "boundaries": list(self.boundaries),
            "clusters": [
                {"length": L, "velocity": v, "vertical_velocity": vv}
                for L, v, vv in zip(self.lengths, self.velocities, self.vertical_velocities)
            ],
        }


def _front_velocities(L, alpha, g_i, g_f, T):
    # vertical sweep rate per the cluster-size rule, and the horizontal front
    # speed it implies for the piecewise profile
    v_vert = (abs(g_f - g_i) + alpha * L / 2.0) / T
    return v_vert, v_vert / alpha


def partition_clusters(realization, T, alpha, kappa=2.0, g_i=2.0, g_f=0.0):
    """Greedy weakest-link tiling of the chain into quasi-adiabatic clusters.

    Grows a candidate cluster site by site while kappa * min |J| inside it
    exceeds the horizontal front velocity its length implies; on failure the
    candidate is cut at its weakest internal link and the left piece is
    re-tested.  Returns a ClusterPartition whose velocities satisfy the
    cluster-size rule for the final lengths.
    """
    if T <= 0 or alpha <= 0 or kappa <= 0:
        raise ValueError("T, alpha, kappa must be positive")
    absJ = np.abs(realization.J)
    N = realization.N

    def ok(lo, hi):
        # candidate spans sites lo..hi inclusive; internal bonds lo..hi-1
        L = hi - lo + 1
        _, v_h = _front_velocities(L, alpha, g_i, g_f, T)
        if L == 1:
            return True
        return float(np.min(absJ[lo - 1 : hi - 1])) * kappa > v_h

    lengths = []
    cuts = []
    cut_context = []
    lo = 1
    while lo <= N:
        hi = lo
        while hi < N and ok(lo, hi + 1):
            hi += 1
        if hi < N:
            # growth stopped: candidate [lo, hi+1] failed; cut at its weakest
            # internal link (1-based bond w joins sites w and w+1) until the
            # left piece passes again
            cand = hi + 1
            while cand > lo and not ok(lo, cand):
                w = lo + int(np.argmin(absJ[lo - 1 : cand - 1]))
                cut_context.append((w, lo, cand))
                cand = w
            hi = cand
        lengths.append(hi - lo + 1)
        if hi < N:
            cuts.append(hi)  # boundary bond between sites hi and hi+1
        lo = hi + 1

    vels, verts = [], []
    for L in lengths:
        v_vert, v_h = _front_velocities(L, alpha, g_i, g_f, T)
        vels.append(v_h)
        verts.append(v_vert)
    kept = tuple(c for c in cut_context if c[0] in set(cuts))
    return ClusterPartition(tuple(cuts), tuple(lengths), tuple(vels), tuple(verts),
                            cut_context=kept)
