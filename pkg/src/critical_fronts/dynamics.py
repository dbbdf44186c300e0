"""Time-dependent free-fermion evolution, defect measurement, dense oracle.

The many-body Gaussian state is carried by the Bogoliubov mode matrices
(U, V); the initial state is the exact ground state of the t = 0 quadratic
form.  Two steppers are available: the adaptive Dormand-Prince 4(5) pair
(default, with Loewdin re-orthonormalization when the mode Gram matrix
drifts), and a Crank-Nicolson/Cayley stepper that is exactly
norm-preserving and preferred for the long disorder sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _dense, _kernels, schedules
from .quadratic import build_quadratic, diagonalize
from .schedules import (
    HomogeneousRamp,
    PeriodicWave,
    PiecewiseFronts,
    TanhFronts,
    completion_time,
    field_profile,
)

__all__ = [
    "EvolutionState",
    "DefectReport",
    "IntegrationFailureError",
    "OracleResult",
    "prepare_initial_state",
    "evolve",
    "measure",
    "state_energy",
    "zz_correlators",
    "dense_oracle",
    "pack_schedule",
]


class IntegrationFailureError(RuntimeError):
    """Unitarity drift exceeded the failure threshold during propagation."""

    def __init__(self, time, drift):
        super().__init__(f"unitarity drift {drift:.3e} at t={time:.6g} exceeds 1e-6")
        self.time = time
        self.drift = drift


@dataclass
class EvolutionState:
    """Evolved Bogoliubov modes at time t; U, V are N x N complex."""

    t: float
    U: np.ndarray
    V: np.ndarray
    realization: object
    spec: object
    periodic: bool = False
    j_wrap: float | None = None
    max_drift: float = 0.0
    n_steps: int = 0
    n_rejected: int = 0
    n_reorth: int = 0


@dataclass(frozen=True)
class DefectReport:
    """Per-bond kink probabilities and residual energy of a final state.

    p[b] is the kink probability of bond b+1; for periodic chains the wrap
    bond is appended as the last entry.  Q is the residual energy above the
    classical ground state; eps_q = Q / N.
    """

    p: np.ndarray
    defect_density: float
    Q: float
    eps_q: float
    energy_problem: float
    ground_energy: float


def pack_schedule(spec):
    """Encode a schedule for the numba field kernel: (ivar, fvar, a1..a4)."""
    ivar = np.zeros(2, dtype=np.int64)
    fvar = np.zeros(7)
    fvar[0] = spec.g_initial
    fvar[1] = spec.g_final
    fvar[2] = spec.total_time
    empty = np.zeros(0)
    a1 = a2 = a3 = a4 = empty
    if isinstance(spec, HomogeneousRamp):
        ivar[0] = _kernels.VAR_HOMOGENEOUS
    elif isinstance(spec, PeriodicWave):
        ivar[0] = _kernels.VAR_PERIODIC
        fvar[4] = spec.amplitude
        fvar[5] = spec.wavenumber
    elif isinstance(spec, TanhFronts):
        ivar[0] = _kernels.VAR_TANH
        ivar[1] = 1 if spec.linearized else 0
        fvar[6] = spec.g_crit
        a1 = np.array([f.center for f in spec.fronts], dtype=float)
        a2 = np.array([f.steepness for f in spec.fronts], dtype=float)
        a3 = np.array([f.weight for f in spec.fronts], dtype=float)
        a4 = np.array([f.velocity for f in spec.fronts], dtype=float)
    elif isinstance(spec, PiecewiseFronts):
        ivar[0] = _kernels.VAR_PIECEWISE
        fvar[3] = spec.alpha
        a1 = np.array(spec.partition.starts, dtype=float)
        a2 = np.array(spec.partition.lengths, dtype=float)
        a3 = np.array(spec.partition.velocities, dtype=float)
    else:
        raise TypeError(f"unknown schedule spec {type(spec)!r}")
    return ivar, fvar, a1, a2, a3, a4


def prepare_initial_state(realization, spec, periodic=False, j_wrap=None):
    """Exact ground state of the t = 0 form as an EvolutionState."""
    g0 = field_profile(spec, 0.0)
    form = build_quadratic(realization, g0, periodic=periodic, j_wrap=j_wrap)
    res = diagonalize(form)
    scale = max(1.0, float(np.max(res.energies, initial=0.0)))
    if res.energies[0] < 1e-10 * scale:
        raise ValueError(
            "initial ground state is (nearly) degenerate; start deeper in the "
            "paramagnet (smallest quasiparticle energy "
            f"{res.energies[0]:.3e})"
        )
    U = res.u.astype(complex)
    V = res.v.astype(complex)
    return EvolutionState(
        t=0.0, U=U, V=V, realization=realization, spec=spec,
        periodic=periodic, j_wrap=j_wrap,
    )


def _loewdin(W):
    # W <- W (W+W)^{-1/2}, restoring the orthonormal-columns invariant while
    # keeping the physical state (the span) unchanged
    N = W.shape[1]
    U = W[0]
    V = W[1]
    S = U.conj().T @ U + V.conj().T @ V
    w, Q = np.linalg.eigh(S)
    S_inv_half = (Q * (1.0 / np.sqrt(w))) @ Q.conj().T
    W[0] = U @ S_inv_half
    W[1] = V @ S_inv_half


def evolve(
    realization,
    spec,
    *,
    method="rk45",
    rtol=1e-8,
    atol=None,
    dt=0.1,
    periodic=False,
    j_wrap=None,
    stop_when_complete=True,
    reorth_threshold=1e-10,
    fail_threshold=1e-6,
    full_check_every=None,
    max_steps_per_chunk=200_000,
    initial_state=None,
):
    """Propagate the Gaussian state from t = 0 to t = total_time.

    method "rk45" is the adaptive pair controlled by rtol/atol; "cn" is the
    Cayley stepper with fixed step dt (open boundaries only).  When
    `stop_when_complete` is set and the schedule reaches g = 0 everywhere
    before total_time, integration stops there: with the field off, the
    generator commutes with every z-basis observable, so defect measurements
    are unaffected.
    """
    if realization.N != spec.n_sites:
        raise ValueError("realization and schedule disagree on N")
    state = initial_state or prepare_initial_state(
        realization, spec, periodic=periodic, j_wrap=j_wrap
    )
    N = realization.N
    W = np.empty((2, N, N), dtype=complex)
    W[0] = state.U
    W[1] = state.V
    ivar, fvar, a1, a2, a3, a4 = pack_schedule(spec)
    J = np.asarray(realization.J, dtype=float)
    K = np.asarray(realization.K, dtype=float) if realization.K is not None else np.zeros(0)
    jwb = 0.0
    if periodic:
        if j_wrap is None:
            raise ValueError("periodic evolution needs j_wrap")
        jwb = -float(j_wrap)
    t_end = spec.total_time
    if stop_when_complete and spec.g_final == 0.0:
        t_end = completion_time(spec)
    gbuf = np.empty(N)
    t = state.t
    n_steps = n_rejected = n_reorth = 0
    max_drift = 0.0
    if full_check_every is None:
        # rk45 drifts at the local-error scale and needs a tight cadence;
        # the Cayley step is norm-preserving to round-off
        full_check_every = 20 if method == "rk45" else 500
    if method == "rk45":
        if atol is None:
            atol = rtol * 1e-2
        stages = np.empty((7, 2, N, N), dtype=complex)
        Y = np.empty((2, N, N), dtype=complex)
        h = min(1e-3, t_end)
        while t < t_end:
            t, h, status, drift, acc, rej = _kernels.rk45_chunk(
                W, t, t_end, h, rtol, atol, ivar, fvar, a1, a2, a3, a4,
                J, K, jwb, gbuf, stages, Y, max_steps_per_chunk,
                full_check_every, reorth_threshold, fail_threshold,
            )
            n_steps += acc
            n_rejected += rej
            max_drift = max(max_drift, drift)
            if status == _kernels.STATUS_DRIFT_FAIL:
                raise IntegrationFailureError(t, drift)
            if status == _kernels.STATUS_REORTH:
                _loewdin(W)
                n_reorth += 1
    elif method == "cn":
        if periodic:
            raise ValueError("the cn stepper supports open boundaries only")
        p = 5 if len(K) else 3
        band = np.empty((2 * p + 1, 2 * N), dtype=complex)
        Y = np.empty((2 * N, N), dtype=complex)
        dWbuf = np.empty((2, N, N), dtype=complex)
        while t < t_end:
            t, status, drift, steps = _kernels.cn_chunk(
                W, t, t_end, dt, ivar, fvar, a1, a2, a3, a4, J, K,
                gbuf, band, Y, dWbuf, max_steps_per_chunk,
                full_check_every, reorth_threshold, fail_threshold,
            )
            n_steps += steps
            max_drift = max(max_drift, drift)
            if status == _kernels.STATUS_DRIFT_FAIL:
                raise IntegrationFailureError(t, drift)
            if status == _kernels.STATUS_REORTH:
                _loewdin(W)
                n_reorth += 1
    else:
        raise ValueError(f"unknown method {method!r}")
    return replace(
        state,
        t=t,
        U=W[0].copy(),
        V=W[1].copy(),
        max_drift=max_drift,
        n_steps=n_steps,
        n_rejected=n_rejected,
        n_reorth=n_reorth,
    )


def _adjacent_correlator(U, V, dist):
    # <(c+_n - c_n)(c+_{n+d} + c_{n+d})> for all n, from the mode matrices
    VU = np.sum(V[:-dist] * U[dist:].conj(), axis=1)
    VV = np.sum(V[:-dist] * V[dist:].conj(), axis=1)
    UU = np.sum(U[:-dist] * U[dist:].conj(), axis=1)
    UV = np.sum(U[:-dist] * V[dist:].conj(), axis=1)
    return np.real(VU + VV - UU - UV)


def zz_correlators(state):
    """<sigma^z_n sigma^z_{n+1}> for bonds 1..N-1 (plus the wrap bond if periodic)."""
    zz = _adjacent_correlator(state.U, state.V, 1)
    if state.periodic:
        U, V = state.U, state.V
        VU = np.sum(V[-1] * U[0].conj())
        VV = np.sum(V[-1] * V[0].conj())
        UU = np.sum(U[-1] * U[0].conj())
        UV = np.sum(U[-1] * V[0].conj())
        # even-parity sector: sigma^z_N sigma^z_1 = -P (c+_N - c_N)(c+_1 + c_1)
        wrap = -np.real(VU + VV - UU - UV)
        zz = np.append(zz, wrap)
    return zz


def zxz_correlators(state):
    """<sigma^z_n sigma^x_{n+1} sigma^z_{n+2}> for n = 1..N-2."""
    return _adjacent_correlator(state.U, state.V, 2)


def state_energy(state, fields=None):
    """<H> in the current state for the instantaneous fields (default: at state.t)."""
    if fields is None:
        fields = field_profile(state.spec, min(state.t, state.spec.total_time))
    form = build_quadratic(
        state.realization, fields, periodic=state.periodic, j_wrap=state.j_wrap
    )
    U, V = state.U, state.V
    G = V @ V.conj().T
    FD = V @ U.conj().T  # <c+ c+>
    F = U @ V.conj().T  # <c c>
    e = np.sum(form.A * np.real(G)) + 0.5 * np.sum(form.B * np.real(FD - F))
    return float(e) - float(np.sum(fields))


def _classical_ground_energy(realization, periodic=False, j_wrap=None):
    absJ = np.abs(realization.J)
    if realization.K is not None:
        form = build_quadratic(realization, np.zeros(realization.N))
        return diagonalize(form).ground_energy
    e = -float(np.sum(absJ))
    if periodic:
        bonds = np.append(realization.J, j_wrap)
        e = -float(np.sum(np.abs(bonds)))
        if np.prod(np.sign(bonds)) < 0:
            # frustrated ring: one bond must stay unsatisfied
            e += 2.0 * float(np.min(np.abs(bonds)))
    return e


def measure(state):
    """Kink distribution and residual energy of an evolved state."""
    realization = state.realization
    zz = zz_correlators(state)
    bonds = realization.J
    if state.periodic:
        bonds = np.append(realization.J, state.j_wrap)
    p = 0.5 * (1.0 - np.sign(bonds) * zz)
    energy_problem = -float(np.sum(bonds * zz))
    if realization.K is not None:
        zxz = zxz_correlators(state)
        energy_problem -= float(np.sum(realization.K * zxz))
    e_gs = _classical_ground_energy(
        realization, periodic=state.periodic, j_wrap=state.j_wrap
    )
    Q = energy_problem - e_gs
    return DefectReport(
        p=p,
        defect_density=float(np.mean(p)),
        Q=Q,
        eps_q=Q / realization.N,
        energy_problem=energy_problem,
        ground_energy=e_gs,
    )


@dataclass(frozen=True)
class OracleResult:
    """Dense-integration reference values and overlap diagnostics."""

    energy_total: float
    energy_problem: float
    initial_energy: float
    overlap: float | None
    n_rhs_evals: int


def dense_oracle(realization, spec, state=None, rtol=1e-10, j_wrap=None, t_final=None):
    """Integrate the full 2^N Schroedinger equation under the same schedule.

    Returns the dense final energies and, when `state` is given and the
    Gaussian state admits a Thouless expansion, the overlap
    |<psi_dense | psi_gaussian>|.  Refuses N > 12.
    """
    if realization.N > _dense.MAX_DENSE_SITES:
        raise ValueError(f"dense oracle refuses N={realization.N} > 12")
    psi, diag = _dense.dense_evolve(
        realization, spec, rtol=rtol, atol=rtol * 1e-2, j_wrap=j_wrap, t_final=t_final
    )
    overlap = None
    if state is not None:
        vec = _dense.gaussian_state_dense(state.U, state.V)
        if vec is not None:
            overlap = float(abs(np.vdot(psi, vec)))
    return OracleResult(
        energy_total=diag["energy_total"],
        energy_problem=diag["energy_problem"],
        initial_energy=diag["initial_energy"],
        overlap=overlap,
        n_rhs_evals=diag["n_rhs_evals"],
    )
