"""Dense 2^N spin-space machinery: the small-system oracle.

Everything here works directly with Pauli operators in the z-computational
basis (site 1 = most significant bit), independent of the Jordan-Wigner
route, so it can arbitrate sign conventions.  Cost grows as 2^N; callers
enforce N <= 12.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, eigsh

from .schedules import field_profile

MAX_DENSE_SITES = 12

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_ID = np.eye(2)


def _site_op(op, n, N):
    mats = [_ID] * N
    mats[n - 1] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dense_hamiltonian(realization, g):
    """Dense matrix of -sum g_n sx_n - sum J_n sz_n sz_{n+1} - sum K_n sz sx sz."""
    N = realization.N
    _check_size(N)
    dim = 1 << N
    H = np.zeros((dim, dim))
    for n in range(1, N + 1):
        H -= g[n - 1] * _site_op(_SX, n, N)
    for n in range(1, N):
        H -= realization.J[n - 1] * _site_op(_SZ, n, N) @ _site_op(_SZ, n + 1, N)
    if realization.K is not None:
        for n in range(1, N - 1):
            H -= (
                realization.K[n - 1]
                * _site_op(_SZ, n, N)
                @ _site_op(_SX, n + 1, N)
                @ _site_op(_SZ, n + 2, N)
            )
    return H


def dense_problem_hamiltonian(realization, j_wrap=None):
    N = realization.N
    _check_size(N)
    dim = 1 << N
    H = np.zeros((dim, dim))
    for n in range(1, N):
        H -= realization.J[n - 1] * _site_op(_SZ, n, N) @ _site_op(_SZ, n + 1, N)
    if realization.K is not None:
        for n in range(1, N - 1):
            H -= (
                realization.K[n - 1]
                * _site_op(_SZ, n, N)
                @ _site_op(_SX, n + 1, N)
                @ _site_op(_SZ, n + 2, N)
            )
    if j_wrap is not None:
        H -= j_wrap * _site_op(_SZ, N, N) @ _site_op(_SZ, 1, N)
    return H


class _FastAction:
    """Matrix-free H(t) action: diagonal J part plus bit-flip transverse terms."""

    def __init__(self, realization, j_wrap=None):
        N = realization.N
        _check_size(N)
        self.N = N
        dim = 1 << N
        idx = np.arange(dim)
        # z_n = +1/-1 eigenvalue of sigma^z at site n (site 1 = MSB)
        self.zvals = np.array(
            [1.0 - 2.0 * ((idx >> (N - n)) & 1) for n in range(1, N + 1)]
        )
        self.flip = [idx ^ (1 << (N - n)) for n in range(1, N + 1)]
        diag = np.zeros(dim)
        for n in range(1, N):
            diag -= realization.J[n - 1] * self.zvals[n - 1] * self.zvals[n]
        if j_wrap is not None:
            diag -= j_wrap * self.zvals[N - 1] * self.zvals[0]
        self.hp_diag = diag
        self.K = realization.K

    def problem_action(self, psi):
        out = self.hp_diag * psi
        if self.K is not None:
            for n in range(1, self.N - 1):
                out -= (
                    self.K[n - 1]
                    * self.zvals[n - 1]
                    * self.zvals[n + 1]
                    * psi[self.flip[n]]
                )
        return out

    def hamiltonian_action(self, psi, g):
        out = self.problem_action(psi)
        for n in range(self.N):
            out = out - g[n] * psi[self.flip[n]]
        return out


def dense_ground_state(realization, g, j_wrap=None):
    """Lowest eigenpair of the dense spin Hamiltonian (matrix-free Lanczos)."""
    act = _FastAction(realization, j_wrap=j_wrap)
    dim = 1 << realization.N
    op = LinearOperator(
        (dim, dim), matvec=lambda x: act.hamiltonian_action(x, g), dtype=float
    )
    v0 = np.full(dim, 1.0 / np.sqrt(dim))
    w, vec = eigsh(op, k=1, which="SA", v0=v0)
    return float(w[0]), vec[:, 0]


def dense_evolve(realization, spec, rtol=1e-10, atol=1e-12, j_wrap=None, t_final=None):
    """Integrate the full Schroedinger equation under the schedule.

    Starts from the dense ground state of H(0); returns (psi_T, diagnostics
    dict with initial/final energies).
    """
    act = _FastAction(realization, j_wrap=j_wrap)
    T = spec.total_time if t_final is None else t_final
    g0 = field_profile(spec, 0.0)
    e0, psi0 = dense_ground_state(realization, g0, j_wrap=j_wrap)

    def rhs(t, y):
        g = field_profile(spec, min(t, spec.total_time))
        return -1j * act.hamiltonian_action(y, g)

    sol = solve_ivp(
        rhs,
        (0.0, T),
        psi0.astype(complex),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"dense integration failed: {sol.message}")
    psi = sol.y[:, -1]
    psi /= np.linalg.norm(psi)
    gT = field_profile(spec, T)
    energy_total = float(np.real(np.vdot(psi, act.hamiltonian_action(psi, gT))))
    energy_problem = float(np.real(np.vdot(psi, act.problem_action(psi))))
    return psi, {
        "initial_energy": e0,
        "energy_total": energy_total,
        "energy_problem": energy_problem,
        "n_rhs_evals": int(sol.nfev),
    }


def _check_size(N):
    if N > MAX_DENSE_SITES:
        raise ValueError(
            f"dense oracle refuses N={N} > {MAX_DENSE_SITES} (2^N cost guard)"
        )


# ---------------------------------------------------------------------------
# Gaussian-state reconstruction in the dense basis (Thouless form), for
# overlap diagnostics.  Occupation bitstrings map to the sigma^x product
# basis with no extra signs when creation operators are applied in
# descending site order; a Hadamard on every site then lands in the
# z-computational basis used above.
# ---------------------------------------------------------------------------


def gaussian_state_dense(U, V):
    """Expand the state annihilated by eta = U^+ c + V^+ c^+ as a 2^N vector.

    Requires U invertible (returns None otherwise, e.g. deep in the ordered
    phase).  The result lives in the z-basis of the spin chain.
    """
    N = U.shape[0]
    _check_size(N)
    Uc, Vc = np.conj(U), np.conj(V)
    try:
        # the annihilation condition fixes Z^T = V* (U*)^{-1}; solving the
        # transposed system gives Z directly
        Z = np.linalg.solve(Uc.T, Vc.T)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(Z)):
        return None
    dim = 1 << N
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    # exp(-1/2 sum Z_nm c+_n c+_m)|0>, series terminates after N/2 applications
    pairs = [
        (n, m, -0.5 * Z[n, m])
        for n in range(N)
        for m in range(N)
        if n != m and Z[n, m] != 0.0
    ]
    state = vac.copy()
    term = vac.copy()
    for k in range(1, N // 2 + 1):
        term = _apply_pair_creation(term, pairs, N) / k
        if not np.any(term):
            break
        state = state + term
    nrm = np.linalg.norm(state)
    if nrm == 0.0:
        return None
    state = state / nrm
    # occupation basis -> sigma^x basis (identity on coefficients) -> z basis
    return _hadamard_all(state, N)


def _apply_pair_creation(vec, pairs, N):
    dim = len(vec)
    out = np.zeros_like(vec)
    src = np.nonzero(vec)[0]
    for n, m, coef in pairs:
        bn = 1 << (N - 1 - n)
        bm = 1 << (N - 1 - m)
        for i in src:
            if i & bm or (i | bm) & bn:
                continue
            # apply c+_m then c+_n with parity signs from occupied lower sites
            j = i | bm
            sign = _parity_below(i, m, N) * _parity_below(j, n, N)
            out[j | bn] += coef * sign * vec[i]
    return out


def _parity_below(i, n, N):
    # (-1)^{number of occupied sites with index < n}; site index = 0-based
    mask = ((1 << n) - 1) << (N - n) if n > 0 else 0
    return -1.0 if bin(i & mask).count("1") % 2 else 1.0


def _hadamard_all(state, N):
    s = state.reshape((2,) * N)
    r = 1.0 / np.sqrt(2.0)
    for axis in range(N):
        a = np.take(s, 0, axis=axis)
        b = np.take(s, 1, axis=axis)
        s = np.stack([r * (a + b), r * (a - b)], axis=axis)
    return s.reshape(-1)
