"""Free-fermion image of the Ising and cluster-Ising chains.

Jordan-Wigner convention (fixed here once, validated against dense
diagonalization for N <= 10): sigma^x_n = 1 - 2 c+_n c_n and
sigma^z_n sigma^z_{n+1} = (c+_n - c_n)(c+_{n+1} + c_{n+1}), so

    H = sum_nm c+_n A_nm c_m + 1/2 sum_nm (B_nm c+_n c+_m - B_nm c_n c_m)
      = 1/2 Psi+ [[A, B], [-B, -A]] Psi,        Psi = (c_1..c_N, c+_1..c+_N)

with A_nn = 2 g_n, A_{n,n+1} = -J_n, B_{n,n+1} = -B_{n+1,n} = -J_n, and the
three-local sigma^z sigma^x sigma^z terms filling the same pattern at
distance two with K_n.  The spin Hamiltonian equals 1/2 Psi+ H_BdG Psi
exactly (the normal-ordering constant cancels against the field constant),
so the ground energy is -1/2 sum_m eps_m.  Quasiparticle energies are the
singular values of C = A + B; for the open Ising chain C is upper
bidiagonal and the spectrum reduces to a Golub-Kahan tridiagonal problem.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, svd

__all__ = [
    "QuadraticForm",
    "SpectrumResult",
    "GapSample",
    "FormInvariantError",
    "build_quadratic",
    "field_derivative_form",
    "diagonalize",
    "bdg_matrix",
    "lowest_modes",
    "relevant_gap_and_omega",
    "relevant_pair_from_modes",
]

_SYM_TOL = 1e-12


class FormInvariantError(ValueError):
    """A or B violate their (anti)symmetry invariants beyond tolerance."""


@dataclass(frozen=True)
class QuadraticForm:
    """Single-particle blocks of 1/2 Psi+ [[A, B], [-B, -A]] Psi."""

    A: np.ndarray
    B: np.ndarray
    model: str = "ising"  # "ising" | "cluster_ising"
    periodic: bool = False

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A and B must be square matrices of equal shape")
        scale = max(1.0, np.abs(A).max(initial=0.0), np.abs(B).max(initial=0.0))
        if np.abs(A - A.T).max(initial=0.0) > _SYM_TOL * scale:
            raise FormInvariantError("A is not symmetric")
        if np.abs(B + B.T).max(initial=0.0) > _SYM_TOL * scale:
            raise FormInvariantError("B is not antisymmetric")

    @property
    def n_modes(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class SpectrumResult:
    """Quasiparticle energies (ascending, >= 0), modes (u, v), ground energy.

    Columns u[:, m], v[:, m] define the annihilators of the ground state,
    eta_m = sum_n (u_nm c_n + v_nm c+_n); mode signs are a gauge.
    """

    energies: np.ndarray
    u: np.ndarray
    v: np.ndarray
    ground_energy: float


@dataclass(frozen=True)
class GapSample:
    """One relevant instantaneous gap and its transition matrix element."""

    delta: float
    omega: float
    front_pos: float = float("nan")
    alpha: float = float("nan")
    seed: int = -1
    time: float = float("nan")
    pair: tuple[int, int] = (-1, -1)


def build_quadratic(realization, fields, periodic=False, j_wrap=None):
    """Assemble the BdG blocks for given site fields g (array of length N).

    Open boundaries by default.  With `periodic`, the wrap bond j_wrap enters
    in the even-parity sector, i.e. with its sign reversed relative to bulk
    bonds (the parity operator in the Jordan-Wigner string makes the fermion
    problem anti-periodic there); only the Ising model supports it.
    """
    N = realization.N
    g = np.asarray(fields, dtype=float)
    if g.shape != (N,):
        raise ValueError(f"fields must have shape ({N},), got {g.shape}")
    A = np.zeros((N, N))
    B = np.zeros((N, N))
    A[np.arange(N), np.arange(N)] = 2.0 * g
    J = realization.J
    i = np.arange(N - 1)
    A[i, i + 1] = -J
    A[i + 1, i] = -J
    B[i, i + 1] = -J
    B[i + 1, i] = J
    model = "ising"
    if realization.K is not None:
        model = "cluster_ising"
        K = realization.K
        i = np.arange(N - 2)
        A[i, i + 2] = -K
        A[i + 2, i] = -K
        B[i, i + 2] = -K
        B[i + 2, i] = K
    if periodic:
        if model != "ising":
            raise ValueError("periodic boundaries implemented for the Ising model only")
        if j_wrap is None:
            raise ValueError("periodic chain needs the wrap coupling j_wrap")
        A[N - 1, 0] += j_wrap
        A[0, N - 1] += j_wrap
        B[N - 1, 0] += j_wrap
        B[0, N - 1] += -j_wrap
    return QuadraticForm(A=A, B=B, model=model, periodic=periodic)


def field_derivative_form(realization, dg):
    """Form of dH w.r.t. a field-profile perturbation dg (diagonal in A)."""
    N = realization.N
    dA = np.zeros((N, N))
    dA[np.arange(N), np.arange(N)] = 2.0 * np.asarray(dg, dtype=float)
    return QuadraticForm(A=dA, B=np.zeros((N, N)), model="ising")


def bdg_matrix(form):
    """Dense 2N x 2N matrix [[A, B], [-B, -A]]."""
    return np.block([[form.A, form.B], [-form.B, -form.A]])


def diagonalize(form):
    """Full BdG spectrum via singular values of C = A + B.

    With phi = u + v and psi = u - v the BdG equations read
    C phi_m = eps_m psi_m and C^T psi_m = eps_m phi_m, i.e. phi_m is a right
    and psi_m a left singular vector of C.  Energies ascend, ties keep
    LAPACK order.  Ground energy is -1/2 sum eps_m.
    """
    C = form.A + form.B
    N = form.n_modes
    # Ising open chains leave C upper bidiagonal: use the Golub-Kahan
    # tridiagonal eigenproblem, which is much faster and more accurate on
    # small singular values.
    if not form.periodic and N >= 2 and _bidiagonal_bands(C) is not None:
        d, e = _bidiagonal_bands(C)
        eps, phi, psi = _golub_kahan_modes(d, e)
    else:
        left, s, right_t = svd(C)
        order = np.argsort(s, kind="stable")
        eps = s[order]
        phi = right_t[order, :].T
        psi = left[:, order]
    u = 0.5 * (phi + psi)
    v = 0.5 * (phi - psi)
    return SpectrumResult(
        energies=eps, u=u, v=v, ground_energy=-0.5 * float(np.sum(eps))
    )


def _bidiagonal_bands(C):
    """(diag, superdiag) if C is upper bidiagonal, else None."""
    N = C.shape[0]
    d = np.diagonal(C).copy()
    e = np.diagonal(C, 1).copy()
    nz = np.count_nonzero(C)
    if nz == np.count_nonzero(d) + np.count_nonzero(e):
        return d, e
    return None


def _golub_kahan_offdiag(d, e):
    N = len(d)
    off = np.empty(2 * N - 1)
    off[0::2] = d
    off[1::2] = e
    return off


def _golub_kahan_modes(d, e, select_range=None):
    """Modes of the bidiagonal problem via the interleaved tridiagonal.

    Eigenvectors z of the 2N tridiagonal [[0, C], [C^T, 0]] (perfect-shuffle
    ordering) split into the left part x_i = z[2i+1] and right part
    y_i = z[2i]; C y = eps x, so phi = sqrt(2) y and psi = sqrt(2) x.  The
    positive half of the spectrum (ascending) is returned.
    """
    N = len(d)
    off = _golub_kahan_offdiag(d, e)
    if select_range is None:
        w, Z = eigh_tridiagonal(np.zeros(2 * N), off)
        # spectrum is symmetric +-eps; the upper half (by index, robust for
        # near-zero modes) is the quasiparticle branch
        eps = w[N:]
        Z = Z[:, N:]
    else:
        lo, hi = select_range
        eps, Z = eigh_tridiagonal(
            np.zeros(2 * N), off, select="i", select_range=(lo, hi)
        )
    phi = np.sqrt(2.0) * Z[0::2, :]
    psi = np.sqrt(2.0) * Z[1::2, :]
    return eps, phi, psi


def lowest_modes(form, k):
    """The k smallest quasiparticle energies with modes (fast partial path).

    Falls back to the full spectrum when the form has no bidiagonal
    structure.  Returns (energies, u, v) with energies ascending.
    """
    N = form.n_modes
    k = min(k, N)
    C = form.A + form.B
    bands = None if form.periodic else _bidiagonal_bands(C)
    if bands is not None and N >= 2:
        d, e = bands
        eps, phi, psi = _golub_kahan_modes(d, e, select_range=(N, N + k - 1))
        u = 0.5 * (phi + psi)
        v = 0.5 * (phi - psi)
        return eps, u, v
    res = diagonalize(form)
    return res.energies[:k], res.u[:, :k], res.v[:, :k]


def _pair_element(u, v, dA, dB, a, b):
    # <gs| dH |ab> for the quadratic perturbation with blocks (dA, dB):
    # Pair_ab = (u^T dA v - v^T dA u + u^T dB u - v^T dB v)_ab
    if dA.ndim == 1:
        ua, va, ub, vb = u[:, a], v[:, a], u[:, b], v[:, b]
        val = np.dot(ua * dA, vb) - np.dot(va * dA, ub)
    else:
        val = u[:, a] @ dA @ v[:, b] - v[:, a] @ dA @ u[:, b]
    if dB is not None:
        val += u[:, a] @ dB @ u[:, b] - v[:, a] @ dB @ v[:, b]
    return val


def relevant_pair_from_modes(eps, u, v, dA, dB=None, threshold=1e-3, delta_cap=np.inf):
    """Smallest two-quasiparticle gap whose transition element is relevant.

    Enumerates pairs (a <= b) in ascending eps_a + eps_b and returns the
    first with |Omega_ab| / (eps_a + eps_b) >= threshold as a GapSample, or
    None when no candidate qualifies (the diagonal a = b has Omega = 0
    identically and never qualifies).  Quadratic perturbations only connect
    the even-parity ground state to two-quasiparticle states, so the search
    space is exactly the ground-parity sector.
    """
    m = len(eps)
    if m < 2:
        return None
    dA = np.asarray(dA)
    seen = {(0, 1)}
    heap = [(eps[0] + eps[1], 0, 1)]
    while heap:
        s, a, b = heapq.heappop(heap)
        if s > delta_cap:
            return None
        if s > 0:
            omega = abs(_pair_element(u, v, dA, dB, a, b))
            if omega / s >= threshold:
                return GapSample(delta=float(s), omega=float(omega), pair=(a, b))
        for na, nb in ((a, b + 1), (a + 1, b)):
            if na < nb < m and (na, nb) not in seen:
                seen.add((na, nb))
                heapq.heappush(heap, (eps[na] + eps[nb], na, nb))
    return None


def relevant_gap_and_omega(form, d_form, threshold=1e-3):
    """Relevant gap and transition element for a form and its derivative form.

    Diagonalizes `form`, then searches two-quasiparticle candidates; see
    relevant_pair_from_modes.  Returns a GapSample or None.
    """
    if d_form.n_modes != form.n_modes:
        raise ValueError("form and derivative size mismatch")
    res = diagonalize(form)
    dA = d_form.A
    if np.count_nonzero(dA - np.diag(np.diagonal(dA))) == 0:
        dA = np.diagonal(dA).copy()
    dB = d_form.B if np.any(d_form.B) else None
    return relevant_pair_from_modes(
        res.energies, res.u, res.v, dA, dB, threshold=threshold
    )
