"""PEB-minimizing beam allocation via semidefinite programming.

Both solvers minimize ``sum_k [J_car^-1]_kk`` over the position entries using
the Schur-complement LMIs ``[[J, e_k], [e_k^T, u_k]] >= 0``. The FIM is
linear in the Hermitian variable ``L``: ``J = c Re{G^H L G}``. With
``G = Gr + j Gi`` this equals ``H^T Z H`` where ``H = [Gr; Gi]`` and ``Z`` is
the real symmetric embedding ``[[Re L, -Im L], [Im L, Re L]]``, so the
problem is posed directly over real PSD cones.
"""
import enum
import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import BasisDegenerate, CapacityError
from .fim import Scenario

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_FULL_X_ELEMENTS = 64


class SolverStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INACCURATE = "Inaccurate"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class BeamBasis:
    """Precoder-domain beams as columns of ``U`` (M x 4).

    Column order is directional beam, then range, azimuth and elevation
    derivative beams. Gains are ``|u^T a(p)|^2``.
    """

    U: np.ndarray
    orthonormalized: bool

    @property
    def M(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class LambdaAllocation:
    Lam: np.ndarray
    diagonal_only: bool
    budget: float

    @property
    def weights(self) -> np.ndarray:
        return np.real(np.diag(self.Lam))


@dataclass(frozen=True)
class SdpSolution:
    allocation: LambdaAllocation
    objective: float
    peb_at_optimum: float
    solver_status: SolverStatus
    u: np.ndarray = field(default_factory=lambda: np.full(3, np.nan))


def _mgs(V, passes=2):
    """Modified Gram-Schmidt with re-orthogonalization; returns unit columns."""
    Q = np.array(V, dtype=complex)
    n = Q.shape[1]
    for k in range(n):
        norm0 = np.linalg.norm(Q[:, k])
        for _ in range(passes):
            for i in range(k):
                Q[:, k] -= (Q[:, i].conj() @ Q[:, k]) * Q[:, i]
        nk = np.linalg.norm(Q[:, k])
        if norm0 == 0 or nk <= 1e-10 * norm0:
            raise BasisDegenerate(f"basis column {k} is linearly dependent on the previous ones")
        Q[:, k] /= nk
    return Q


def build_beam_basis(bundle, orthonormalize: bool = True) -> BeamBasis:
    """Directional and derivative beams ``conj([a, a_rho, a_theta, a_phi])``.

    With ``orthonormalize`` the columns are Gram-Schmidt orthogonalized in
    that order and rescaled to squared norm M, so ``U^H U = M I``.
    """
    U = np.conj(np.column_stack([bundle.a, bundle.d_rho, bundle.d_theta, bundle.d_phi]))
    if orthonormalize:
        M = U.shape[0]
        U = _mgs(U) * np.sqrt(M)
    return BeamBasis(U, orthonormalize)


def _status_of(prob):
    if prob.status == cp.OPTIMAL:
        return SolverStatus.OPTIMAL
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return SolverStatus.INFEASIBLE
    return SolverStatus.INACCURATE


def _solve(prob, tol):
    try:
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol,
                   max_iter=500)
    except cp.SolverError as exc:
        log.warning("CLARABEL failed (%s); retrying with SCS", exc)
        prob.solve(solver=cp.SCS, eps=max(tol, 1e-9), max_iters=100_000)
    return _status_of(prob)


def _whitened_problem(Hs, w, diagonal_only, ref_L, tol):
    n = Hs.shape[0] // 2
    # whiten around a reference allocation: J_s = R^T Jw R, and
    # [J_s^-1]_kk = t_k^T Jw^-1 t_k with t_k = R^-T e_k
    Zref = np.block([[ref_L.real, -ref_L.imag], [ref_L.imag, ref_L.real]])
    R = np.linalg.cholesky(Hs.T @ Zref @ Hs).T
    R_inv = np.linalg.inv(R)
    Hw = Hs @ R_inv
    T = R_inv.T

    u = cp.Variable(3)
    if diagonal_only:
        lam = cp.Variable(n, nonneg=True)
        J = Hw.T @ cp.diag(cp.hstack([lam, lam])) @ Hw
        cons = [cp.sum(lam) == 1]
    else:
        Z = cp.Variable((2 * n, 2 * n), PSD=True)
        J = Hw.T @ Z @ Hw
        cons = [
            Z[:n, :n] == Z[n:, n:],
            Z[:n, n:] == -Z[n:, :n],
            cp.trace(Z[:n, :n]) == 1,
        ]
    J = 0.5 * (J + J.T)
    for k in range(3):
        t = T[:, k:k + 1]
        cons.append(cp.bmat([[J, t], [t.T, cp.reshape(u[k], (1, 1), order="C")]]) >> 0)
    prob = cp.Problem(cp.Minimize(w @ u), cons)
    status = _solve(prob, tol)
    if status is SolverStatus.INFEASIBLE or u.value is None:
        return None, np.inf, None, SolverStatus.INFEASIBLE
    if diagonal_only:
        L = np.diag(np.clip(lam.value, 0, None)).astype(complex)
    else:
        Zv = Z.value
        L = Zv[:n, :n] + 1j * Zv[n:, :n]
        L = 0.5 * (L + L.conj().T)
    return L / np.real(np.trace(L)), float(prob.value), np.asarray(u.value), status


def min_position_crb(G, diagonal_only=False, tol=DEFAULT_TOL):
    """Minimize ``sum_{k<3} [J^-1]_kk`` with ``J = Re{G^H L G}``, ``tr L = 1``, ``L >= 0``.

    Parameters
    ----------
    G : ndarray, shape (n, 5)
        Complex map from the n x n Hermitian variable to the Cartesian FIM.
    diagonal_only : bool
        Restrict ``L`` to a nonnegative diagonal.
    tol : float
        Solver gap/feasibility tolerance.

    Returns
    -------
    L : ndarray, shape (n, n)
        Optimal (Hermitian) variable with unit trace.
    value : float
        Optimal objective in the units of ``G``.
    u : ndarray, shape (3,)
        Epigraph variables in the same units.
    status : SolverStatus
    """
    G = np.asarray(G, dtype=complex)
    n = G.shape[0]
    H = np.vstack([G.real, G.imag])
    fail = (np.eye(n, dtype=complex) / n, np.inf, np.full(3, np.inf), SolverStatus.INFEASIBLE)
    if np.linalg.matrix_rank(H) < 5:
        return fail

    # Jacobi scaling: [J^-1]_kk = D_k^2 [J_s^-1]_kk with J_s = D J D
    D = 1.0 / np.linalg.norm(H, axis=0)
    w = D[:3] ** 2
    w_max = w.max()
    Hs = H * D

    ref = np.eye(n, dtype=complex) / n
    L, value, u, status = _whitened_problem(Hs, w / w_max, diagonal_only, ref, tol)
    if status is SolverStatus.INACCURATE:
        # second pass, whitened around the first iterate
        ref = 0.5 * (L / np.real(np.trace(L))) + 0.5 * ref
        L2, value2, u2, status2 = _whitened_problem(Hs, w / w_max, diagonal_only, ref, tol)
        if status2 is SolverStatus.OPTIMAL or (L2 is not None and value2 <= value):
            L, value, u, status = L2, value2, u2, status2
    if L is None:
        return fail
    return L, value * w_max, u * w, status


def _clean_psd(L):
    ev, V = np.linalg.eigh(0.5 * (L + L.conj().T))
    ev = np.clip(ev, 0, None)
    return (V * ev) @ V.conj().T


def solve_lambda_sdp(basis: BeamBasis, scenario: Scenario, budget: float,
                     diagonal_only: bool = False, tol: float = DEFAULT_TOL) -> SdpSolution:
    """Optimal 4x4 beam allocation ``Lam`` with ``tr(Lam) = budget``.

    The precoder covariance is ``X = conj(U) Lam U^T``. For orthonormalized
    (or unit-modulus with diagonal ``Lam``) bases this satisfies
    ``tr(X) = M * budget``.
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    G = basis.U.T @ scenario.B_car
    L, value, u, status = min_position_crb(G, diagonal_only, tol)
    scale = scenario.snr.factor * budget
    Lam = budget * (np.diag(np.real(np.diag(L))).astype(complex) if diagonal_only else _clean_psd(L))
    alloc = LambdaAllocation(Lam, diagonal_only, float(budget))
    if status is SolverStatus.INFEASIBLE:
        return SdpSolution(alloc, np.inf, np.inf, status, u)
    # the infimum is often approached with the directional weight -> 0, where
    # J itself turns singular; the bound is read from the objective instead
    objective = value / scale
    return SdpSolution(alloc, objective, float(np.sqrt(objective)), status, u / scale)


def solve_full_x_sdp(scenario: Scenario, budget: float, tol: float = DEFAULT_TOL):
    """Relaxed problem over the full M x M covariance with ``tr(X) = M * budget``.

    Returns ``(X, objective)``; ``objective`` is the minimal sum of position
    CRBs (the squared PEB), ``inf`` when the FIM is structurally singular.
    """
    M = scenario.arr.M
    if M > MAX_FULL_X_ELEMENTS:
        raise CapacityError(f"full-X SDP limited to M <= {MAX_FULL_X_ELEMENTS}, got {M}")
    if not budget > 0:
        raise ValueError("budget must be positive")
    L, value, _, status = min_position_crb(scenario.B_car, False, tol)
    if status is SolverStatus.INACCURATE:
        log.warning("full-X SDP returned an inaccurate solution")
    X = M * budget * _clean_psd(L)
    return X, value / (scenario.snr.factor * M * budget)


def lambda_to_weights(sol: SdpSolution) -> np.ndarray:
    """Relative beam frequencies ``lambda_i / tr(Lam)`` of a diagonal allocation."""
    if not sol.allocation.diagonal_only:
        raise ValueError("relative weights require a diagonal_only allocation")
    lam = np.clip(sol.allocation.weights, 0, None)
    return lam / lam.sum()
