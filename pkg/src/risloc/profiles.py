"""Unit-modulus RIS profiles and integer time sharing of the optimal beams.

A continuous beam ``u`` is turned into a feasible profile by matching its
gain pattern ``|u^T a(p)|`` on a small grid of points around the UE with a
phase-only vector. The optimal weights are then rounded to a schedule of
``total_T`` transmissions.
"""
from dataclasses import dataclass, field

import numpy as np

from .array import steering
from .design import (
    DEFAULT_TOL, BeamBasis, SdpSolution, lambda_to_weights, solve_lambda_sdp,
)
from .errors import InvalidBeam, ScheduleError
from .fim import Scenario
from .geometry import cart_to_sph, sph_to_cart


N_BEAMS = 4
PIPELINES = ("A", "B")


@dataclass(frozen=True)
class ProjectionParams:
    """Settings of the projected-gradient pattern matcher.

    Attributes
    ----------
    n_points : int
        Number of pattern sample points N.
    max_iters : int
        Iteration cap.
    step_shrink : float
        Backtracking factor in (0, 1).
    tol : float
        Stop once the relative objective change drops below this.
    rho_span, angle_span : float
        Half-widths of the sample cuts: relative in range, radians in angle.
    """

    n_points: int = 64
    max_iters: int = 500
    step_shrink: float = 0.5
    tol: float = 1e-4
    rho_span: float = 0.2
    angle_span: float = np.deg2rad(10.0)

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ProfileSchedule:
    """Four unit-modulus beams (rows of ``beams``) and their integer repeat counts."""

    beams: np.ndarray
    allocations: np.ndarray
    total_T: int
    weights: np.ndarray = field(default_factory=lambda: np.full(N_BEAMS, np.nan))
    pipeline: str = ""

    def __post_init__(self):
        alloc = np.asarray(self.allocations, dtype=int)
        if alloc.sum() != self.total_T:
            raise ScheduleError(f"allocations sum to {alloc.sum()}, expected {self.total_T}")
        object.__setattr__(self, "allocations", alloc)

    def profiles(self) -> np.ndarray:
        """Expand into the M x total_T profile matrix, beams in order."""
        return np.repeat(np.asarray(self.beams).T, self.allocations, axis=1)


def pattern_points(p, n_points=64, rho_span=0.2, angle_span=np.deg2rad(10.0)) -> np.ndarray:
    """Sample points on the rho, theta and phi cuts through ``p``, shape (n_points, 3).

    The points are split as evenly as possible over the three cuts; a single
    point is ``p`` itself.
    """
    s = cart_to_sph(p)
    if n_points == 1:
        return np.asarray(p, float)[None, :]
    counts = [len(c) for c in np.array_split(np.arange(n_points), 3)]
    halfw = [rho_span * s.rho, angle_span, angle_span]
    pts = []
    for k, (n, hw) in enumerate(zip(counts, halfw)):
        if n == 0:
            continue
        grid = s[k] + np.linspace(-hw, hw, n) if n > 1 else np.array([s[k]])
        for v in grid:
            coords = list(s)
            coords[k] = v
            pts.append(sph_to_cart(coords))
    return np.array(pts)


def _pattern_matrix(arr, pts):
    return np.array([steering(arr, q) for q in pts])


def pattern_objective(f, u, A) -> float:
    """``sum_n (|f^T a_n| - c |u^T a_n|)^2`` with ``c = sqrt(M) / ||u||``."""
    c = np.sqrt(len(u)) / np.linalg.norm(u)
    r = np.abs(A @ f) - c * np.abs(A @ u)
    return float(r @ r)


def phase_only(u) -> np.ndarray:
    """``exp(j arg(u))``; zero entries get phase 0."""
    u = np.asarray(u, complex)
    return np.exp(1j * np.angle(u))


def project_unit_modulus(u, params: ProjectionParams, arr, p, return_history=False):
    """Phase-only profile whose gain pattern around ``p`` best matches ``u``.

    Projected gradient descent on the pattern objective, starting from the
    phase-only vector. A step is accepted only if it lowers the objective,
    so the result is never worse than the initialization.

    Parameters
    ----------
    u : array_like, shape (M,)
        Continuous beam in the precoder domain.
    params : ProjectionParams
    arr : RisArray
    p : array_like, shape (3,)
        Center of the pattern grid.
    return_history : bool
        Also return the objective after every accepted iterate.

    Returns
    -------
    f : ndarray, shape (M,)
        Unit-modulus profile.
    history : list of float
        Only when ``return_history`` is set.
    """
    u = np.asarray(u, complex)
    if u.ndim != 1 or u.shape[0] != arr.M:
        raise ValueError(f"beam must have length M={arr.M}")
    if not np.any(np.abs(u) > 0):
        raise InvalidBeam("beam is identically zero")
    if np.all(np.abs(np.abs(u) - 1) <= 1e-12):
        # already feasible, and its own pattern: a fixed point
        return (u.copy(), [0.0]) if return_history else u.copy()

    A = _pattern_matrix(arr, pattern_points(p, params.n_points, params.rho_span, params.angle_span))
    target = np.sqrt(arr.M) / np.linalg.norm(u) * np.abs(A @ u)

    def objective(f):
        r = np.abs(A @ f) - target
        return float(r @ r)

    f = phase_only(u)
    obj = objective(f)
    history = [obj]
    step0 = 1.0 / np.linalg.norm(A, 2) ** 2
    step = step0
    for _ in range(params.max_iters):
        if obj == 0.0:
            break
        s = A @ f
        mag = np.abs(s)
        unit = np.divide(s, mag, out=np.zeros_like(s), where=mag > 0)
        grad = A.conj().T @ ((mag - target) * unit)
        accepted = False
        while step > 1e-12 * step0:
            cand = phase_only(f - step * grad)
            cand_obj = objective(cand)
            if cand_obj < obj:
                accepted = True
                break
            step *= params.step_shrink
        if not accepted:
            break
        rel = (obj - cand_obj) / obj
        f, obj = cand, cand_obj
        history.append(obj)
        # let the step recover after a successful move
        step = min(step / params.step_shrink, 1e3 * step0)
        if rel < params.tol:
            break
    if return_history:
        return f, history
    return f


def quantize_phases(f, levels=4) -> np.ndarray:
    """Snap every phase to the nearest of ``levels`` uniform points (4 gives {1, j, -1, -j})."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    q = 2 * np.pi / levels
    return np.exp(1j * q * np.round(np.angle(f) / q))


def project_basis(basis: BeamBasis, scenario: Scenario, params: ProjectionParams | None = None,
                  quantize_levels=None) -> BeamBasis:
    """Project every column of ``basis.U``; the result has unit-modulus columns."""
    params = params or ProjectionParams()
    cols = []
    for k in range(basis.U.shape[1]):
        f = project_unit_modulus(basis.U[:, k], params, scenario.arr, scenario.p)
        if quantize_levels:
            f = quantize_phases(f, quantize_levels)
        cols.append(f)
    return BeamBasis(np.column_stack(cols), orthonormalized=False)


def allocate_time(weights, total_T: int) -> np.ndarray:
    """Integer repeat counts, at least one per beam, summing to ``total_T``.

    Beams whose proportional share of the remaining budget falls below one
    are pinned to a single use; this is repeated until every other share is
    at least one. The rest is split by largest remainder, ties going to the
    larger weight and then the lower index.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (N_BEAMS,):
        raise ValueError(f"expected {N_BEAMS} weights")
    if np.any(w < -1e-12) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-6):
        raise ValueError("weights must be nonnegative and sum to 1")
    total_T = int(total_T)
    if total_T < N_BEAMS:
        raise ScheduleError(f"total_T={total_T} cannot give each of {N_BEAMS} beams one slot")
    w = np.clip(w, 0, None)
    w = w / w.sum()

    out = np.zeros(N_BEAMS, dtype=int)
    free = np.ones(N_BEAMS, dtype=bool)
    while True:
        remaining = total_T - out[~free].sum()
        wsum = w[free].sum()
        quota = np.where(free, w * remaining / wsum if wsum > 0 else 0.0, 0.0)
        pin = free & (quota < 1)
        if not pin.any():
            break
        out[pin] = 1
        free &= ~pin
        if not free.any():
            break

    if free.any():
        base = np.floor(quota).astype(int)
        out[free] = base[free]
        left = remaining - base[free].sum()
        # rounded so that float noise cannot split genuine ties
        frac = np.round(quota - base, 9)
        order = sorted(np.flatnonzero(free), key=lambda i: (-frac[i], -w[i], i))
        for i in order[:left]:
            out[i] += 1
    else:
        # every share was pinned; hand the surplus to the largest weights
        left = total_T - out.sum()
        order = sorted(range(N_BEAMS), key=lambda i: (-w[i], i))
        for j in range(left):
            out[order[j % N_BEAMS]] += 1
    return out


def make_schedule(sol: SdpSolution, basis: BeamBasis, params: ProjectionParams | None,
                  total_T: int, *, scenario: Scenario, pipeline: str = "B",
                  projected: BeamBasis | None = None, tol: float = DEFAULT_TOL,
                  quantize_levels=None) -> ProfileSchedule:
    """Feasible time-shared schedule from a diagonal beam allocation.

    Pipeline ``"A"`` projects the optimal beams and keeps the weights of
    ``sol``. Pipeline ``"B"`` projects first, re-solves the diagonal
    allocation on the projected beams, then rounds. ``projected`` may be
    passed to reuse an earlier projection of ``basis``.
    """
    if not sol.allocation.diagonal_only:
        raise ValueError("scheduling requires a diagonal_only allocation")
    if pipeline not in PIPELINES:
        raise ValueError(f"pipeline must be one of {PIPELINES}, got {pipeline!r}")
    if projected is None:
        projected = project_basis(basis, scenario, params, quantize_levels)
    if pipeline == "A":
        weights = lambda_to_weights(sol)
    else:
        resolved = solve_lambda_sdp(projected, scenario, 1.0, diagonal_only=True, tol=tol)
        weights = lambda_to_weights(resolved)
    alloc = allocate_time(weights, total_T)
    return ProfileSchedule(projected.U.T.copy(), alloc, int(total_T), weights, pipeline)
