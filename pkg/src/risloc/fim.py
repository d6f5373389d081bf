"""Fisher information and position error bound for RIS-reflected observations.

Throughout, the precoder covariance is ``X = conj(F) @ F.T`` for a profile
matrix ``F`` (M x T), so that every FIM entry is a quadratic form
``b^H X b`` in the non-conjugated derivative columns ``b``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .array import RisArray, SteeringBundle, steering_derivatives
from .errors import ScheduleError, ShapeError
from .geometry import jacobian

# equilibrated condition number beyond which the FIM is treated as singular
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class ChannelGain:
    beta_r: float
    beta_i: float

    @property
    def value(self) -> complex:
        return complex(self.beta_r, self.beta_i)

    @classmethod
    def from_complex(cls, beta):
        return cls(float(np.real(beta)), float(np.imag(beta)))

    @classmethod
    def free_space(cls, wavelength, d_bs_ris, d_ris_ue, phase=0.0):
        """Cascaded free-space amplitude ``lambda^2 / ((4 pi)^2 d1 d2)``."""
        mag = wavelength**2 / ((4 * np.pi) ** 2 * d_bs_ris * d_ris_ue)
        return cls.from_complex(mag * np.exp(1j * phase))


@dataclass(frozen=True)
class SnrScale:
    """Symbol energy ``es`` (J) and effective noise PSD ``n0`` (W/Hz)."""

    es: float
    n0: float

    def __post_init__(self):
        if not (self.es > 0 and self.n0 > 0):
            raise ValueError("es and n0 must be positive")

    @property
    def factor(self) -> float:
        return 2 * self.es / self.n0

    @classmethod
    def from_link_budget(cls, ptx_dbm, bandwidth, n0_dbm_hz, noise_figure_db):
        es = 10 ** ((ptx_dbm - 30) / 10) / bandwidth
        n0 = 10 ** ((n0_dbm_hz + noise_figure_db - 30) / 10)
        return cls(es, n0)


@dataclass(frozen=True)
class FimResult:
    j_sph: np.ndarray
    j_car: np.ndarray
    peb: float


def derivative_matrix(bundle: SteeringBundle, beta: ChannelGain) -> np.ndarray:
    """Columns ``[beta a_rho, beta a_theta, beta a_phi, a, j a]``, shape (M, 5)."""
    b = beta.value
    return np.column_stack([
        b * bundle.d_rho, b * bundle.d_theta, b * bundle.d_phi, bundle.a, 1j * bundle.a,
    ])


def _quadratic_fim(G, snr, weights=None):
    # Re{G^H diag(w) G}, G rows are the per-observation derivative rows
    if weights is not None:
        G_w = G * np.asarray(weights, float)[:, None]
    else:
        G_w = G
    J = snr.factor * np.real(G.conj().T @ G_w)
    return 0.5 * (J + J.T)


def fim_spherical(bundle: SteeringBundle, beta: ChannelGain, X, snr: SnrScale) -> np.ndarray:
    """Spherical 5x5 FIM ``(2 Es/N0) Re{B^H X B}`` for a precoder covariance ``X``.

    Parameters
    ----------
    bundle : SteeringBundle
        Steering vector and derivatives at the UE position.
    beta : ChannelGain
    X : ndarray, shape (M, M)
        Hermitian precoder covariance ``conj(F) F^T``.
    snr : SnrScale

    Returns
    -------
    ndarray, shape (5, 5)
        Ordered as (rho, theta, phi, beta_r, beta_i).
    """
    X = np.asarray(X)
    M = bundle.a.shape[0]
    if X.shape != (M, M):
        raise ShapeError(f"X must be {M}x{M}, got {X.shape}")
    B = derivative_matrix(bundle, beta)
    J = snr.factor * np.real(B.conj().T @ X @ B)
    return 0.5 * (J + J.T)


def fim_spherical_from_profiles(bundle, beta, F, snr) -> np.ndarray:
    """Spherical FIM straight from the profile matrix, ``d mu / d zeta = F^T B``."""
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != bundle.a.shape[0]:
        raise ShapeError(f"F must be M x T with M={bundle.a.shape[0]}, got {F.shape}")
    return _quadratic_fim(F.T @ derivative_matrix(bundle, beta), snr)


def fim_cartesian(j_sph, C) -> np.ndarray:
    """Congruence ``C^T J_sph C`` into (x, y, z, beta_r, beta_i)."""
    j_sph = np.asarray(j_sph, float)
    C = np.asarray(C, float)
    if j_sph.shape != (5, 5) or C.shape != (5, 5):
        raise ShapeError("FIM and Jacobian must both be 5x5")
    J = C.T @ j_sph @ C
    return 0.5 * (J + J.T)


def _peb_single(J):
    d = np.diag(J).copy()
    if np.any(d <= 0) or not np.all(np.isfinite(J)):
        return np.inf
    s = 1.0 / np.sqrt(d)
    Js = J * np.outer(s, s)
    ev = np.linalg.eigvalsh(Js)
    if ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        return np.inf
    inv_s = scipy.linalg.cho_solve(scipy.linalg.cho_factor(Js), np.eye(5))
    crb = np.diag(inv_s)[:3] * s[:3] ** 2
    return float(np.sqrt(np.sum(crb)))


def peb(j_car):
    """Position error bound ``sqrt(tr([J^-1]_{xyz}))`` in meters.

    The matrix is equilibrated by its diagonal before the conditioning check,
    so the position and gain blocks may live on very different scales.
    Singular or ill-conditioned FIMs give ``inf``. A stack of matrices with
    shape (..., 5, 5) returns an array of bounds.
    """
    J = np.asarray(j_car, float)
    if J.shape[-2:] != (5, 5):
        raise ShapeError(f"expected (..., 5, 5), got {J.shape}")
    scale = np.max(np.abs(J)) if J.size else 0.0
    if not np.allclose(J, np.swapaxes(J, -1, -2), rtol=0, atol=1e-10 * max(scale, 1e-300)):
        raise ShapeError("FIM is not symmetric")
    if J.ndim == 2:
        return _peb_single(J)
    flat = J.reshape(-1, 5, 5)
    return np.array([_peb_single(j) for j in flat]).reshape(J.shape[:-2])


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate FIMs at one UE position."""

    arr: RisArray
    p: np.ndarray
    beta: ChannelGain
    snr: SnrScale
    bundle: SteeringBundle
    C: np.ndarray

    @classmethod
    def build(cls, arr, p, beta, snr):
        p = np.asarray(p, float)
        return cls(arr, p, beta, snr, steering_derivatives(arr, p), jacobian(p))

    @property
    def B_sph(self) -> np.ndarray:
        return derivative_matrix(self.bundle, self.beta)

    @property
    def B_car(self) -> np.ndarray:
        """Derivatives of the noiseless response w.r.t. (x, y, z, beta_r, beta_i)."""
        return self.B_sph @ self.C

    def _result(self, j_sph):
        j_car = fim_cartesian(j_sph, self.C)
        return FimResult(j_sph, j_car, peb(j_car))

    def fim_covariance(self, X) -> FimResult:
        return self._result(fim_spherical(self.bundle, self.beta, X, self.snr))

    def fim_profiles(self, F) -> FimResult:
        return self._result(fim_spherical_from_profiles(self.bundle, self.beta, F, self.snr))

    def fim_lambda(self, U, Lam) -> FimResult:
        """FIM for ``X = conj(U) Lam U^T`` without forming the M x M matrix."""
        G = np.asarray(U).T @ self.B_sph
        J = self.snr.factor * np.real(G.conj().T @ np.asarray(Lam) @ G)
        return self._result(0.5 * (J + J.T))

    def fim_weighted_beams(self, beams, weights) -> FimResult:
        """Sum of per-beam FIMs, beam ``i`` repeated ``weights[i]`` times."""
        beams = np.atleast_2d(np.asarray(beams))
        G = beams @ self.B_sph
        return self._result(_quadratic_fim(G, self.snr, weights))


def fim_from_schedule(schedule, scenario: Scenario) -> FimResult:
    """FIM of a time-shared schedule: ``sum_i T_i J(f_i)``."""
    alloc = np.asarray(schedule.allocations)
    if np.any(alloc < 0) or int(alloc.sum()) != int(schedule.total_T):
        raise ScheduleError(
            f"allocations {alloc.tolist()} do not sum to total_T={schedule.total_T}"
        )
    beams = np.asarray(schedule.beams)
    if beams.shape[0] != alloc.shape[0]:
        raise ScheduleError("one allocation per beam is required")
    return scenario.fim_weighted_beams(beams, alloc)
