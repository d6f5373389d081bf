"""RIS element layout and the near-field steering vector with its derivatives."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InvalidStep
from .geometry import SphericalPoint, cart_to_sph

# relative distance below which a UE is considered to sit on an element
_COINCIDENT = 1e-12


@dataclass(frozen=True)
class RisArray:
    """Planar RIS in the y=0 plane with its phase center at the origin.

    Attributes
    ----------
    element_positions : ndarray, shape (M, 3)
        Element coordinates in meters.
    wavelength : float
        Carrier wavelength in meters.
    """

    element_positions: np.ndarray
    wavelength: float

    def __post_init__(self):
        pos = np.array(self.element_positions, dtype=float).reshape(-1, 3)
        if pos.shape[0] < 1:
            raise ValueError("RIS needs at least one element")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "element_positions", pos)

    @property
    def M(self) -> int:
        return self.element_positions.shape[0]

    @property
    def phase_center(self) -> np.ndarray:
        return np.zeros(3)

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def aperture(self) -> float:
        """Largest element distance from the phase center (meters)."""
        return float(np.max(np.linalg.norm(self.element_positions, axis=1)))


@dataclass(frozen=True)
class SteeringBundle:
    """Steering vector and its partial derivatives w.r.t. (rho, theta, phi)."""

    a: np.ndarray
    d_rho: np.ndarray
    d_theta: np.ndarray
    d_phi: np.ndarray
    at_position: SphericalPoint

    @property
    def derivatives(self) -> np.ndarray:
        """Derivative beams stacked as columns, shape (M, 3)."""
        return np.column_stack([self.d_rho, self.d_theta, self.d_phi])


def build_planar_ris(rows: int, cols: int, spacing: float, wavelength: float) -> RisArray:
    """Uniform ``rows x cols`` grid in the xz-plane centered on the origin.

    Element ``(i, j)`` sits at ``x = (j - (cols-1)/2) * spacing``,
    ``z = (i - (rows-1)/2) * spacing``; elements are ordered row-major.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    x = (jj.ravel() - (cols - 1) / 2) * spacing
    z = (ii.ravel() - (rows - 1) / 2) * spacing
    pos = np.column_stack([x, np.zeros_like(x), z])
    return RisArray(pos, float(wavelength))


def _check_distance(d, scale):
    if np.min(d) <= _COINCIDENT * max(scale, 1.0):
        raise DegenerateGeometry("position coincides with a RIS element")


def path_difference(arr: RisArray, p) -> np.ndarray:
    """``||p - p_m|| - ||p||`` for every element, free of cancellation."""
    p = np.asarray(p, dtype=float)
    pm = arr.element_positions
    rho = np.linalg.norm(p)
    d = np.linalg.norm(p - pm, axis=1)
    _check_distance(d, rho)
    # d^2 - rho^2 = |p_m|^2 - 2 p.p_m
    return (np.einsum("ij,ij->i", pm, pm) - 2 * pm @ p) / (d + rho)


def steering(arr: RisArray, p) -> np.ndarray:
    """Near-field RIS response ``exp(-j k (||p - p_m|| - ||p - p_RIS||))``."""
    return np.exp(-1j * arr.wavenumber * path_difference(arr, p))


def _element_angles(arr):
    pm = arr.element_positions
    rho_m = np.linalg.norm(pm, axis=1)
    safe = np.where(rho_m > 0, rho_m, 1.0)
    phi_m = np.where(rho_m > 0, np.arccos(np.clip(pm[:, 2] / safe, -1, 1)), 0.0)
    # 0 or pi for elements in the y=0 plane; irrelevant when sin(phi_m) = 0
    theta_m = np.arctan2(pm[:, 1], pm[:, 0])
    return rho_m, theta_m, phi_m


def steering_sph(arr: RisArray, s) -> np.ndarray:
    """Steering vector evaluated directly from spherical UE coordinates."""
    rho, theta, phi = s
    rho_m, theta_m, phi_m = _element_angles(arr)
    cos_g = np.sin(phi) * np.sin(phi_m) * np.cos(theta - theta_m) + np.cos(phi) * np.cos(phi_m)
    d = np.sqrt(np.maximum(rho**2 + rho_m**2 - 2 * rho * rho_m * cos_g, 0.0))
    _check_distance(d, rho)
    diff = (rho_m**2 - 2 * rho * rho_m * cos_g) / (d + rho)
    return np.exp(-1j * arr.wavenumber * diff)


def steering_derivatives(arr: RisArray, p) -> SteeringBundle:
    """Steering vector and closed-form derivatives along rho, theta and phi.

    With ``d_m`` the UE-element distance written in spherical coordinates,
    each derivative is ``-j k g_m a_m`` where ``g_m`` is the partial
    derivative of ``d_m - rho``:

    * rho:   ``(rho - rho_m cos(gamma_m)) / d_m - 1``
    * theta: ``rho rho_m sin(phi) sin(phi_m) sin(theta - theta_m) / d_m``
    * phi:   ``-rho rho_m (cos(phi) sin(phi_m) cos(theta - theta_m)
      - sin(phi) cos(phi_m)) / d_m``

    and ``cos(gamma_m) = sin(phi) sin(phi_m) cos(theta - theta_m)
    + cos(phi) cos(phi_m)``.
    """
    s = cart_to_sph(p)
    a = steering(arr, p)
    rho, theta, phi = s
    rho_m, theta_m, phi_m = _element_angles(arr)

    sp, cp = np.sin(phi), np.cos(phi)
    spm, cpm = np.sin(phi_m), np.cos(phi_m)
    dth = theta - theta_m
    cos_g = sp * spm * np.cos(dth) + cp * cpm
    d = np.linalg.norm(np.asarray(p, float) - arr.element_positions, axis=1)

    g_rho = (rho - rho_m * cos_g) / d - 1.0
    g_theta = rho * rho_m * sp * spm * np.sin(dth) / d
    g_phi = -rho * rho_m * (cp * spm * np.cos(dth) - sp * cpm) / d

    scale = -1j * arr.wavenumber * a
    return SteeringBundle(a, scale * g_rho, scale * g_theta, scale * g_phi, s)


def fd_steering_derivatives(arr: RisArray, p, h: float = 1e-7) -> SteeringBundle:
    """Central-difference derivatives of the steering vector (test oracle).

    ``h`` is relative: the range step is ``h * rho`` and the angular steps are
    ``h`` radians. Truncation error grows as O(h^2).
    """
    if not h > 0:
        raise InvalidStep(f"finite-difference step must be positive, got {h!r}")
    s = cart_to_sph(p)
    steps = np.array([h * s.rho, h, h])
    derivs = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = steps[k]
        plus = steering_sph(arr, np.add(s, e))
        minus = steering_sph(arr, np.subtract(s, e))
        derivs.append((plus - minus) / (2 * steps[k]))
    return SteeringBundle(steering(arr, p), *derivs, s)
