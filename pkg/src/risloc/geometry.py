"""Cartesian/spherical conversions and the 5x5 parameter Jacobian.

Conventions: origin at the RIS phase center, theta is the azimuth measured
from +x in the xy-plane, phi the elevation measured from +z (phi in [0, pi]).
"""
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometry


class SphericalPoint(NamedTuple):
    rho: float
    theta: float
    phi: float


def _as_point(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    return p


def cart_to_sph(p) -> SphericalPoint:
    """Convert ``(x, y, z)`` to ``(rho, theta, phi)``.

    On the z-axis the azimuth is set to 0. The origin raises
    :class:`DegenerateGeometry`.
    """
    x, y, z = _as_point(p)
    rho = float(np.sqrt(x * x + y * y + z * z))
    if rho == 0.0:
        raise DegenerateGeometry("angles are undefined at the origin")
    theta = float(np.arctan2(y, x)) if (x != 0.0 or y != 0.0) else 0.0
    phi = float(np.arccos(np.clip(z / rho, -1.0, 1.0)))
    return SphericalPoint(rho, theta, phi)


def sph_to_cart(s) -> np.ndarray:
    rho, theta, phi = (float(v) for v in s)
    return np.array([
        rho * np.cos(theta) * np.sin(phi),
        rho * np.sin(theta) * np.sin(phi),
        rho * np.cos(phi),
    ])


def jacobian(p) -> np.ndarray:
    """Jacobian of (rho, theta, phi, beta_r, beta_i) w.r.t. (x, y, z, beta_r, beta_i).

    Parameters
    ----------
    p : array_like, shape (3,)
        Cartesian UE position, off the z-axis.

    Returns
    -------
    C : ndarray, shape (5, 5)
        ``C[i, j] = d zeta_sph[i] / d zeta_car[j]``; the channel-gain block
        is the 2x2 identity.
    """
    x, y, z = _as_point(p)
    r2xy = x * x + y * y
    if r2xy == 0.0:
        raise DegenerateGeometry("azimuth is undefined on the z-axis")
    rxy = np.sqrt(r2xy)
    rho2 = r2xy + z * z
    rho = np.sqrt(rho2)

    C = np.zeros((5, 5))
    C[0, :3] = (x / rho, y / rho, z / rho)
    C[1, :3] = (-y / r2xy, x / r2xy, 0.0)
    C[2, :3] = (x * z / (rxy * rho2), y * z / (rxy * rho2), -r2xy / (rxy * rho2))
    C[3, 3] = 1.0
    C[4, 4] = 1.0
    return C
