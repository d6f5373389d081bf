"""Reference profile generators: random phases and a directional codebook."""
from dataclasses import dataclass

import numpy as np

from .array import steering
from .errors import DegenerateGeometry

QPSK = np.array([1, 1j, -1, -1j])
MAX_RESAMPLE = 100


@dataclass(frozen=True)
class RandomProfileConfig:
    seed: int = 0
    quantized: bool = False


@dataclass(frozen=True)
class DirectionalConfig:
    """Uncertainty ball radius ``r`` (m) around the presumed UE, and the seed."""

    r: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"radius must be nonnegative, got {self.r!r}")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_profiles(arr, T: int, cfg: RandomProfileConfig = RandomProfileConfig(), rng=None) -> np.ndarray:
    """M x T matrix of i.i.d. unit-modulus entries.

    Phases are uniform on [0, 2 pi), or uniform over {1, j, -1, -j} when
    ``cfg.quantized``. ``rng`` overrides the generator seeded from ``cfg``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    g = _rng(cfg.seed if rng is None else rng)
    if cfg.quantized:
        return QPSK[g.integers(0, 4, size=(arr.M, T))]
    return np.exp(2j * np.pi * g.random((arr.M, T)))


def sample_ball(center, r, n, rng) -> np.ndarray:
    """``n`` points uniform in volume inside the ball of radius ``r``."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radius = r * np.cbrt(rng.random(n))
    return np.asarray(center, float) + v * radius[:, None]


def directional_codebook(arr, p, T: int, cfg: DirectionalConfig = DirectionalConfig(), rng=None) -> np.ndarray:
    """M x T profiles, each phase-aligned toward a point drawn in the ball around ``p``.

    Column ``t`` is ``exp(j arg(conj(a(p_t))))`` so that ``a(p_t)^T f_t = M``.
    Draws that land on an element are redrawn, up to ``MAX_RESAMPLE`` times.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    g = _rng(cfg.seed if rng is None else rng)
    F = np.empty((arr.M, T), dtype=complex)
    for t in range(T):
        for _ in range(MAX_RESAMPLE):
            q = sample_ball(p, cfg.r, 1, g)[0]
            try:
                a = steering(arr, q)
            except DegenerateGeometry:
                continue
            break
        else:
            raise DegenerateGeometry(f"no valid sample around {p} after {MAX_RESAMPLE} draws")
        F[:, t] = np.exp(-1j * np.angle(a))
    return F
