"""Scenario configuration: flat JSON with validated fields and link-budget helpers."""
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .array import RisArray, build_planar_ris
from .errors import ConfigError
from .fim import ChannelGain, Scenario, SnrScale

SPEED_OF_LIGHT = 299_792_458.0
GAIN_MODELS = ("free_space", "explicit")


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters; defaults reproduce the reference 28 GHz setup."""

    fc: float = 28e9
    bandwidth: float = 120e3
    n0_dbm_hz: float = -174.0
    noise_figure_db: float = 8.0
    ptx_dbm: float = 20.0
    T: int = 40
    ris_rows: int = 32
    ris_cols: int = 32
    spacing_over_lambda: float = 0.5
    p_bs: tuple = (5.0, 5.0, 0.0)
    p_ue: tuple = (1.0, 2.0, 1.0)
    gain_model: str = "free_space"
    beta_r: float = 1.0
    beta_i: float = 0.0
    seed: int = 0
    solver_tol: float = 1e-8
    n_points: int = 64
    directional_radii: tuple = (0.5, 2.0)
    # reserved for a worst-case-over-region objective; must stay null
    worst_case_radius: float | None = None

    def __post_init__(self):
        for name in ("fc", "bandwidth", "spacing_over_lambda", "solver_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for name in ("T", "ris_rows", "ris_cols", "n_points"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.gain_model not in GAIN_MODELS:
            raise ConfigError("gain_model", f"must be one of {GAIN_MODELS}")
        if self.gain_model == "explicit" and self.beta_r == 0 and self.beta_i == 0:
            raise ConfigError("beta_r", "explicit gain must be nonzero")
        if any(r < 0 for r in self.directional_radii):
            raise ConfigError("directional_radii", "radii must be nonnegative")
        if self.worst_case_radius is not None:
            raise ConfigError("worst_case_radius", "worst-case objective is not implemented")
        for name in ("p_bs", "p_ue"):
            p = getattr(self, name)
            if np.hypot(p[0], p[1]) == 0:
                raise ConfigError(name, "position on the z-axis (azimuth undefined)")
            if not p[1] > 0:
                raise ConfigError(name, "position must lie in front of the RIS (y > 0)")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    @property
    def M(self) -> int:
        return self.ris_rows * self.ris_cols

    def build_array(self) -> RisArray:
        lam = self.wavelength
        return build_planar_ris(self.ris_rows, self.ris_cols, self.spacing_over_lambda * lam, lam)

    def snr(self) -> SnrScale:
        return SnrScale.from_link_budget(self.ptx_dbm, self.bandwidth, self.n0_dbm_hz,
                                         self.noise_figure_db)

    def gain(self, p_ue) -> ChannelGain:
        if self.gain_model == "explicit":
            return ChannelGain(self.beta_r, self.beta_i)
        return ChannelGain.free_space(self.wavelength, float(np.linalg.norm(self.p_bs)),
                                      float(np.linalg.norm(p_ue)))

    def scenario(self, p_ue=None, arr=None) -> Scenario:
        p = np.asarray(self.p_ue if p_ue is None else p_ue, float)
        return Scenario.build(arr or self.build_array(), p, self.gain(p), self.snr())

    def replace(self, **changes) -> "ScenarioConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return ScenarioConfig(**data)


_FIELD_TYPES = {f.name: f for f in fields(ScenarioConfig)}
_INT_FIELDS = {"T", "ris_rows", "ris_cols", "seed", "n_points"}
_POINT_FIELDS = {"p_bs", "p_ue"}


def _coerce(name, value):
    if name == "gain_model":
        if not isinstance(value, str):
            raise ConfigError(name, "must be a string")
        return value
    if name == "worst_case_radius":
        return value
    if name in _POINT_FIELDS:
        if (not isinstance(value, (list, tuple)) or len(value) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ConfigError(name, "must be a list of 3 numbers")
        return tuple(float(v) for v in value)
    if name == "directional_radii":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) for v in value):
            raise ConfigError(name, "must be a list of numbers")
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, "must be a number")
    if name in _INT_FIELDS:
        if float(value) != int(value):
            raise ConfigError(name, "must be an integer")
        return int(value)
    if not np.isfinite(value):
        raise ConfigError(name, "must be finite")
    return float(value)


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kwargs = {}
    for key, value in data.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        kwargs[key] = _coerce(key, value)
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    """Read a flat JSON config; an empty file yields all defaults."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return ScenarioConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return config_from_dict(data)
