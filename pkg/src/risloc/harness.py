"""Distance sweeps, beam-pattern cuts and CSV / plot-data emission."""
import contextlib
import csv
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array import steering
from .baselines import DirectionalConfig, RandomProfileConfig, directional_codebook, random_profiles
from .config import ScenarioConfig
from .design import build_beam_basis, solve_lambda_sdp
from .errors import DegenerateGeometry, RislocError
from .fim import fim_from_schedule
from .geometry import cart_to_sph, sph_to_cart
from .profiles import ProjectionParams, make_schedule, project_basis

log = logging.getLogger(__name__)

COLUMNS = ["distance_m", "range_m", "design", "peb_m",
           "lambda_1", "lambda_2", "lambda_3", "lambda_4", "status", "wall_time_s"]
DEFAULT_DISTANCES = tuple(float(d) for d in range(1, 16))
COORDINATES = ("rho", "theta", "phi")

# design kinds and whether the numeric suffix is a budget T (else a radius)
_KINDS = {
    "optimal": "T", "optimal-diag": "T", "feasible-diag": "T",
    "otc": "T", "cto": "T", "timediv": "T", "random": "T", "directional": "r",
}


@dataclass(frozen=True)
class Design:
    """Parsed design string such as ``optimal``, ``cto:200`` or ``directional:0.5``."""

    kind: str
    T: int | None = None
    r: float | None = None
    label: str = ""

    @classmethod
    def parse(cls, text: str) -> "Design":
        text = text.strip()
        kind, _, arg = text.partition(":")
        if kind not in _KINDS:
            raise ValueError(f"unknown design {text!r}; expected one of {sorted(_KINDS)}")
        T = r = None
        if arg:
            if _KINDS[kind] == "T":
                T = int(arg)
                if T < 1:
                    raise ValueError(f"T must be >= 1 in {text!r}")
            else:
                r_str, _, t_str = arg.partition(":")
                r = float(r_str)
                T = int(t_str) if t_str else None
        elif kind == "directional":
            raise ValueError("directional needs a radius, e.g. directional:0.5")
        elif kind == "timediv":
            raise ValueError("timediv needs a length, e.g. timediv:200")
        return cls(kind, T, r, text)


@dataclass
class SweepRow:
    distance_m: float
    range_m: float
    design: str
    peb_m: float
    lambdas: tuple = (np.nan,) * 4
    status: str = "ok"
    wall_time_s: float = 0.0


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def peb(self, design: str) -> np.ndarray:
        """PEB column of one design, in distance order."""
        return np.array([r.peb_m for r in self.rows if r.design == design])

    def distances(self) -> list:
        return sorted({r.distance_m for r in self.rows})


class _PointCache:
    """Lazily built per-distance objects shared between designs."""

    def __init__(self, cfg: ScenarioConfig, p, arr):
        self.cfg = cfg
        self.scenario = cfg.scenario(p, arr)
        self.params = ProjectionParams(n_points=cfg.n_points)
        self._basis = self._projected = None
        self._sdp = {}

    @property
    def basis(self):
        if self._basis is None:
            self._basis = build_beam_basis(self.scenario.bundle)
        return self._basis

    @property
    def projected(self):
        if self._projected is None:
            self._projected = project_basis(self.basis, self.scenario, self.params)
        return self._projected

    def sdp(self, diagonal, budget, feasible=False):
        key = (diagonal, budget, feasible)
        if key not in self._sdp:
            basis = self.projected if feasible else self.basis
            self._sdp[key] = solve_lambda_sdp(basis, self.scenario, budget, diagonal,
                                              self.cfg.solver_tol)
        return self._sdp[key]


def _evaluate(design: Design, cache: _PointCache, rng):
    """PEB, four lambda-like numbers and a status for one design at one point."""
    cfg = cache.cfg
    sc = cache.scenario
    T = design.T or cfg.T
    if design.kind in ("optimal", "optimal-diag", "feasible-diag"):
        sol = cache.sdp(design.kind != "optimal", T, design.kind == "feasible-diag")
        return sol.peb_at_optimum, tuple(sol.allocation.weights), sol.solver_status.value
    if design.kind in ("otc", "cto", "timediv"):
        sol = cache.sdp(True, T)
        sched = make_schedule(sol, cache.basis, cache.params, T, scenario=sc,
                              pipeline="A" if design.kind == "otc" else "B",
                              projected=cache.projected, tol=cfg.solver_tol)
        return fim_from_schedule(sched, sc).peb, tuple(float(t) for t in sched.allocations), "ok"
    if design.kind == "random":
        F = random_profiles(sc.arr, T, RandomProfileConfig(cfg.seed), rng=rng)
        return sc.fim_profiles(F).peb, (np.nan,) * 4, "ok"
    F = directional_codebook(sc.arr, sc.p, T, DirectionalConfig(design.r, cfg.seed), rng=rng)
    return sc.fim_profiles(F).peb, (np.nan,) * 4, "ok"


def _run_point(cfg, d, point_idx, designs):
    p = np.array([1.0, d, 1.0])
    # keyed by design name so a design's draws do not depend on the others
    streams = [np.random.SeedSequence([cfg.seed, point_idx, zlib.crc32(ds.label.encode())])
               for ds in designs]
    rows = []
    try:
        cache = _PointCache(cfg, p, cfg.build_array())
    except RislocError as exc:
        return [SweepRow(d, float(np.linalg.norm(p)), ds.label, np.inf, status=f"error: {exc}")
                for ds in designs]
    for ds, ss in zip(designs, streams):
        t0 = time.perf_counter()
        try:
            peb_m, lam, status = _evaluate(ds, cache, np.random.default_rng(ss))
        except RislocError as exc:
            log.warning("design %s failed at d=%g: %s", ds.label, d, exc)
            peb_m, lam, status = np.inf, (np.nan,) * 4, f"error: {exc}"
        rows.append(SweepRow(d, float(np.linalg.norm(p)), ds.label, float(peb_m), lam, status,
                             time.perf_counter() - t0))
    return rows


def run_peb_sweep(cfg: ScenarioConfig, designs, distances=DEFAULT_DISTANCES, workers: int = 1) -> SweepResult:
    """Evaluate every design at the UE positions ``(1, d, 1)``.

    Each (distance, design) pair draws from its own stream seeded by
    ``(seed, point index, crc32(design))``, so serial and parallel runs
    agree and adding a design leaves the others untouched. Failures are
    written into the ``status`` column and the sweep continues.
    """
    designs = [d if isinstance(d, Design) else Design.parse(d) for d in designs]
    labels = [d.label for d in designs]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate design names")
    distances = [float(d) for d in distances]
    args = [(cfg, d, i, designs) for i, d in enumerate(distances)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_point, *zip(*args)))
    else:
        chunks = [_run_point(*a) for a in args]
    return SweepResult([row for chunk in chunks for row in chunk])


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    if np.isnan(x):
        return "nan"
    return "%.9g" % x


def _sink(target):
    # a path is opened (and closed) here; an open text stream is used as is
    if hasattr(target, "write"):
        return contextlib.nullcontext(target)
    return open(target, "w", newline="", encoding="utf-8")


def emit_csv(result: SweepResult, path, include_timing: bool = True) -> None:
    """Write the sweep as UTF-8 CSV to a path or text stream.

    Without the timing column the output is byte-reproducible for a fixed
    config and seed.
    """
    cols = COLUMNS if include_timing else COLUMNS[:-1]
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in result.rows:
            vals = [r.distance_m, r.range_m, r.design, r.peb_m, *r.lambdas, r.status]
            if include_timing:
                vals.append(r.wall_time_s)
            w.writerow([_fmt(v) for v in vals])


@dataclass
class BeamCuts:
    coordinate: str
    values: np.ndarray
    gains: np.ndarray  # (n, 4), nan where skipped
    valid: np.ndarray

    def emit_csv(self, path) -> None:
        with _sink(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.coordinate, "gain_1", "gain_2", "gain_3", "gain_4", "valid"])
            for v, g, ok in zip(self.values, self.gains, self.valid):
                w.writerow([_fmt(v), *(_fmt(x) for x in g), int(ok)])


def run_beam_cuts(cfg: ScenarioConfig, p_ue, coordinate: str, grid) -> BeamCuts:
    """Gains ``|u_i^T a(q)|^2`` of the orthonormalized beams along one spherical cut.

    ``grid`` holds absolute values of the swept coordinate (m for rho,
    rad for the angles); the other two stay at those of ``p_ue``. Points that
    are geometrically invalid are flagged and left as nan.
    """
    if coordinate not in COORDINATES:
        raise ValueError(f"coordinate must be one of {COORDINATES}")
    k = COORDINATES.index(coordinate)
    arr = cfg.build_array()
    sc = cfg.scenario(p_ue, arr)
    U = build_beam_basis(sc.bundle).U
    s = list(cart_to_sph(p_ue))
    grid = np.asarray(grid, float)
    gains = np.full((grid.size, 4), np.nan)
    valid = np.zeros(grid.size, dtype=bool)
    for i, v in enumerate(grid):
        if k == 0 and v <= 0:
            continue
        coords = list(s)
        coords[k] = v
        try:
            a = steering(arr, sph_to_cart(coords))
        except DegenerateGeometry:
            continue
        gains[i] = np.abs(U.T @ a) ** 2
        valid[i] = True
    return BeamCuts(coordinate, grid, gains, valid)


FIGURE_DESIGNS = {
    "fig4": ["optimal", "random:40", "random:80", "random:160", "directional:0.5", "directional:2"],
    "fig5": ["optimal", "optimal-diag", "otc", "cto"],
    "fig6": ["feasible-diag:40", "feasible-diag:200", "feasible-diag:1000",
             "timediv:40", "timediv:200", "timediv:1000"],
}


def write_plot_data(cfg: ScenarioConfig, outdir, distances=DEFAULT_DISTANCES,
                    include_timing: bool = False, workers: int = 1, n_cut: int = 201) -> list:
    """Tidy per-figure files: beam cuts (fig3) and the three distance sweeps."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    s = cart_to_sph(cfg.p_ue)
    spans = {"rho": (0.5 * s.rho, 1.5 * s.rho),
             "theta": (s.theta - np.deg2rad(30), s.theta + np.deg2rad(30)),
             "phi": (s.phi - np.deg2rad(30), s.phi + np.deg2rad(30))}
    for coord, (lo, hi) in spans.items():
        cuts = run_beam_cuts(cfg, cfg.p_ue, coord, np.linspace(lo, hi, n_cut))
        path = outdir / f"fig3_{coord}.csv"
        cuts.emit_csv(path)
        written.append(path)
    union = list(dict.fromkeys(d for ds in FIGURE_DESIGNS.values() for d in ds))
    result = run_peb_sweep(cfg, union, distances, workers)
    for fig, names in FIGURE_DESIGNS.items():
        sub = SweepResult([r for r in result.rows if r.design in names])
        path = outdir / f"{fig}.csv"
        emit_csv(sub, path, include_timing)
        written.append(path)
    return written
