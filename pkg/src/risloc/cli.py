"""Command line entry point: ``risloc {sweep,beams,optimize,baseline}``."""
import argparse
import json
import logging
import sys

import numpy as np

from .baselines import DirectionalConfig, RandomProfileConfig, directional_codebook, random_profiles
from .config import ScenarioConfig, load_config
from .design import build_beam_basis, solve_lambda_sdp
from .errors import RislocError
from .fim import fim_from_schedule
from .geometry import cart_to_sph
from .harness import (
    COORDINATES, DEFAULT_DISTANCES, emit_csv, run_beam_cuts, run_peb_sweep, write_plot_data,
)
from .profiles import ProjectionParams, make_schedule

log = logging.getLogger("risloc")

DEFAULT_DESIGNS = "optimal,optimal-diag,cto,random:40"


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _distances(text):
    if text is None:
        return list(DEFAULT_DISTANCES)
    if ":" in text:
        lo, hi = (float(v) for v in text.split(":"))
        return list(np.arange(lo, hi + 0.5))
    return [float(v) for v in text.split(",")]


def _write_json(report, path):
    text = json.dumps(report, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_sweep(args):
    cfg = _config(args)
    designs = [d for d in args.designs.split(",") if d]
    result = run_peb_sweep(cfg, designs, _distances(args.distances), args.workers)
    emit_csv(result, args.out or sys.stdout, not args.no_timing)
    if args.plot_data:
        for p in write_plot_data(cfg, args.plot_data, _distances(args.distances),
                                 not args.no_timing, args.workers):
            log.info("wrote %s", p)
    return 0


def cmd_beams(args):
    cfg = _config(args)
    s = cart_to_sph(cfg.p_ue)
    k = COORDINATES.index(args.coordinate)
    half = 0.5 * s.rho if k == 0 else np.deg2rad(30)
    lo = s[k] - half if args.grid_min is None else args.grid_min
    hi = s[k] + half if args.grid_max is None else args.grid_max
    cuts = run_beam_cuts(cfg, cfg.p_ue, args.coordinate, np.linspace(lo, hi, args.grid_steps))
    cuts.emit_csv(args.out or sys.stdout)
    return 0


def cmd_optimize(args):
    cfg = _config(args)
    sc = cfg.scenario()
    basis = build_beam_basis(sc.bundle)
    full = solve_lambda_sdp(basis, sc, cfg.T, False, cfg.solver_tol)
    diag = solve_lambda_sdp(basis, sc, cfg.T, True, cfg.solver_tol)
    sched = make_schedule(diag, basis, ProjectionParams(n_points=cfg.n_points), cfg.T,
                          scenario=sc, pipeline=args.pipeline, tol=cfg.solver_tol)
    report = {
        "p_ue": list(cfg.p_ue),
        "T": cfg.T,
        "peb_full_lambda_m": full.peb_at_optimum,
        "peb_diag_lambda_m": diag.peb_at_optimum,
        "lambda_diag": [float(v) for v in diag.allocation.weights],
        "status": diag.solver_status.value,
        "pipeline": args.pipeline,
        "weights": [float(v) for v in sched.weights],
        "schedule": [int(v) for v in sched.allocations],
        "peb_schedule_m": fim_from_schedule(sched, sc).peb,
    }
    _write_json(report, args.out)
    return 0


def cmd_baseline(args):
    cfg = _config(args)
    sc = cfg.scenario()
    T = args.T or cfg.T
    if args.kind == "random":
        F = random_profiles(sc.arr, T, RandomProfileConfig(cfg.seed, args.quantized))
    else:
        F = directional_codebook(sc.arr, sc.p, T, DirectionalConfig(args.radius, cfg.seed))
    report = {"kind": args.kind, "T": T, "p_ue": list(cfg.p_ue), "peb_m": sc.fim_profiles(F).peb}
    if args.kind == "directional":
        report["radius_m"] = args.radius
    _write_json(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risloc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON scenario file (default: built-in scenario)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", help="output path (default: stdout)")

    sw = sub.add_parser("sweep", help="PEB versus RIS-UE distance for several designs")
    common(sw)
    sw.add_argument("--designs", default=DEFAULT_DESIGNS,
                    help="comma list: optimal, optimal-diag, feasible-diag, otc, cto, "
                         "timediv:T, random:T, directional:r (optional :T suffix)")
    sw.add_argument("--distances", help="'1:15' or a comma list of y-coordinates in m")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--no-timing", action="store_true", help="drop the wall-time column")
    sw.add_argument("--plot-data", metavar="DIR", help="also write per-figure tidy files")
    sw.set_defaults(func=cmd_sweep)

    bm = sub.add_parser("beams", help="gain cuts of the four beams through the UE")
    common(bm)
    bm.add_argument("--coordinate", choices=COORDINATES, default="theta")
    bm.add_argument("--grid-min", type=float)
    bm.add_argument("--grid-max", type=float)
    bm.add_argument("--grid-steps", type=int, default=201)
    bm.set_defaults(func=cmd_beams)

    op = sub.add_parser("optimize", help="optimal allocation and time schedule at p_ue")
    common(op)
    op.add_argument("--pipeline", choices=("A", "B"), default="B")
    op.set_defaults(func=cmd_optimize)

    bl = sub.add_parser("baseline", help="PEB of a baseline design at p_ue")
    common(bl)
    bl.add_argument("--kind", choices=("random", "directional"), required=True)
    bl.add_argument("--T", type=int, default=None)
    bl.add_argument("--radius", type=float, default=0.5)
    bl.add_argument("--quantized", action="store_true")
    bl.set_defaults(func=cmd_baseline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RislocError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
