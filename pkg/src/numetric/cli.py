"""Command-line interface: ``numetric {dist,margin,stabilizes,certify,axioms,sweep}``.

Exit codes: 0 success, 1 negative verdict (not certified, not stabilizing,
axioms violated), 2 unreadable or invalid input, 3 unresolved index,
4 any other numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import metric as mt
from . import plants as pl
from .config import PROFILES, Tolerances, check_grid_size, default_grid_size, get_profile
from .errors import NumetricError, PlantSyntaxError, Unresolved, ValidationError
from .freqdomain import FrequencyGrid

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_UNRESOLVED, EXIT_NUMERIC = 0, 1, 2, 3, 4


class InputError(Exception):
    """Bad command-line input that is not a plant parse error."""


@dataclass(frozen=True)
class RunConfig:
    grid_size: int
    tolerances: Tolerances
    refinement_limit: Optional[int]
    seed: int
    fmt: str
    parallel: bool

    def grid(self, algebra) -> FrequencyGrid:
        return FrequencyGrid(algebra, self.grid_size, refinement_limit=self.refinement_limit)


def _dec(x: Optional[float]) -> str:
    """Positional decimal rendering, stable across platforms."""
    if x is None:
        return ""
    return np.format_float_positional(float(x), precision=12, unique=True, trim="-")


def _sci(x: float) -> str:
    return f"{float(x):.6e}"


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(path: str) -> pl.PlantModel:
    try:
        return pl.load_plant(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except (PlantSyntaxError, ValidationError) as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def _index_str(idx) -> str:
    return "-" if idx is None else str(idx)


# -- commands -------------------------------------------------------------------------------------


def cmd_dist(args, cfg: RunConfig) -> tuple:
    P1, P2 = _load(args.plant1), _load(args.plant2)
    r = mt.nu_distance(P1, P2, cfg.grid(P1.algebra), cfg.tolerances)
    if cfg.fmt == "json":
        out = _json(r.to_json())
    elif cfg.fmt == "csv":
        out = _csv(["d_nu", "branch", "index", "grid"], [[_dec(r.value), r.branch, _index_str(r.index), r.grid_size_used]])
    else:
        out = f"d_nu    {r.value:.6f}\nbranch  {r.branch}\nindex   {_index_str(r.index)}\n"
        if r.reason:
            out += f"reason  {r.reason}\n"
    return EXIT_OK, out


def cmd_margin(args, cfg: RunConfig) -> tuple:
    P, C = _load(args.plant), _load(args.controller)
    r = mt.stability_margin(P, C, cfg.grid(P.algebra), cfg.tolerances)
    if cfg.fmt == "json":
        out = _json(r.to_json())
    elif cfg.fmt == "csv":
        out = _csv(["mu", "stabilizes", "h_norm"], [[_dec(r.mu), str(r.stabilizes).lower(), _dec(r.h_norm)]])
    else:
        out = f"mu          {r.mu:.6f}\nstabilizes  {'yes' if r.stabilizes else 'no'}\n"
        if r.h_norm is not None:
            out += f"||H||       {r.h_norm:.6f}\n"
    return EXIT_OK, out


def cmd_stabilizes(args, cfg: RunConfig) -> tuple:
    P, C = _load(args.plant), _load(args.controller)
    ev = mt.stabilizes(P, C, cfg.grid(P.algebra), cfg.tolerances)
    if cfg.fmt == "json":
        out = _json(ev.to_json())
    elif cfg.fmt == "csv":
        out = _csv(["stabilizes", "min_abs_det", "index"],
                   [[str(ev.stabilizes).lower(), _dec(ev.min_abs_det), _index_str(ev.index)]])
    else:
        out = f"stabilizes  {'yes' if ev.stabilizes else 'no'}\nmin|det|    {ev.min_abs_det:.6g}\n" \
              f"index       {_index_str(ev.index)}\n"
        if ev.reason:
            out += f"reason      {ev.reason}\n"
    return (EXIT_OK if ev.stabilizes else EXIT_NEGATIVE), out


def cmd_certify(args, cfg: RunConfig) -> tuple:
    P0, C, P1 = _load(args.nominal), _load(args.controller), _load(args.plant)
    r = mt.certify_robust(P0, C, P1, cfg.grid(P0.algebra), cfg.tolerances)
    if cfg.fmt == "json":
        out = _json(r.to_json())
    elif cfg.fmt == "csv":
        out = _csv(["mu0", "dnu", "certified", "predicted", "mu1"],
                   [[_dec(r.mu0), _dec(r.dnu), str(r.certified).lower(),
                     _dec(r.predicted_margin_lower_bound), _dec(r.actual_mu1)]])
    else:
        out = (f"mu0        {r.mu0:.6f}\ndnu        {r.dnu:.6f}\n"
               f"certified  {'yes' if r.certified else 'no'}\n"
               f"predicted  {r.predicted_margin_lower_bound:.6f}\n")
        if r.actual_mu1 is not None:
            out += f"mu1        {r.actual_mu1:.6f}\n"
    return (EXIT_OK if r.certified else EXIT_NEGATIVE), out


def random_family(count: int, seed: int, p: int = 1, m: int = 1, max_order: int = 4) -> List[pl.PlantModel]:
    """``count`` seeded random plants with orders drawn from ``0..max_order``."""
    rng = np.random.default_rng(seed)
    orders = rng.integers(0, max_order + 1, size=count)
    seeds = rng.integers(0, 2**31 - 1, size=count)
    return [pl.random_plant(p, m, int(o), int(s)) for o, s in zip(orders, seeds)]


def cmd_axioms(args, cfg: RunConfig) -> tuple:
    if (args.directory is None) == (args.random is None):
        raise InputError("give either a directory of plant files or --random N")
    if args.random is not None:
        if args.random < 3:
            raise InputError("--random needs at least 3 plants")
        family = random_family(args.random, cfg.seed, args.p, args.m, args.order)
    else:
        if not os.path.isdir(args.directory):
            raise InputError(f"{args.directory}: not a directory")
        names = sorted(f for f in os.listdir(args.directory) if f.endswith(".json"))
        family = [_load(os.path.join(args.directory, f)) for f in names]
    if not family:
        raise InputError("no plants to check")
    grid = cfg.grid(family[0].algebra)
    r = mt.metric_axiom_suite(family, grid=grid, tolerances=cfg.tolerances, parallel=cfg.parallel)
    rows = [
        ["identity", _sci(r.identity_worst), _sci(1e-9)],
        ["symmetry", _sci(r.symmetry_worst), _sci(r.tolerance)],
        ["triangle", _sci(r.triangle_worst_slack), _sci(-r.tolerance)],
        ["positivity", str(r.positivity_failures), "0"],
    ]
    if cfg.fmt == "json":
        doc = r.to_json()
        doc["distances"] = [[float(v) for v in row] for row in r.distances]
        out = _json(doc)
    elif cfg.fmt == "csv":
        out = _csv(["check", "worst", "limit"], rows)
    else:
        out = f"plants      {r.count}\n" + "".join(f"{c:<11} {w} (limit {lim})\n" for c, w, lim in rows)
        out += "".join(f"violation   {v}\n" for v in r.violations)
        out += f"result      {'pass' if r.passed else 'FAIL'}\n"
    return (EXIT_OK if r.passed else EXIT_NEGATIVE), out


def _parameter_values(args) -> List[float]:
    if args.values is not None and args.range is not None:
        raise InputError("give either --values or --range, not both")
    if args.values is not None:
        text = args.values.strip()
        try:
            vals = [float(v) for v in text.split(",")] if text else []
        except ValueError as exc:
            raise InputError(f"bad --values: {exc}") from exc
    elif args.range is not None:
        start, stop, num = args.range
        try:
            count = int(num)
        except ValueError as exc:
            raise InputError(f"--range count must be an integer, got {num!r}") from exc
        vals = [float(v) for v in np.linspace(float(start), float(stop), count)] if count > 0 else []
    else:
        raise InputError("give --values or --range")
    if not vals:
        raise InputError("empty parameter range")
    return vals


def cmd_sweep(args, cfg: RunConfig) -> tuple:
    vals = _parameter_values(args)
    nominal, base = _load(args.nominal), _load(args.base)
    C = _load(args.controller) if args.controller else pl.zero(nominal.m, nominal.p)
    grid = cfg.grid(nominal.algebra)

    def row(k):
        P = pl.scale(base, k)
        d = mt.nu_distance(nominal, P, grid, cfg.tolerances)
        mu = mt.stability_margin(P, C, grid, cfg.tolerances).mu
        return k, d.value, mu, d.branch

    if cfg.parallel:
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(row, vals))
    else:
        rows = [row(k) for k in vals]
    if cfg.fmt == "json":
        out = _json([{"param": k, "d_nu": d, "mu": mu, "branch": b} for k, d, mu, b in rows])
    else:
        out = _csv(["param", "d_nu", "mu", "branch"], [[_dec(k), _dec(d), _dec(mu), b] for k, d, mu, b in rows])
    return EXIT_OK, out


# -- parser ---------------------------------------------------------------------------------------


def _grid_size(text: str) -> int:
    try:
        n = int(text)
        check_grid_size(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return n


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--grid", type=_grid_size, default=d(None), help="grid size (power of two)")
    parser.add_argument("--tol", choices=sorted(PROFILES), default=d("default"), help="tolerance profile")
    parser.add_argument("--refine-limit", type=int, default=d(None), help="maximum grid doublings")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for random plant families")
    parser.add_argument("--format", choices=("human", "json", "csv"), default=d("human"), dest="fmt")
    parser.add_argument("--parallel", action="store_true", default=d(False),
                        help="evaluate independent pairs concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="numetric", description="nu-gap distances, stability margins "
                                     "and robust stability certificates")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", parents=[common], help="nu-gap distance between two plants")
    p.add_argument("plant1")
    p.add_argument("plant2")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("margin", parents=[common], help="stability margin of a feedback pair")
    p.add_argument("plant")
    p.add_argument("controller")
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("stabilizes", parents=[common], help="does the controller stabilize the plant")
    p.add_argument("plant")
    p.add_argument("controller")
    p.set_defaults(func=cmd_stabilizes)

    p = sub.add_parser("certify", parents=[common], help="robust stability certificate")
    p.add_argument("nominal")
    p.add_argument("controller")
    p.add_argument("plant")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("axioms", parents=[common], help="check the metric axioms on a plant family")
    p.add_argument("directory", nargs="?", help="directory of *.json plant files")
    p.add_argument("--random", type=int, metavar="N", help="use N seeded random plants instead")
    p.add_argument("--p", type=int, default=1, help="outputs of random plants")
    p.add_argument("--m", type=int, default=1, help="inputs of random plants")
    p.add_argument("--order", type=int, default=4, help="maximum order of random plants")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("sweep", parents=[common], help="distance and margin along k * base")
    p.add_argument("nominal")
    p.add_argument("base")
    p.add_argument("--values", help="comma-separated parameter values")
    p.add_argument("--range", nargs=3, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--controller", help="controller file (default: zero)")
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        grid = args.grid if args.grid is not None else default_grid_size()
        cfg = RunConfig(grid, get_profile(args.tol), args.refine_limit, args.seed, args.fmt, args.parallel)
        code, out = args.func(args, cfg)
    except (InputError, PlantSyntaxError, ValidationError, ValueError) as exc:
        print(f"numetric: error: {exc}", file=stderr)
        return EXIT_INPUT
    except Unresolved as exc:
        print(f"numetric: unresolved: {exc}", file=stderr)
        return EXIT_UNRESOLVED
    except NumetricError as exc:
        print(f"numetric: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    stdout.write(out)
    return code


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
