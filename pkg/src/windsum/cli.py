"""Command-line front end.

    windsum marginal        [CONFIG] [flags]   per-farm output distributions
    windsum sum             [CONFIG] [flags]   analytical distribution of the total
    windsum validate        [CONFIG] [flags]   compare with Monte Carlo, exit 4 on failure
    windsum bench           [CONFIG] [flags]   timing table, analytical vs Monte Carlo
    windsum critical-points [CONFIG] [--rated 100,150,...]

Exit codes: 0 success, 2 bad config, 3 numerical or I/O failure, 4 validation
tolerances exceeded.  Artifacts are written only after every computation has
finished.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import mcs
from .config import load_scenario
from .errors import AccuracyError, ConfigError, ConvergenceError, DomainError
from .mcs import analytic_pipeline, bench, format_timing_table, output_grid, validate
from .multifarm import critical_points

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
COLUMNS = ("x", "pdf", "cdf", "is_atom", "atom_mass")


def _num(x):
    return f"{float(x):.17e}"


def csv_rows(dist, grid, pdf=None, atoms=None):
    """Rows for one distribution: grid rows then one row per atom, sorted by x.

    ``atoms`` overrides the atom list (the pair sum reports its four impulses
    even when two of them share a location).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return []
    pdf = dist.pdf(grid) if pdf is None else pdf
    cdf = dist.cdf(grid)
    rows = [(x, 0, [_num(x), _num(p), _num(c), "0", ""]) for x, p, c in zip(grid, pdf, cdf)]
    if atoms is None:
        atoms = dist.atoms()
    for loc, mass in atoms:
        rows.append((loc, 1, [_num(loc), "", _num(dist.cdf(loc)), "1", _num(mass)]))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [r[2] for r in rows]


def render_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def emit_csv(result, path, grid=1001):
    """Write ``result`` (a SumResult or MixedDistribution) as CSV to ``path``."""
    _write_all({Path(path): render_csv(_result_rows(result, grid))})


def _result_rows(result, grid_size):
    if hasattr(result, "impulses"):
        dist = result.distribution
        grid = output_grid(dist.hi, grid_size)
        return csv_rows(dist, grid, result.density(grid),
                        atoms=list(zip(result.breakpoints, result.impulses)))
    return csv_rows(result, output_grid(result.hi, grid_size))


def _write_all(files):
    """Write every file via a temporary sibling and rename, after all content exists."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _json(obj):
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def _cmd_marginal(cfg, args, out):
    files, farms = {}, []
    for i, farm in enumerate(cfg.marginals(), start=1):
        grid = output_grid(farm.hi, cfg.grid)
        files[out / f"farm{i}.csv"] = render_csv(csv_rows(farm, grid))
        mean, var = farm.moments()
        farms.append({"atoms": farm.atoms(), "continuous_mass": farm.continuous_mass,
                      "mean": mean, "variance": var,
                      "normalization_defect": farm.audit_normalization()})
    files[out / "summary.json"] = _json({"config": cfg.to_dict(), "farms": farms})
    _write_all(files)
    print(f"wrote {len(farms)} marginal(s) to {out}")
    return EXIT_OK


def _cmd_sum(cfg, args, out):
    ana, t_ana, _ = mcs.timed(lambda: analytic_pipeline(cfg))
    result, dist = ana["result"], ana["distribution"]
    if hasattr(result, "impulses"):
        rows = csv_rows(dist, ana["grid"], ana["pdf"],
                        atoms=list(zip(result.breakpoints, result.impulses)))
        summary = result.summary()
    else:
        rows = csv_rows(dist, ana["grid"], ana["pdf"])
        summary = {"kind": dist.kind, "atoms": dist.atoms(),
                   "continuous_mass": dist.continuous_mass,
                   "normalization_defect": dist.audit_normalization(),
                   "critical_points": critical_points([f.curve.rated for f in cfg.farms]).points,
                   "note": "pairwise recursive fold; exact only for two farms or independence"}
    files = {
        out / "sum.csv": render_csv(rows),
        out / "summary.json": _json({"config": cfg.to_dict(), "result": summary,
                                     "timings": {"analytical_seconds": t_ana}}),
    }
    _write_all(files)
    if hasattr(result, "impulses"):
        for k, (loc, m) in enumerate(zip(result.breakpoints, result.impulses), start=1):
            print(f"Phi{k} @ {loc:g} MW = {m:.6g}")
    print(f"total mass defect {dist.audit_normalization():.3g}; wrote {out / 'sum.csv'}")
    return EXIT_OK


def _cmd_validate(cfg, args, out):
    report = validate(cfg)
    text = _json({"config": cfg.to_dict(), "report": report.to_dict()})
    _write_all({out / "report.json": text})
    print(f"KS = {report.ks:.5f} (tol {report.ks_tol}), max atom diff = "
          f"{report.max_atom_diff:.5f} (tol {report.atom_tol}), n = {report.n}")
    t = report.timings
    print(format_timing_table({"analytical": {"median_seconds": t["analytical_seconds"]},
                               "mcs": [{"n": report.n, "median_seconds": t["mcs_seconds"]}]}))
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_bench(cfg, args, out):
    sizes = tuple(args.sizes) if args.sizes else (50000, cfg.mcs_n)
    timings = bench(cfg, sizes=sizes, repeats=args.repeats)
    _write_all({out / "timings.json": _json(timings)})
    print(format_timing_table(timings))
    return EXIT_OK


def _cmd_critical_points(cfg, args, out):
    rated = args.rated if args.rated else [f.curve.rated for f in cfg.farms]
    cp = critical_points(rated)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "B", "multiplicity"))
    for k, (b, m) in enumerate(zip(cp.points, cp.multiplicity), start=1):
        w.writerow((k, repr(float(b)), int(m)))
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "marginal": _cmd_marginal,
    "sum": _cmd_sum,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
    "critical-points": _cmd_critical_points,
}


def _gmm_flag(text):
    if text.lower() == "off":
        return 0
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--gmm takes a positive component count or 'off'")
    return n


def _rated_flag(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("--rated takes comma-separated numbers") from None


def build_parser():
    p = argparse.ArgumentParser(prog="windsum", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", nargs="?", help="scenario file (.toml or .json); default: built-in scenario")
    p.add_argument("--grid", type=int, help="output grid size")
    p.add_argument("--tol", type=float, help="absolute quadrature tolerance")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--samples", type=int, help="Monte Carlo sample size")
    p.add_argument("--gmm", type=_gmm_flag, help="GMM component count, or 'off'")
    p.add_argument("--out", help="output directory")
    p.add_argument("--repeats", type=int, default=5, help="timed runs per route (bench)")
    p.add_argument("--sizes", type=int, nargs="+", help="Monte Carlo sample sizes (bench)")
    p.add_argument("--rated", type=_rated_flag, help="rated powers for critical-points")
    return p


def run(command, config_path=None, flags=None):
    """Execute one command; returns the process exit code."""
    flags = flags or argparse.Namespace()
    get = lambda name: getattr(flags, name, None)  # noqa: E731
    try:
        cfg = load_scenario(config_path)
        over = {"grid": get("grid"), "tol": get("tol"), "mcs_seed": get("seed"),
                "mcs_n": get("samples"), "out_dir": get("out")}
        if get("gmm") is not None:
            over["gmm_enabled"] = get("gmm") > 0
            if get("gmm") > 0:
                over["gmm_components"] = get("gmm")
        cfg = cfg.with_overrides(**over)
        if cfg.grid < 0 or cfg.tol <= 0 or cfg.mcs_n < 1:
            raise ConfigError("flags: --grid must be >= 0, --tol > 0, --samples >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not hasattr(flags, "repeats"):
        flags.repeats = 5
    if not hasattr(flags, "sizes"):
        flags.sizes = None
    if not hasattr(flags, "rated"):
        flags.rated = None
    try:
        return COMMANDS[command](cfg, flags, Path(cfg.out_dir))
    except (AccuracyError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args)


if __name__ == "__main__":
    sys.exit(main())
