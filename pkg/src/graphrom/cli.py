"""Command line front end: ``graphrom {synth,ingest-check,fit,error-study,weights-diag}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 assertion failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .basis import BasisError
from .config import ConfigError, load_config
from .errorlab import PolySpec, convergence_study
from .graph import GraphError, build_graph
from .ingest import ingest, write_table
from .pipeline import prepare_series, run_pipeline, write_weights_diag
from .preprocessing import DataError
from .synth import Recipe, SynthSpec, synth
from .weights import Family, WeightSpec, gaussian_moment, polynomial_moment, weight_scale

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ASSERT = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_synth(args) -> int:
    spec = SynthSpec(Recipe(args.recipe), args.seed, args.n_steps, args.dt, args.noise,
                     args.n_features, args.n_active)
    path = synth(spec, args.out)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_ingest_check(args) -> int:
    series = ingest(args.path, args.format, args.time)
    print(f"{args.path}: {len(series)} rows, time {series.t[0]:.6g} .. {series.t[-1]:.6g}")
    for name, col in series.columns.items():
        print(f"  {name}: min {col.min():.6g} max {col.max():.6g}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None or args.svg:
        cfg = replace(cfg, output_dir=Path(args.out) if args.out else cfg.output_dir, svg=args.svg or cfg.svg)
    result = run_pipeline(cfg)
    final = result.trace.final
    print(f"{result.basis.P} candidate terms, {final.n_terms} retained, loss {final.loss.total:.6g}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for name, path in result.outputs.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def expected_slope(mode: str, k: int) -> float:
    # non-local derivatives carry a first-order error that fitted gammas do not remove
    return float(k + 1) if mode == "differential" else 1.0


def cmd_error_study(args) -> int:
    if len(args.n_list) < 3:
        raise ConfigError("--n-list", f"need at least 3 mesh sizes, got {len(args.n_list)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    failed = []
    for k in args.orders:
        spec = PolySpec.random(k + 1, args.seed)
        for mode in ("differential", "nonlocal"):
            res = convergence_study(spec, k, args.L, args.n_list, args.epsilon, args.norm, mode)
            rows = res.rows
            write_table(out / f"study_{mode}_k{k}.csv", {key: [r[key] for r in rows] for key in rows[0]})
            entry = res.to_summary()
            entry["alpha"] = list(spec.alpha)
            entry["expected_slope"] = expected_slope(mode, k)
            summary.append(entry)
            print(f"{mode:12s} k={k}: slope {res.slope:.4f} (expected {entry['expected_slope']:.0f})")
            if args.check and not (abs(res.slope - entry["expected_slope"]) <= args.tolerance):
                failed.append(entry)
    (out / "summary.json").write_text(json.dumps({"studies": summary}, indent=2) + "\n")
    if failed:
        for e in failed:
            print(f"slope check failed: {e['mode']} k={e['k']} slope {e['slope']} "
                  f"expected {e['expected_slope']} +- {args.tolerance}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_weights_diag(args) -> int:
    rows = {"family": [], "p": [], "z": [], "moment": [], "C_over_sigma": []}
    for p in range(1, args.p_max + 1):
        for z in args.z:
            for fam in (Family.GAUSSIAN, Family.POLYNOMIAL):
                m = gaussian_moment(p, z) if fam is Family.GAUSSIAN else polynomial_moment(p, z, p / 2)
                C = weight_scale(WeightSpec(fam, p, R=z, sigma=1.0))
                print(f"{fam.value:10s} p={p} z={z:<5g} moment {m:.10g}  C {C:.10g}")
                rows["family"].append(0.0 if fam is Family.GAUSSIAN else 1.0)
                rows["p"].append(float(p))
                rows["z"].append(z)
                rows["moment"].append(m)
                rows["C_over_sigma"].append(C)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_table(out / "weight_moments.csv", rows)
    if args.config:
        cfg = load_config(args.config)
        series, _ = prepare_series(cfg)
        X = np.column_stack([series[c] for c in cfg.state])
        g = build_graph(X, {}, cfg.weight, labels=cfg.state)
        out = Path(args.out) if args.out else cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        path, worst = write_weights_diag(out / "weights_diag.csv", g)
        print(f"graph n={g.n} p={g.p} R={g.radius:.6g}: max |G - I| = {worst:.6g} ({path})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphrom", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a seeded synthetic time series as CSV")
    s.add_argument("--recipe", choices=[r.value for r in Recipe], default=Recipe.MICROSTRUCTURE.value)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-steps", type=int, default=200)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--n-features", type=int, default=20)
    s.add_argument("--n-active", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("ingest-check", help="validate a csv/json input file")
    s.add_argument("path")
    s.add_argument("--format", choices=["csv", "json"])
    s.add_argument("--time", default="t")
    s.set_defaults(func=cmd_ingest_check)

    s = sub.add_parser("fit", help="run the stepwise fit described by a JSON config")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--svg", action="store_true")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("error-study", help="convergence study of modified Taylor series in 1-D")
    s.add_argument("--orders", type=_int_list, default=[1])
    s.add_argument("--n-list", type=_int_list, default=[8, 16, 32, 64, 128, 256])
    s.add_argument("--epsilon", type=float, default=0.0)
    s.add_argument("--norm", choices=["1", "2", "inf"], default="2")
    s.add_argument("--L", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="error_study")
    s.add_argument("--assert", dest="check", action="store_true",
                   help="exit 4 if a slope misses its expected order by more than --tolerance")
    s.add_argument("--tolerance", type=float, default=0.2)
    s.set_defaults(func=cmd_error_study)

    s = sub.add_parser("weights-diag", help="weight moment table and graph Gram residuals")
    s.add_argument("config", nargs="?")
    s.add_argument("--p-max", type=int, default=3)
    s.add_argument("--z", type=_float_list, default=[0.5, 1.0, 2.0, 4.0])
    s.add_argument("--out")
    s.set_defaults(func=cmd_weights_diag)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError, BasisError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
