"""End-to-end fit: ingest, preprocess, graph, basis, stepwise selection, reports."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import OperatorBasis, build_dynamics_basis, build_taylor_basis
from .calculus import gram_matrices
from .config import SCHEMA_VERSION, RunConfig, config_echo
from .graph import StateGraph, build_graph
from .ingest import format_float, ingest, write_table
from .preprocessing import DataError, TimeSeries, backward_euler_derivative, gaussian_filter
from .regression import StepwiseTrace, stepwise_backward
from .svg import line_chart


@dataclass
class PipelineResult:
    graph: StateGraph
    basis: OperatorBasis
    trace: StepwiseTrace
    series: TimeSeries
    target: np.ndarray
    outputs: dict[str, Path] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def prepare_series(cfg: RunConfig) -> tuple[TimeSeries, np.ndarray]:
    """Ingested and conditioned series plus the target column aligned with it."""
    series = ingest(cfg.input_path, cfg.input_format, cfg.time)
    needed = set(cfg.state) | {cfg.target} | set(cfg.observables or ())
    for name in sorted(needed):
        series[name]
    if cfg.observables is not None:
        keep = set(cfg.state) | {cfg.target} | set(cfg.observables)
        series = TimeSeries(series.t, {k: v for k, v in series.columns.items() if k in keep})
    if cfg.scales:
        series = series.scaled(cfg.scales)
    if cfg.filter is not None:
        f = cfg.filter
        series = gaussian_filter(series, f.window, f.sigma, f.passes, f.columns)
    if cfg.target_derivative:
        d = backward_euler_derivative(series, cfg.target)
        series = series.select(slice(1, None))
        target = next(iter(d.columns.values()))
    else:
        target = series[cfg.target]
    return series, target


def build_model_basis(cfg: RunConfig, series: TimeSeries, target: np.ndarray):
    X = np.column_stack([series[c] for c in cfg.state])
    observables = {k: v for k, v in series.columns.items() if k not in cfg.state}
    g = build_graph(X, observables, cfg.weight, labels=cfg.state)
    if cfg.model_kind == "dynamics":
        basis = build_dynamics_basis(g, cfg.dynamics, target)
    else:
        basis = build_taylor_basis(g, target, cfg.taylor)
    return g, basis


def model_document(cfg: RunConfig, g: StateGraph, basis: OperatorBasis, trace: StepwiseTrace,
                   warn: list[str]) -> dict:
    rec = trace.final
    terms = [{"descriptor": basis.descriptors[k].to_dict(), "label": basis.labels[k],
              "coefficient": float(rec.coef[k]), "normalizer": float(basis.normalization.nx[k]),
              "fixed": bool(basis.fixed_mask[k])} for k in rec.active]
    spec = g.weight_spec
    echo = config_echo(cfg)
    echo["weight"].update({"R": spec.R, "sigma": spec.sigma, "epsilon": spec.epsilon, "C": spec.C})
    return {
        "schema": SCHEMA_VERSION,
        "config": echo,
        "target": {"name": cfg.target, "derivative": cfg.target_derivative,
                   "normalizer": float(basis.normalization.ny[0])},
        "n_samples": int(basis.n),
        "n_candidates": int(basis.P),
        "terms": terms,
        "solver": {"kind": cfg.solver.kind.value, "lambda": float(rec.lam), "rank": int(rec.rank),
                   "cutoff": float(rec.cutoff)},
        "loss": {"total": rec.loss.total, "L2": rec.loss.l2, "L1": rec.loss.l1, "Linf": rec.loss.linf},
        "flags": sorted({f for r in trace.records for f in r.flags}),
        "warnings": warn,
    }


def write_trace_csv(path: Path, trace: StepwiseTrace) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "n_terms", "loss_total", "loss_l2", "loss_l1", "loss_linf",
                    "removed_descriptor", "F", "lambda", "rank", "flags"])
        for r in trace.records:
            w.writerow([r.iteration, r.n_terms, format_float(r.loss.total), format_float(r.loss.l2),
                        format_float(r.loss.l1), format_float(r.loss.linf), r.removed_label,
                        format_float(r.F), format_float(r.lam), r.rank, ";".join(r.flags)])
    return path


def write_weights_diag(path: Path, g: StateGraph) -> tuple[Path, float]:
    """Per-vertex residuals ``G_i - I`` of the unit-vector Gram matrices."""
    G = gram_matrices(g) - np.eye(g.p)[None]
    cols = {"vertex": np.arange(g.n, dtype=float)}
    for a in range(g.p):
        for b in range(a, g.p):
            cols[f"G_{g.labels[a]}_{g.labels[b]}"] = G[:, a, b]
    worst = np.max(np.abs(G), axis=(1, 2))
    cols["max_abs_residual"] = worst
    write_table(path, cols)
    return path, float(worst.max())


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Run one fit and write model.json, trace.csv, fit.csv and weights_diag.csv."""
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as record:
        warnings.simplefilter("always")
        series, target = prepare_series(cfg)
        g, basis = build_model_basis(cfg, series, target)
        if cfg.min_terms > basis.P:
            raise DataError(f"stepwise.min_terms={cfg.min_terms} exceeds the {basis.P} basis columns")
        trace = stepwise_backward(basis, cfg.solver, cfg.loss, cfg.min_terms, cfg.f_threshold)
    for w in record:
        msg = str(w.message)
        if msg not in caught:
            caught.append(msg)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    result = PipelineResult(g, basis, trace, series, target, warnings=caught)
    doc = model_document(cfg, g, basis, trace, caught)
    model_path = out / "model.json"
    model_path.write_text(json.dumps(doc, indent=2) + "\n")
    result.outputs["model"] = model_path
    result.outputs["trace"] = write_trace_csv(out / "trace.csv", trace)

    fit_cols = {"t": series.t, "y": target}
    checkpoints = sorted(set(cfg.checkpoints) | {trace.final.n_terms}, reverse=True)
    for m in checkpoints:
        rec = trace.at_terms(m)
        fit_cols[f"yhat_{rec.n_terms}"] = basis.X @ rec.coef
    result.outputs["fit"] = write_table(out / "fit.csv", fit_cols)
    result.outputs["weights_diag"], _ = write_weights_diag(out / "weights_diag.csv", g)

    if cfg.svg:
        terms = [r.n_terms for r in trace.records]
        losses = [max(r.loss.total, 1e-300) for r in trace.records]
        (out / "loss.svg").write_text(line_chart({"loss": (terms, losses)}, "terms", "loss", log_y=True))
        series_map = {"data": (list(series.t), list(target))}
        for key, col in fit_cols.items():
            if key.startswith("yhat_"):
                series_map[key] = (list(series.t), list(col))
        (out / "fit.svg").write_text(line_chart(series_map, "t", cfg.target))
        result.outputs["svg"] = out / "loss.svg"
    return result
