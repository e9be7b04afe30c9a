"""JSON run configuration with field-path validation messages."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .basis import DynamicsBasisConfig, TaylorBasisConfig, default_derivatives
from .regression import LossSpec, SolverKind, SolverSpec
from .weights import Family, WeightSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class _Section:
    """Typed accessors over one JSON object, tracking its field path."""

    def __init__(self, data, path: str, allowed: set[str]):
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        extra = sorted(set(data) - allowed)
        if extra:
            raise ConfigError(f"{path}.{extra[0]}", f"unknown field (allowed: {sorted(allowed)})")
        self.data = data
        self.path = path

    def at(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=None):
        return self.data.get(key, default)

    def required(self, key):
        if key not in self.data:
            raise ConfigError(self.at(key), "required field is missing")
        return self.data[key]

    def number(self, key, default=None, minimum=None, allow_auto=False, allow_none=False):
        v = self.data.get(key, default)
        if v is None and allow_none:
            return None
        if allow_auto and v == "auto":
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            what = 'a number or "auto"' if allow_auto else "a number"
            raise ConfigError(self.at(key), f"expected {what}, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(self.at(key), f"must be >= {minimum}, got {v}")
        return float(v)

    def integer(self, key, default=None, minimum=None):
        v = self.data.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self.at(key), f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(self.at(key), f"must be >= {minimum}, got {v}")
        return v

    def boolean(self, key, default=False):
        v = self.data.get(key, default)
        if not isinstance(v, bool):
            raise ConfigError(self.at(key), f"expected true or false, got {v!r}")
        return v

    def string(self, key, default=None, choices=None):
        v = self.data.get(key, default)
        if not isinstance(v, str):
            raise ConfigError(self.at(key), f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(self.at(key), f"must be one of {list(choices)}, got {v!r}")
        return v

    def strings(self, key, default=None, allow_none=False):
        v = self.data.get(key, default)
        if v is None and allow_none:
            return None
        if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
            raise ConfigError(self.at(key), f"expected a list of strings, got {v!r}")
        return tuple(v)


@dataclass(frozen=True)
class FilterConfig:
    window: int
    sigma: float
    passes: int = 1
    columns: tuple[str, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    input_format: str | None
    time: str
    state: tuple[str, ...]
    target: str
    target_derivative: bool
    observables: tuple[str, ...] | None
    filter: FilterConfig | None
    scales: dict
    weight: WeightSpec
    model_kind: str
    dynamics: DynamicsBasisConfig | None
    taylor: TaylorBasisConfig | None
    solver: SolverSpec
    loss: LossSpec
    min_terms: int
    f_threshold: float | None
    output_dir: Path
    checkpoints: tuple[int, ...]
    svg: bool
    raw: dict = field(default_factory=dict, compare=False)


def _derivatives(sec: _Section, key: str):
    v = sec.get(key, "default")
    if v == "default":
        return default_derivatives(symmetric=sec.boolean("symmetric_strain_pairs", True))
    if not isinstance(v, list) or not all(isinstance(d, list) and d and all(isinstance(a, str) for a in d)
                                          for d in v):
        raise ConfigError(sec.at(key), f"expected \"default\" or a list of name lists, got {v!r}")
    return tuple(tuple(d) for d in v)


def parse_config(data: dict, base_dir: str | Path = ".") -> RunConfig:
    """Validate a config dict; relative paths are resolved against ``base_dir``."""
    base_dir = Path(base_dir)
    top = _Section(data, "", {"schema", "input", "columns", "preprocess", "weight", "model",
                              "solver", "loss", "stepwise", "output"})
    schema = top.required("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {schema!r} (expected {SCHEMA_VERSION})")

    inp = _Section(top.required("input"), "input", {"path", "format"})
    path = Path(inp.string("path"))
    fmt = inp.get("format")
    if fmt is not None and fmt not in ("csv", "json"):
        raise ConfigError("input.format", f"must be 'csv' or 'json', got {fmt!r}")

    cols = _Section(top.required("columns"), "columns",
                    {"time", "state", "target", "target_derivative", "observables"})
    state = cols.strings("state", None)
    if not state:
        raise ConfigError("columns.state", "at least one state component is required")
    target = cols.string("target")

    pre = _Section(top.get("preprocess", {}), "preprocess", {"filter", "scales"})
    filt = None
    if pre.get("filter") is not None:
        fs = _Section(pre.get("filter"), "preprocess.filter", {"window", "sigma", "passes", "columns"})
        window = fs.integer("window", None, 1)
        if window % 2 == 0:
            raise ConfigError("preprocess.filter.window", f"must be odd, got {window}")
        filt = FilterConfig(window, fs.number("sigma", None, 0), fs.integer("passes", 1, 0),
                            fs.strings("columns", None, allow_none=True))
    scales = pre.get("scales", {})
    if not isinstance(scales, dict):
        raise ConfigError("preprocess.scales", "expected an object of column -> scale")
    for k, v in scales.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"preprocess.scales.{k}", f"expected a positive number, got {v!r}")

    ws = _Section(top.get("weight", {}), "weight", {"family", "p", "R", "sigma", "epsilon"})
    family = ws.string("family", "gaussian", [f.value for f in Family])
    p = ws.integer("p", len(state), 1)
    if p != len(state):
        raise ConfigError("weight.p", f"must equal the number of state components ({len(state)}), got {p}")
    try:
        weight = WeightSpec(family, p, ws.number("R", "auto", allow_auto=True),
                            ws.number("sigma", "auto", allow_auto=True),
                            ws.number("epsilon", "auto", allow_auto=True))
    except ValueError as exc:
        raise ConfigError("weight", str(exc)) from None

    ms = _Section(top.required("model"), "model", {"kind", "dynamics", "taylor"})
    kind = ms.string("kind", None, ("dynamics", "taylor"))
    other = "taylor" if kind == "dynamics" else "dynamics"
    if ms.get(other) is not None:
        raise ConfigError(f"model.{other}", f"model.kind is {kind!r}; remove the {other!r} section")
    dyn = tay = None
    try:
        if kind == "dynamics":
            ds = _Section(ms.get("dynamics", {}), "model.dynamics",
                          {"polynomial_variables", "function", "derivatives", "special_columns",
                           "degree_cap", "factor_counts_toward_degree", "symmetric_strain_pairs"})
            dyn = DynamicsBasisConfig(
                ds.strings("polynomial_variables", list(state)), ds.string("function", "psi"),
                _derivatives(ds, "derivatives"), ds.strings("special_columns", []),
                ds.integer("degree_cap", 3, 0), ds.boolean("factor_counts_toward_degree", True))
        else:
            ts = _Section(ms.get("taylor", {}), "model.taylor", {"order", "variables", "base_index", "symmetric"})
            tay = TaylorBasisConfig(ts.integer("order", 4, 0), ts.strings("variables", list(state)),
                                    ts.integer("base_index", 0, 0), ts.boolean("symmetric", False))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model.{kind}", str(exc)) from None

    ss = _Section(top.get("solver", {}), "solver", {"kind", "lambda", "cv_grid", "backend"})
    skind = ss.string("kind", "ols", [k.value for k in SolverKind])
    lam = ss.get("lambda", 0.0)
    if lam != "cv":
        lam = ss.number("lambda", 0.0, 0.0)
    grid = ss.get("cv_grid", [])
    if not isinstance(grid, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0
                                             for v in grid):
        raise ConfigError("solver.cv_grid", f"expected a list of nonnegative numbers, got {grid!r}")
    backend = ss.get("backend")
    if backend is not None and backend not in ("least-squares", "svd", "pseudo-inverse"):
        raise ConfigError("solver.backend", f"unknown backend {backend!r}")
    try:
        solver = SolverSpec(skind, lam, tuple(grid), backend)
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None

    ls = _Section(top.get("loss", {}), "loss", {"L2", "L1", "Linf", "peak_passes"})
    try:
        loss = LossSpec(ls.number("L2", 1.0, 0), ls.number("L1", 0.0, 0), ls.number("Linf", 0.0, 0),
                        ls.integer("peak_passes", 1, 1))
    except ValueError as exc:
        raise ConfigError("loss", str(exc)) from None

    st = _Section(top.get("stepwise", {}), "stepwise", {"min_terms", "f_threshold"})
    min_terms = st.integer("min_terms", 1, 1)
    f_thr = st.number("f_threshold", None, 0, allow_none=True)

    out = _Section(top.get("output", {}), "output", {"dir", "checkpoints", "svg"})
    checkpoints = out.get("checkpoints", [])
    if not isinstance(checkpoints, list) or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 1
                                                    for c in checkpoints):
        raise ConfigError("output.checkpoints", f"expected a list of positive integers, got {checkpoints!r}")

    out_dir = Path(out.string("dir", "out"))
    return RunConfig(
        input_path=path if path.is_absolute() else base_dir / path,
        input_format=fmt, time=cols.string("time", "t"), state=state, target=target,
        target_derivative=cols.boolean("target_derivative", False),
        observables=cols.strings("observables", None, allow_none=True),
        filter=filt, scales=dict(scales), weight=weight, model_kind=kind, dynamics=dyn, taylor=tay,
        solver=solver, loss=loss, min_terms=min_terms, f_threshold=f_thr,
        output_dir=out_dir if out_dir.is_absolute() else base_dir / out_dir,
        checkpoints=tuple(checkpoints), svg=out.boolean("svg", False), raw=data)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    return parse_config(data, path.parent)


def config_echo(cfg: RunConfig) -> dict[str, Any]:
    """Resolved settings for the model file (paths relative, no machine-specific data)."""
    out = {"input": {"path": cfg.input_path.name, "format": cfg.input_format},
           "columns": {"time": cfg.time, "state": list(cfg.state), "target": cfg.target,
                       "target_derivative": cfg.target_derivative},
           "weight": {"family": cfg.weight.family.value, "p": cfg.weight.p, "R": cfg.weight.R,
                      "sigma": cfg.weight.sigma, "epsilon": cfg.weight.epsilon},
           "model": {"kind": cfg.model_kind},
           "solver": {"kind": cfg.solver.kind.value, "lambda": cfg.solver.lam,
                      "cv_grid": list(cfg.solver.cv_grid), "backend": cfg.solver.default_backend},
           "loss": {"L2": cfg.loss.l2, "L1": cfg.loss.l1, "Linf": cfg.loss.linf,
                    "peak_passes": cfg.loss.peak_passes},
           "stepwise": {"min_terms": cfg.min_terms, "f_threshold": cfg.f_threshold}}
    if cfg.filter is not None:
        out["preprocess"] = {"filter": asdict(cfg.filter), "scales": cfg.scales}
    sub = cfg.dynamics if cfg.dynamics is not None else cfg.taylor
    d = asdict(sub)
    out["model"][cfg.model_kind] = json.loads(json.dumps(d))
    return out
