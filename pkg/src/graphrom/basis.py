"""Design matrices: polynomial-product dynamics bases and modified Taylor-series bases."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import MAX_ORDER, DerivativeCache
from .graph import GraphError, StateGraph
from .preprocessing import NormalizationPair, column_scales

PHASE = "phi"
STRAINS = ("e11", "e12", "e22")
SPECIALS = ("L1", "L2", "N1", "N2")


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class TermDescriptor:
    """One product term: a monomial times at most one derivative or special factor.

    ``powers`` holds ``(variable, exponent)`` pairs with positive exponents in
    variable order.  ``derivative`` is ``(function, multi_index)`` with the
    multi-index applied first element first.  ``special`` names an observable
    column that enters with exponent 1.
    """

    powers: tuple[tuple[str, int], ...] = ()
    derivative: tuple[str, tuple[str, ...]] | None = None
    special: str | None = None

    def __post_init__(self):
        if self.derivative is not None and self.special is not None:
            raise BasisError("a term holds at most one derivative or special factor, not both")
        powers = tuple((str(v), int(e)) for v, e in self.powers)
        if any(e < 0 for _, e in powers):
            raise BasisError(f"negative exponent in {powers}")
        object.__setattr__(self, "powers", tuple((v, e) for v, e in powers if e > 0))
        if self.derivative is not None:
            fn, idx = self.derivative
            object.__setattr__(self, "derivative", (str(fn), tuple(str(a) for a in idx)))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.powers)

    @property
    def factor(self) -> str | None:
        if self.derivative is not None:
            fn, idx = self.derivative
            return f"d{len(idx)}({fn};{','.join(idx)})"
        return self.special

    @property
    def label(self) -> str:
        parts = [self.factor] if self.factor else []
        parts += [v if e == 1 else f"{v}^{e}" for v, e in self.powers]
        return "*".join(parts) if parts else "1"

    def to_dict(self) -> dict:
        out = {"kind": "product", "powers": {v: e for v, e in self.powers}}
        if self.derivative is not None:
            out["derivative"] = {"function": self.derivative[0], "index": list(self.derivative[1])}
        if self.special is not None:
            out["special"] = self.special
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TermDescriptor":
        der = d.get("derivative")
        return cls(tuple(d.get("powers", {}).items()),
                   (der["function"], tuple(der["index"])) if der else None,
                   d.get("special"))


@dataclass(frozen=True)
class TaylorTerm:
    """Ordered multi-index of one modified Taylor-series term (empty for the base term)."""

    multi_index: tuple[str, ...] = ()
    multiplicity: int = 1

    @property
    def order(self) -> int:
        return len(self.multi_index)

    @property
    def label(self) -> str:
        return f"T{self.order}({','.join(self.multi_index)})"

    def to_dict(self) -> dict:
        return {"kind": "taylor", "index": list(self.multi_index), "multiplicity": self.multiplicity}

    @classmethod
    def from_dict(cls, d: dict) -> "TaylorTerm":
        return cls(tuple(d["index"]), int(d.get("multiplicity", 1)))


def descriptor_from_dict(d: dict):
    if d.get("kind") == "taylor":
        return TaylorTerm.from_dict(d)
    return TermDescriptor.from_dict(d)


def default_derivatives(phase: str = PHASE, strains: Sequence[str] = STRAINS,
                        symmetric: bool = True) -> tuple[tuple[str, ...], ...]:
    """Free-energy derivative multi-indices used by the phase-fraction model.

    Second order in (phase, strain) and (phase, phase); third order in
    (phase, strain, strain), (phase, phase, strain) and (phase, phase, phase).
    With ``symmetric`` each unordered strain pair appears once.
    """
    strains = tuple(strains)
    pairs = (itertools.combinations_with_replacement(strains, 2) if symmetric
             else itertools.product(strains, repeat=2))
    out = [(phase, s) for s in strains]
    out.append((phase, phase))
    out += [(phase, a, b) for a, b in pairs]
    out += [(phase, phase, s) for s in strains]
    out.append((phase, phase, phase))
    return tuple(out)


@dataclass(frozen=True)
class DynamicsBasisConfig:
    """Polynomial-product basis for first-order dynamics.

    With ``factor_counts_toward_degree`` the derivative or special factor adds
    one to the term degree, so factor terms carry monomials of degree at most
    ``degree_cap - 1``.  Otherwise every factor multiplies all monomials up to
    ``degree_cap``.
    """

    polynomial_variables: tuple[str, ...] = (PHASE,) + STRAINS
    function: str = "psi"
    derivatives: tuple[tuple[str, ...], ...] = field(default_factory=default_derivatives)
    special_columns: tuple[str, ...] = SPECIALS
    degree_cap: int = 3
    factor_counts_toward_degree: bool = True

    def __post_init__(self):
        if int(self.degree_cap) != self.degree_cap or self.degree_cap < 0:
            raise BasisError(f"degree_cap must be a nonnegative integer, got {self.degree_cap}")
        object.__setattr__(self, "polynomial_variables", tuple(self.polynomial_variables))
        object.__setattr__(self, "derivatives", tuple(tuple(d) for d in self.derivatives))
        object.__setattr__(self, "special_columns", tuple(self.special_columns))
        for d in self.derivatives:
            if not 1 <= len(d) <= MAX_ORDER:
                raise BasisError(f"derivative multi-index {d} must have 1..{MAX_ORDER} entries")

    @property
    def n_factors(self) -> int:
        return len(set(self.derivatives)) + len(set(self.special_columns))


@dataclass(frozen=True)
class TaylorBasisConfig:
    """Modified Taylor series of order ``order`` about vertex ``base_index``.

    Mixed partials are enumerated as ordered tuples.  With ``symmetric`` each
    unordered multi-index appears once and its column carries the number of
    orderings as a factor.
    """

    order: int = 4
    variables: tuple[str, ...] = (PHASE,) + STRAINS
    base_index: int = 0
    symmetric: bool = False

    def __post_init__(self):
        if int(self.order) != self.order or not 0 <= self.order <= MAX_ORDER:
            raise BasisError(f"Taylor order must be an integer in [0, {MAX_ORDER}], got {self.order}")
        if len(self.variables) == 0:
            raise BasisError("a Taylor basis needs at least one variable")
        object.__setattr__(self, "variables", tuple(self.variables))


@dataclass
class OperatorBasis:
    """Design matrix with its term descriptors.

    Fixed columns enter every model with physical coefficient 1 and are never
    removed.  ``normalization`` scales each column and the target to unit
    Euclidean norm (all-zero columns keep scale 1).
    """

    X: np.ndarray
    descriptors: tuple
    fixed_mask: np.ndarray
    y: np.ndarray | None = None
    normalization: NormalizationPair | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.fixed_mask = np.asarray(self.fixed_mask, dtype=bool)
        self.descriptors = tuple(self.descriptors)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.descriptors):
            raise BasisError(f"{len(self.descriptors)} descriptors for a matrix of shape {self.X.shape}")
        if self.fixed_mask.shape != (self.X.shape[1],):
            raise BasisError("fixed_mask needs one entry per column")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float)
            if self.y.shape != (self.X.shape[0],):
                raise BasisError(f"target has shape {self.y.shape}, basis has {self.X.shape[0]} rows")
        if self.normalization is None:
            nx = column_scales(self.X, "l2", allow_zero=True)
            ny = column_scales(self.y[:, None], "l2", allow_zero=True) if self.y is not None else np.ones(1)
            self.normalization = NormalizationPair(nx, ny)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(d.label for d in self.descriptors)

    @property
    def X_normalized(self) -> np.ndarray:
        return self.X * self.normalization.nx

    @property
    def y_normalized(self) -> np.ndarray:
        return self.y * self.normalization.ny[0]

    def physical_coef(self, coef_normalized) -> np.ndarray:
        g = self.normalization.physical_coef(coef_normalized)
        g[self.fixed_mask] = 1.0
        return g

    def normalized_coef(self, coef_physical) -> np.ndarray:
        return self.normalization.normalize_coef(coef_physical)

    def predict(self, coef_physical) -> np.ndarray:
        g = np.array(coef_physical, dtype=float)
        g[self.fixed_mask] = 1.0
        return self.X @ g


def _resolve_column(g: StateGraph, name: str) -> np.ndarray:
    try:
        return g.column(name)
    except GraphError:
        raise BasisError(f"basis references missing column {name!r}; graph has states "
                         f"{list(g.labels)} and observables {sorted(g.observables)}") from None


def _vertex_values(g: StateGraph, f) -> np.ndarray:
    if isinstance(f, str):
        return _resolve_column(g, f)
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise BasisError(f"vertex function has shape {f.shape}, graph has {g.n} vertices")
    return f


def monomials(variables: Sequence[str], max_degree: int) -> list[tuple[tuple[str, int], ...]]:
    """All monomials of total degree <= ``max_degree`` in graded lexicographic order."""
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(variables)), deg):
            counts = [0] * len(variables)
            for k in combo:
                counts[k] += 1
            out.append(tuple((variables[k], counts[k]) for k in range(len(variables)) if counts[k]))
    return out


def enumerate_dynamics_terms(cfg: DynamicsBasisConfig) -> list[TermDescriptor]:
    """Descriptors in column order: bare monomials, then each derivative factor, then each special."""
    A = int(cfg.degree_cap)
    sub = A - 1 if cfg.factor_counts_toward_degree else A
    terms = [TermDescriptor(m) for m in monomials(cfg.polynomial_variables, A)]
    factor_monos = monomials(cfg.polynomial_variables, sub) if sub >= 0 else []
    for d in cfg.derivatives:
        terms += [TermDescriptor(m, derivative=(cfg.function, d)) for m in factor_monos]
    for s in cfg.special_columns:
        terms += [TermDescriptor(m, special=s) for m in factor_monos]
    seen = set()
    unique = []
    for t in terms:
        if t not in seen:
            seen.add(t)
            unique.append(t)
    return unique


def dynamics_term_count(m: int, A: int, n_factors: int, factor_counts_toward_degree: bool = True) -> int:
    """Closed-form size of the dynamics basis (stars and bars)."""
    bare = math.comb(A + m, m)
    sub = A - 1 if factor_counts_toward_degree else A
    return bare + (n_factors * math.comb(sub + m, m) if sub >= 0 else 0)


def build_dynamics_basis(g: StateGraph, cfg: DynamicsBasisConfig, target=None) -> OperatorBasis:
    """Columns of products of polynomial variables with derivative or special factors.

    Derivative factors are non-local derivatives of ``cfg.function`` evaluated
    at each row's own vertex.
    """
    terms = enumerate_dynamics_terms(cfg)
    cols = {v: _resolve_column(g, v) for v in cfg.polynomial_variables}
    specials = {s: _resolve_column(g, s) for s in cfg.special_columns}
    cache = None
    if cfg.derivatives:
        cache = DerivativeCache(g, _resolve_column(g, cfg.function))
        for d in cfg.derivatives:
            for a in d:
                if a not in g.labels:
                    raise BasisError(f"derivative direction {a!r} is not a state component of the graph")
    X = np.empty((g.n, len(terms)))
    for k, t in enumerate(terms):
        col = np.ones(g.n)
        for v, e in t.powers:
            col = col * cols[v] ** e
        if t.derivative is not None:
            col = col * cache(t.derivative[1])
        elif t.special is not None:
            col = col * specials[t.special]
        X[:, k] = col
    y = None if target is None else _vertex_values(g, target)
    return OperatorBasis(X, tuple(terms), np.zeros(len(terms), dtype=bool), y)


def taylor_term_count(q: int, k: int, symmetric: bool = False) -> int:
    if symmetric:
        return math.comb(k + q, q)
    return sum(q**l for l in range(k + 1))


def enumerate_taylor_terms(cfg: TaylorBasisConfig) -> list[TaylorTerm]:
    out = [TaylorTerm()]
    for l in range(1, cfg.order + 1):
        if cfg.symmetric:
            for combo in itertools.combinations_with_replacement(cfg.variables, l):
                mult = math.factorial(l)
                for v in set(combo):
                    mult //= math.factorial(combo.count(v))
                out.append(TaylorTerm(combo, mult))
        else:
            out += [TaylorTerm(combo) for combo in itertools.product(cfg.variables, repeat=l)]
    return out


def build_taylor_basis(g: StateGraph, f, cfg: TaylorBasisConfig) -> OperatorBasis:
    """Modified Taylor-series columns about the base vertex ``i``.

    Row ``j`` of the column for multi-index ``(a1..al)`` is the non-local
    derivative at ``i`` times ``prod_m (x_j - x_i)[a_m] / l!``.  The order-0
    column is the constant ``f(x_i)`` and is the only fixed column.  The
    target is ``f`` at every vertex.
    """
    i = cfg.base_index
    if int(i) != i or not 0 <= i < g.n:
        raise BasisError(f"base index {i} out of range for a graph with {g.n} vertices")
    for v in cfg.variables:
        if v not in g.labels:
            raise BasisError(f"unknown Taylor variable {v!r}; graph state components are {list(g.labels)}")
    values = _vertex_values(g, f)
    cache = DerivativeCache(g, values)
    dx = {v: g.X[:, g.component_index(v)] - g.X[i, g.component_index(v)] for v in cfg.variables}
    terms = enumerate_taylor_terms(cfg)
    X = np.empty((g.n, len(terms)))
    for k, t in enumerate(terms):
        if t.order == 0:
            X[:, k] = values[i]
            continue
        col = np.full(g.n, cache(t.multi_index)[i] * t.multiplicity / math.factorial(t.order))
        for v in t.multi_index:
            col = col * dx[v]
        X[:, k] = col
    fixed = np.zeros(len(terms), dtype=bool)
    fixed[0] = True
    return OperatorBasis(X, tuple(terms), fixed, values)


def renormalize_for_new_data(basis_old: OperatorBasis, coeffs_old, basis_new: OperatorBasis) -> np.ndarray:
    """Map normalized coefficients fitted on ``basis_old`` to the frame of ``basis_new``.

    Applies ``g' = N_X'^-1 N_X g N_y^-1 N_y'`` so the physical coefficients,
    and hence unnormalized predictions, are unchanged.  Fixed columns keep
    physical coefficient exactly 1.
    """
    if basis_old.descriptors != basis_new.descriptors:
        mism = next((a.label, b.label) for a, b in zip(basis_old.descriptors, basis_new.descriptors) if a != b) \
            if len(basis_old.descriptors) == len(basis_new.descriptors) else \
            (f"{len(basis_old.descriptors)} terms", f"{len(basis_new.descriptors)} terms")
        raise BasisError(f"descriptor lists differ between bases: {mism[0]} vs {mism[1]}")
    phys = basis_old.physical_coef(np.asarray(coeffs_old, dtype=float))
    return basis_new.normalized_coef(phys)
