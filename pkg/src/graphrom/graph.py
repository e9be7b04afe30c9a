"""Fully connected weighted graphs whose vertices are computed states."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .weights import WeightSpec, eval_weight


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    components: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        comps = tuple(float(c) for c in self.components)
        labels = tuple(str(lab) for lab in self.labels)
        if len(comps) == 0:
            raise GraphError("a state vector needs at least one component")
        if len(comps) != len(labels):
            raise GraphError(f"{len(comps)} components but {len(labels)} labels")
        if not all(np.isfinite(comps)):
            raise GraphError(f"non-finite component in state {comps}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return len(self.components)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


class StateGraph:
    """Immutable snapshot of states, observables and pairwise weights.

    Attributes
    ----------
    X : (n, p) ndarray
        State coordinates, one row per vertex.
    labels : tuple of str
        Names of the p state components.
    observables : dict of str -> (n,) ndarray
        Named scalar columns attached to the vertices.
    weights : (n, n) ndarray
        Symmetric, nonnegative, zero diagonal.
    radius : float
        Half the largest pairwise distance.
    weight_spec : WeightSpec
        Fully resolved spec used to fill ``weights`` (None for custom weights).
    """

    def __init__(self, X, labels, observables, weights, radius, weight_spec=None):
        self.X = _readonly(X)
        self.labels = tuple(labels)
        self.observables = {k: _readonly(v) for k, v in observables.items()}
        self.weights = _readonly(weights)
        self.radius = float(radius)
        self.weight_spec = weight_spec

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def __repr__(self):
        return f"StateGraph(n={self.n}, p={self.p}, labels={self.labels}, radius={self.radius:.6g})"

    def component_index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.p:
                raise GraphError(f"component index {name} out of range for p={self.p}")
            return int(name)
        try:
            return self.labels.index(name)
        except ValueError:
            raise GraphError(f"unknown state component {name!r}; have {self.labels}") from None

    def column(self, name: str) -> np.ndarray:
        """A state component or observable by name."""
        if name in self.labels:
            return self.X[:, self.labels.index(name)]
        if name in self.observables:
            return self.observables[name]
        raise GraphError(f"no state component or observable named {name!r}")

    def state(self, i: int) -> StateVector:
        return StateVector(tuple(self.X[i]), self.labels)

    @cached_property
    def deltas(self) -> np.ndarray:
        """(p, n, n) array of coordinate differences ``x_j - x_i`` at ``[a, i, j]``."""
        d = self.X.T[:, None, :] - self.X.T[:, :, None]
        d.flags.writeable = False
        return d

    @cached_property
    def weighted_deltas(self) -> np.ndarray:
        """(p, n, n) array ``(x_j - x_i)**a * w_ij``; the kernel of the first derivative."""
        m = self.deltas * self.weights[None, :, :]
        m.flags.writeable = False
        return m

    def with_weights(self, weights) -> "StateGraph":
        """Copy of this graph with a custom symmetric weight table."""
        w = np.asarray(weights, dtype=float)
        _check_weight_table(w, self.n)
        return StateGraph(self.X, self.labels, self.observables, w, self.radius, None)


def _check_weight_table(w: np.ndarray, n: int) -> None:
    if w.shape != (n, n):
        raise GraphError(f"weight table must be {n}x{n}, got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise GraphError("weights must be finite and nonnegative")
    if np.any(np.diag(w) != 0):
        raise GraphError("self edges are not allowed (nonzero diagonal weight)")
    if not np.array_equal(w, w.T):
        raise GraphError("weight table must be exactly symmetric")


def distance_matrix(X: np.ndarray) -> np.ndarray:
    """Euclidean distances, accumulated one component at a time (exactly symmetric)."""
    n, p = X.shape
    r2 = np.zeros((n, n))
    for a in range(p):
        d = X[None, :, a] - X[:, None, a]
        r2 += d * d
    return np.sqrt(r2)


def build_graph(
    states: Sequence[StateVector] | np.ndarray,
    observables: Mapping[str, Sequence[float]] | None,
    weight_spec: WeightSpec,
    labels: Sequence[str] | None = None,
) -> StateGraph:
    """Build the fully connected weighted graph over ``states``.

    ``states`` is either a sequence of :class:`StateVector` or an ``(n, p)``
    array together with ``labels``.  Every pair of distinct vertices gets the
    weight ``eval_weight(weight_spec, |x_j - x_i|)``.  An "auto" radius in the
    spec is replaced by half the largest pairwise distance.
    """
    if isinstance(states, np.ndarray) or (len(states) and not isinstance(states[0], StateVector)):
        X = np.asarray(states, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if labels is None:
            labels = tuple(f"x{a}" for a in range(X.shape[1]))
        if len(labels) != X.shape[1]:
            raise GraphError(f"{X.shape[1]} state components but {len(labels)} labels")
    else:
        if not states:
            raise GraphError("a graph needs at least 2 vertices, got 0")
        dims = {s.p for s in states}
        if len(dims) != 1:
            raise GraphError(f"state vectors have mismatched dimensions {sorted(dims)}")
        label_sets = {s.labels for s in states}
        if len(label_sets) != 1:
            raise GraphError("state vectors have mismatched labels")
        labels = states[0].labels
        X = np.array([s.components for s in states], dtype=float)

    n, p = X.shape
    if n < 2:
        raise GraphError(f"a graph needs at least 2 vertices, got {n}")
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise GraphError(f"non-finite state component at vertex {bad[0]}, component {labels[bad[1]]!r}")
    if weight_spec.p != p:
        raise GraphError(f"weight spec has p={weight_spec.p} but states have dimension {p}")

    obs = {}
    for name, col in (observables or {}).items():
        col = np.asarray(col, dtype=float)
        if col.shape != (n,):
            raise GraphError(f"observable {name!r} has length {col.shape} but graph has {n} vertices")
        obs[name] = col

    r = distance_matrix(X)
    off = ~np.eye(n, dtype=bool)
    if np.any(r[off] == 0):
        i, j = np.argwhere((r == 0) & off)[0]
        raise GraphError(
            f"vertices {i} and {j} are identical states; zero distance makes the "
            "weights singular (remove duplicate states)")
    radius = r.max() / 2
    spec = weight_spec.resolve(radius)

    w = np.zeros((n, n))
    w[off] = eval_weight(spec, r[off])
    return StateGraph(X, labels, obs, w, radius, spec)


def pairwise_distance(g: StateGraph, i: int, j: int) -> float:
    for k in (i, j):
        if not 0 <= k < g.n:
            raise GraphError(f"vertex index {k} out of range for n={g.n}")
    if i == j:
        raise GraphError("distance from a vertex to itself is excluded (no self edges)")
    d = g.X[j] - g.X[i]
    return float(np.sqrt(np.sum(d * d)))
