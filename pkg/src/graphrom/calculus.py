"""Non-local gradients, inner products and partial derivatives on a StateGraph.

Edge vectors are stored as dense ``(n, n)`` arrays whose entry ``[i, j]`` is the
value on the pair ``(i, j)``; the diagonal is unused and kept at zero.  Every
reduction sums over the last axis with numpy's pairwise summation, so results
do not depend on BLAS threading.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import GraphError, StateGraph

MAX_ORDER = 8


def _vertex_function(g: StateGraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise GraphError(f"vertex function has shape {f.shape}, graph has {g.n} vertices")
    return f


def _edge_vector(g: StateGraph, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (g.n, g.n):
        raise GraphError(f"edge vector has shape {v.shape}, expected {(g.n, g.n)}")
    return v


def nonlocal_gradient(g: StateGraph, f) -> np.ndarray:
    """Weighted differences ``(f_j - f_i) sqrt(w_ij)`` for every ordered pair."""
    f = _vertex_function(g, f)
    return (f[None, :] - f[:, None]) * np.sqrt(g.weights)


def scalar_inner_product(g: StateGraph, f1, f2) -> float:
    f1 = _vertex_function(g, f1)
    f2 = _vertex_function(g, f2)
    return float(np.sum(f1 * f2) / g.n)


def vector_dot_at(g: StateGraph, v1, v2, i: int) -> float:
    """Contraction of two edge vectors at vertex ``i`` over all ``j != i``."""
    if not 0 <= i < g.n:
        raise GraphError(f"vertex index {i} out of range for n={g.n}")
    v1 = _edge_vector(g, v1)
    v2 = _edge_vector(g, v2)
    mask = np.arange(g.n) != i
    return float(np.sum(v1[i, mask] * v2[i, mask]) / (g.n - 1))


def unit_vector(g: StateGraph, alpha: int | str) -> np.ndarray:
    a = g.component_index(alpha)
    return nonlocal_gradient(g, g.X[:, a])


def first_derivative(g: StateGraph, f, alpha: int | str) -> np.ndarray:
    """First-order non-local partial derivative along ``alpha`` at every vertex."""
    a = g.component_index(alpha)
    f = _vertex_function(g, f)
    diff = f[None, :] - f[:, None]
    return np.sum(diff * g.weighted_deltas[a], axis=1) / (g.n - 1)


def _multi_index(g: StateGraph, multi_index: Sequence[int | str]) -> tuple[int, ...]:
    if isinstance(multi_index, (int, str, np.integer)):
        multi_index = (multi_index,)
    idx = tuple(g.component_index(a) for a in multi_index)
    if len(idx) < 1:
        raise GraphError("a derivative request needs at least one index")
    if len(idx) > MAX_ORDER:
        raise GraphError(f"derivative order {len(idx)} exceeds the supported maximum {MAX_ORDER}")
    return idx


def partial_derivative(g: StateGraph, f, multi_index: Sequence[int | str]) -> np.ndarray:
    """Non-local partial derivative of order ``len(multi_index)``.

    Higher orders apply the first-order operator repeatedly: the derivative
    along ``multi_index[0]`` is taken first and ``multi_index[-1]`` last.
    Mixed partials are not symmetric in general.
    """
    out = _vertex_function(g, f)
    for a in _multi_index(g, multi_index):
        out = first_derivative(g, out, a)
    return out


class DerivativeCache:
    """Memoised derivatives of one vertex function, reusing shared prefixes."""

    def __init__(self, g: StateGraph, f):
        self.graph = g
        self.f = _vertex_function(g, f)
        self._store: dict[tuple[int, ...], np.ndarray] = {(): self.f}

    def __call__(self, multi_index: Sequence[int | str]) -> np.ndarray:
        empty = not isinstance(multi_index, (str, int, np.integer)) and len(multi_index) == 0
        key = () if empty else _multi_index(self.graph, multi_index)
        hit = self._store.get(key)
        if hit is None:
            prev = self(key[:-1])
            hit = first_derivative(self.graph, prev, key[-1])
            self._store[key] = hit
        return hit

    def __len__(self):
        return len(self._store) - 1


def gram_matrices(g: StateGraph) -> np.ndarray:
    """(n, p, p) array of unit-vector contractions at every vertex."""
    d = g.deltas
    w = g.weights
    n, p = g.n, g.p
    G = np.empty((n, p, p))
    for a in range(p):
        for b in range(a, p):
            G[:, a, b] = np.sum(d[a] * d[b] * w, axis=1) / (n - 1)
            G[:, b, a] = G[:, a, b]
    return G


def verify_unit_norm(g: StateGraph, i: int | None = None) -> np.ndarray:
    """Gram matrix of the unit vectors at vertex ``i``.

    With ``i=None`` returns the worst case over vertices instead: entry
    ``[a, b]`` is ``max_i |G_i[a, b] - delta_ab|``.  Diagnostic only; weights
    are never changed.
    """
    G = gram_matrices(g)
    if i is not None:
        if not 0 <= i < g.n:
            raise GraphError(f"vertex index {i} out of range for n={g.n}")
        return G[i]
    return np.max(np.abs(G - np.eye(g.p)[None]), axis=0)


def commutator(g: StateGraph, f, alpha, beta) -> np.ndarray:
    """``d2f/da db - d2f/db da`` at every vertex (mixed partials need not commute)."""
    cache = DerivativeCache(g, f)
    return cache((alpha, beta)) - cache((beta, alpha))
