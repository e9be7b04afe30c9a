"""Linear solvers, weighted losses, leave-one-out CV and backward stepwise selection.

All solvers minimise ``||y - X g||^2`` plus, for Ridge, ``lam ||g||_2^2`` and,
for Lasso, ``lam ||g||_1``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .preprocessing import find_peaks, scale_and_normalize

RCOND = 1e-12


class ConvergenceWarning(UserWarning):
    pass


class SolverKind(str, enum.Enum):
    OLS = "ols"
    RIDGE = "ridge"
    LASSO = "lasso"


BACKENDS = ("least-squares", "svd", "pseudo-inverse")


@dataclass(frozen=True)
class SolverSpec:
    """Which solver to run and how to pick its regularisation.

    ``lam`` is a fixed value or the string ``"cv"``, in which case the value
    in ``cv_grid`` with the lowest leave-one-out loss is used.
    """

    kind: SolverKind = SolverKind.OLS
    lam: float | str = 0.0
    cv_grid: tuple[float, ...] = ()
    backend: str | None = None
    rcond: float = RCOND
    lasso_tol: float = 1e-10
    lasso_max_sweeps: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind(str(getattr(self.kind, "value", self.kind)).lower()))
        object.__setattr__(self, "cv_grid", tuple(float(v) for v in self.cv_grid))
        if self.lam == "cv":
            if not self.cv_grid:
                raise ValueError("lam='cv' needs a non-empty cv_grid")
        elif isinstance(self.lam, str):
            raise ValueError(f"lam must be a number or 'cv', got {self.lam!r}")
        elif self.lam < 0:
            raise ValueError(f"regularisation lam must be >= 0, got {self.lam}")
        if any(v < 0 for v in self.cv_grid):
            raise ValueError("cv_grid values must be >= 0")
        if self.backend is not None and self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.kind is SolverKind.LASSO:
            warnings.warn("Lasso inside backward stepwise selection tends to zero terms "
                          "the stepwise procedure would keep; OLS or Ridge is preferred",
                          stacklevel=3)

    @property
    def uses_cv(self) -> bool:
        return self.lam == "cv" and self.kind is not SolverKind.OLS

    @property
    def default_backend(self) -> str:
        if self.backend is not None:
            return self.backend
        return "svd" if self.kind is SolverKind.RIDGE else "least-squares"


@dataclass
class Fit:
    coef: np.ndarray
    kind: SolverKind
    lam: float
    rank: int
    cutoff: float
    converged: bool = True
    sweeps: int = 0


def _check(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError(f"design matrix must be a non-empty 2-D array, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def _svd(X, rcond):
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    cutoff = rcond * s[0] if s.size else 0.0
    return U, s, Vt, cutoff


def _rank(s, cutoff) -> int:
    return int(np.sum(s > cutoff))


def ols_fit(X, y, backend: str = "least-squares", rcond: float = RCOND) -> np.ndarray:
    """Minimum-norm least-squares coefficients.

    Singular values below ``rcond * s_max`` are treated as zero.
    """
    X, y = _check(X, y)
    if backend == "least-squares":
        return np.linalg.lstsq(X, y, rcond=rcond)[0]
    if backend == "pseudo-inverse":
        return np.linalg.pinv(X, rcond=rcond) @ y
    if backend == "svd":
        return ridge_fit(X, y, 0.0, backend="svd", rcond=rcond)
    raise ValueError(f"unknown backend {backend!r}")


def ridge_fit(X, y, lam: float, backend: str = "svd", rcond: float = RCOND) -> np.ndarray:
    """Ridge coefficients ``(X^T X + lam I)^-1 X^T y``.

    The SVD path applies the filter factors ``s / (s**2 + lam)``.  At
    ``lam == 0`` singular values below the cutoff are dropped, which gives the
    minimum-norm least-squares solution.
    """
    X, y = _check(X, y)
    if lam < 0:
        raise ValueError(f"ridge parameter must be >= 0, got {lam}")
    if backend == "svd":
        U, s, Vt, cutoff = _svd(X, rcond)
        keep = s > cutoff if lam == 0 else s > 0
        filt = np.zeros_like(s)
        filt[keep] = s[keep] / (s[keep] ** 2 + lam)
        proj = U.T @ y
        return Vt.T @ (filt[:, None] * proj if proj.ndim == 2 else filt * proj)
    if backend == "least-squares":
        P = X.shape[1]
        Xa = np.vstack([X, math.sqrt(lam) * np.eye(P)])
        ya = np.concatenate([y, np.zeros((P,) + y.shape[1:])])
        return np.linalg.lstsq(Xa, ya, rcond=rcond)[0]
    if backend == "pseudo-inverse":
        A = X.T @ X + lam * np.eye(X.shape[1])
        return np.linalg.pinv(A, rcond=rcond, hermitian=True) @ (X.T @ y)
    raise ValueError(f"unknown backend {backend!r}")


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lasso_fit(X, y, lam: float, tol: float = 1e-10, max_sweeps: int = 100_000,
              return_info: bool = False):
    """Cyclic coordinate descent for ``||y - X g||^2 + lam ||g||_1``.

    Stops once no coefficient moves by more than ``tol`` in a sweep.  A
    :class:`ConvergenceWarning` is issued if ``max_sweeps`` is reached.
    """
    X, y = _check(X, y)
    if lam < 0:
        raise ValueError(f"lasso parameter must be >= 0, got {lam}")
    if y.ndim != 1:
        raise ValueError("lasso_fit handles a single target column")
    n, P = X.shape
    col_sq = np.sum(X * X, axis=0)
    g = np.zeros(P)
    r = y.copy()
    half = lam / 2
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for k in range(P):
            if col_sq[k] == 0:
                continue
            old = g[k]
            rho = X[:, k] @ r + col_sq[k] * old
            new = soft_threshold(rho, half) / col_sq[k]
            if new != old:
                r -= X[:, k] * (new - old)
                g[k] = new
                biggest = max(biggest, abs(new - old))
        if biggest < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"lasso coordinate descent did not converge in {sweep} sweeps",
                      ConvergenceWarning, stacklevel=2)
    if return_info:
        return g, converged, sweep
    return g


def solve(X, y, spec: SolverSpec, lam: float | None = None) -> Fit:
    """Run the solver described by ``spec`` (with ``lam`` overriding a CV spec)."""
    X, y = _check(X, y)
    if lam is None:
        lam = 0.0 if spec.lam == "cv" else float(spec.lam)
    s = np.linalg.svd(X, compute_uv=False)
    cutoff = spec.rcond * s[0] if s.size else 0.0
    rank = _rank(s, cutoff)
    if spec.kind is SolverKind.OLS:
        coef = ols_fit(X, y, spec.default_backend, spec.rcond)
        return Fit(coef, spec.kind, 0.0, rank, cutoff)
    if spec.kind is SolverKind.RIDGE:
        coef = ridge_fit(X, y, lam, spec.default_backend, spec.rcond)
        return Fit(coef, spec.kind, lam, rank, cutoff)
    coef, ok, sweeps = lasso_fit(X, y, lam, spec.lasso_tol, spec.lasso_max_sweeps, return_info=True)
    return Fit(coef, spec.kind, lam, rank, cutoff, ok, sweeps)


# --- losses ------------------------------------------------------------------

@dataclass(frozen=True)
class LossSpec:
    """Weights of the RMS, peak-restricted mean-absolute and max-error terms."""

    l2: float = 1.0
    l1: float = 0.0
    linf: float = 0.0
    peak_passes: int = 1

    def __post_init__(self):
        for name in ("l2", "l1", "linf"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be >= 0")
        if not (self.l2 > 0 or self.l1 > 0 or self.linf > 0):
            raise ValueError("at least one loss weight must be positive")
        if self.peak_passes < 1:
            raise ValueError("peak_passes must be >= 1")


@dataclass(frozen=True)
class LossValue:
    total: float
    l2: float
    l1: float
    linf: float
    n_peaks: int
    empty_peaks: bool = False


def peak_set(y, spec: LossSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        return np.zeros(0, dtype=int)
    return find_peaks(y, spec.peak_passes)


def loss_components(y, yhat, spec: LossSpec, peaks=None) -> LossValue:
    """Each loss term plus their weighted total.

    The L1 term is the mean absolute error over the extrema of ``y`` (or the
    supplied ``peaks``).  With no extrema it contributes zero and
    ``empty_peaks`` is set.
    """
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"y has shape {y.shape} but prediction has {yhat.shape}")
    err = yhat - y
    l2 = float(np.sqrt(np.mean(err * err)))
    linf = float(np.max(np.abs(err)))
    l1 = 0.0
    empty = False
    n_peaks = 0
    if spec.l1 > 0:
        if peaks is None:
            peaks = peak_set(y, spec)
        n_peaks = len(peaks)
        if n_peaks:
            l1 = float(np.mean(np.abs(err[peaks])))
        else:
            empty = True
            warnings.warn("L1 loss has an empty peak set; its term contributes 0", stacklevel=2)
    total = spec.l2 * l2 + spec.l1 * l1 + spec.linf * linf
    return LossValue(total, l2, l1, linf, n_peaks, empty)


def weighted_loss(y, yhat, spec: LossSpec, peaks=None) -> float:
    return loss_components(y, yhat, spec, peaks).total


# --- cross validation ---------------------------------------------------------

def loo_predictions(X, y, spec: SolverSpec, lam: float) -> np.ndarray:
    """Prediction for each sample from a model fitted without it."""
    X, y = _check(X, y)
    n = X.shape[0]
    if spec.kind is SolverKind.RIDGE and lam > 0:
        # exact leave-one-out shortcut for ridge: e_i / (1 - H_ii)
        U, s, _ = np.linalg.svd(X, full_matrices=False)
        shrink = s * s / (s * s + lam)
        H_diag = np.sum(U * U * shrink, axis=1)
        fitted = U @ (shrink * (U.T @ y))
        if np.all(1 - H_diag > 1e-10):
            return y - (y - fitted) / (1 - H_diag)
    out = np.empty(n)
    rows = np.arange(n)
    for i in range(n):
        keep = rows != i
        fit = solve(X[keep], y[keep], spec, lam)
        out[i] = X[i] @ fit.coef
    return out


def loo_cross_validate(X, y, spec: SolverSpec, loss: LossSpec, grid: Sequence[float] | None = None,
                       peaks=None):
    """Pick the regularisation with the lowest leave-one-out loss.

    The held-out predictions of all ``n`` folds are scored together with the
    same :class:`LossSpec` used by the stepwise selection.  Ties (to 1e-12
    relative) go to the larger value.  Returns ``(best_lam, {lam: loss})``.
    """
    X, y = _check(X, y)
    n, P = X.shape
    if n < 3:
        raise ValueError(f"leave-one-out CV needs at least 3 samples, got {n}")
    if grid is None:
        grid = spec.cv_grid if spec.cv_grid else (0.0 if spec.lam == "cv" else float(spec.lam),)
    if len(grid) == 0:
        raise ValueError("empty regularisation grid")
    if spec.kind is SolverKind.OLS:
        grid = (0.0,)
    if P > n - 1:
        warnings.warn(f"{P} terms but only {n - 1} samples per fold; folds use minimum-norm fits",
                      stacklevel=2)
    if peaks is None and loss.l1 > 0:
        peaks = peak_set(y, loss)
    table = {}
    for lam in grid:
        yhat = loo_predictions(X, y, spec, float(lam))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            table[float(lam)] = loss_components(y, yhat, loss, peaks).total
    best = None
    for lam, value in table.items():
        if best is None:
            best = lam
            continue
        ref = table[best]
        if value < ref and not _tied(value, ref):
            best = lam
        elif _tied(value, ref) and lam > best:
            best = lam
    return best, table


def _tied(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(abs(a), abs(b))


# --- backward stepwise selection -------------------------------------------

@dataclass
class StepRecord:
    iteration: int
    n_terms: int
    active: tuple[int, ...]
    removed: int | None
    removed_label: str
    F: float
    rss: float
    loss: LossValue
    coef: np.ndarray
    coef_normalized: np.ndarray
    lam: float
    rank: int
    cutoff: float
    flags: tuple[str, ...] = ()


@dataclass
class StepwiseTrace:
    labels: tuple[str, ...]
    fixed_mask: np.ndarray
    solver: SolverSpec
    loss_spec: LossSpec
    records: list[StepRecord] = field(default_factory=list)
    nx: np.ndarray | None = None
    ny: float = 1.0

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k) -> StepRecord:
        return self.records[k]

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    def at_terms(self, n_terms: int) -> StepRecord:
        """Record whose model has ``n_terms`` terms (or the nearest larger one)."""
        best = None
        for rec in self.records:
            if rec.n_terms >= n_terms and (best is None or rec.n_terms < best.n_terms):
                best = rec
        return best if best is not None else self.records[0]

    def surviving_labels(self, record: StepRecord | None = None) -> list[str]:
        rec = record or self.final
        return [self.labels[k] for k in rec.active]

    def predict(self, X, record: StepRecord | None = None) -> np.ndarray:
        rec = record or self.final
        return np.asarray(X, dtype=float) @ rec.coef


def _removal_rss_fast(Xa, y, lam, coef):
    """RSS after dropping each column, from one inverse of the normal matrix.

    Constraining coefficient k to zero in the (ridge) normal equations gives
    ``g - A^-1 e_k g_k / (A^-1)_kk``, which is the refit without column k.
    """
    A = Xa.T @ Xa + lam * np.eye(Xa.shape[1])
    try:
        if np.linalg.cond(A) > 1e12:
            return None
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return None
    Ainv = 0.5 * (Ainv + Ainv.T)
    G = coef[:, None] - Ainv * (coef / np.diag(Ainv))[None, :]
    R = y[:, None] - Xa @ G
    return np.sum(R * R, axis=0)


def _removal_loss(X, y, base, Xt, dt, free_idx, nx_free, ny, active, solver, lam, loss, peaks):
    out = np.empty(len(active))
    for pos in range(len(active)):
        keep = active[:pos] + active[pos + 1:]
        yhat = base.copy()
        if keep:
            coef = solve(Xt[:, keep], dt, solver, lam).coef
            yhat += X[:, free_idx[keep]] @ (coef * nx_free[keep] / ny)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out[pos] = loss_components(y, yhat, loss, peaks).total
    return out


def _select_lam(Xa, y, solver, loss, peaks):
    if not solver.uses_cv:
        return 0.0 if solver.lam == "cv" else float(solver.lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam, _ = loo_cross_validate(Xa, y, solver, loss, peaks=peaks)
    return lam


def stepwise_backward(basis, solver: SolverSpec, loss: LossSpec, min_terms: int = 1,
                      f_threshold: float | None = None, y=None, norm: str = "l2") -> StepwiseTrace:
    """Backward stepwise selection by nested-model F statistic.

    ``basis`` needs ``X`` (n, P), ``labels`` and ``fixed_mask``; its ``y`` is
    the target unless ``y`` is given.  Fixed columns enter with coefficient 1
    and are never removed.  At each iteration the removable term whose
    removal raises the residual sum of squares least (smallest F) is dropped;
    equal F values remove the lexicographically larger label.  Stops at
    ``min_terms`` terms, or when every remaining F exceeds ``f_threshold``.
    """
    X = np.asarray(basis.X, dtype=float)
    y = np.asarray(basis.y if y is None else y, dtype=float)
    labels = tuple(basis.labels)
    fixed = np.asarray(basis.fixed_mask, dtype=bool)
    n, P = X.shape
    if y.shape != (n,):
        raise ValueError(f"target must have shape ({n},), got {y.shape}")
    if not 1 <= min_terms <= P:
        raise ValueError(f"min_terms must be in [1, {P}], got {min_terms}")
    n_fixed = int(fixed.sum())
    free_idx = np.flatnonzero(~fixed)
    base = X[:, fixed].sum(axis=1) if n_fixed else np.zeros(n)
    d = y - base
    Xt, dt, pair = scale_and_normalize(X[:, free_idx], d, norm=norm, allow_zero=True) \
        if free_idx.size else (np.zeros((n, 0)), d, None)
    ny = float(pair.ny[0]) if pair is not None else 1.0
    nx_free = pair.nx if pair is not None else np.zeros(0)
    nx_full = np.ones(P)
    nx_full[free_idx] = nx_free

    peaks = peak_set(y, loss) if loss.l1 > 0 else None
    trace = StepwiseTrace(labels, fixed, solver, loss, nx=nx_full, ny=ny)
    active = list(range(free_idx.size))
    prev_total = None
    removed, removed_label, F_removed = None, "", math.nan
    flags: list[str] = []
    iteration = 0
    while True:
        Xa = Xt[:, active]
        if active:
            lam = _select_lam(Xa, dt, solver, loss, peaks)
            fit = solve(Xa, dt, solver, lam)
            coef_t = fit.coef
            resid = dt - Xa @ coef_t
            rank, cutoff = fit.rank, fit.cutoff
        else:
            lam, coef_t, resid, rank, cutoff = 0.0, np.zeros(0), dt.copy(), 0, 0.0
        rss = float(resid @ resid)
        coef_full_t = np.zeros(P)
        coef_full = np.zeros(P)
        coef_full[fixed] = 1.0
        coef_full_t[fixed] = 1.0
        sel = free_idx[active]
        coef_full_t[sel] = coef_t
        coef_full[sel] = coef_t * nx_free[active] / ny
        yhat = X @ coef_full
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lv = loss_components(y, yhat, loss, peaks)
        rec_flags = list(flags)
        if lv.empty_peaks:
            rec_flags.append("empty-peak-set")
        if prev_total is not None and lv.total < prev_total * (1 - 1e-12):
            rec_flags.append("loss-decrease")
        act_full = tuple(sorted(np.flatnonzero(fixed).tolist() + sel.tolist()))
        trace.records.append(StepRecord(
            iteration, n_fixed + len(active), act_full, removed, removed_label, F_removed,
            rss, lv, coef_full, coef_full_t, lam, rank, cutoff, tuple(rec_flags)))
        prev_total = lv.total
        if n_fixed + len(active) <= min_terms or not active:
            break

        # rank candidates by the increase in RSS; F is that increase over the error variance
        rss_drop = None
        if solver.kind is not SolverKind.LASSO:
            rss_drop = _removal_rss_fast(Xa, dt, lam, coef_t)
        if rss_drop is None:
            rss_drop = np.empty(len(active))
            for pos in range(len(active)):
                keep = active[:pos] + active[pos + 1:]
                if keep:
                    sub = Xt[:, keep]
                    r = dt - sub @ solve(sub, dt, solver, lam).coef
                else:
                    r = dt
                rss_drop[pos] = r @ r
        increase = np.maximum(rss_drop - rss, 0.0)
        dof = n - len(active)
        flags = []
        if dof <= 0:
            # F undefined: rank by the weighted loss of each refit instead
            F = np.full(len(active), math.nan)
            increase = _removal_loss(X, y, base, Xt, dt, free_idx, nx_free, ny, active,
                                     solver, lam, loss, peaks) - lv.total
            flags.append("degenerate-F")
        elif rss <= 0:
            F = np.where(increase > 0, math.inf, 0.0)
        else:
            F = increase / (rss / dof)
        smallest = increase.min()
        tied = [pos for pos in range(len(active)) if increase[pos] <= smallest]
        pos = max(tied, key=lambda q: labels[free_idx[active[q]]])
        if f_threshold is not None and dof > 0 and np.all(F > f_threshold):
            break
        removed = int(free_idx[active[pos]])
        removed_label = labels[removed]
        F_removed = float(F[pos])
        del active[pos]
        iteration += 1
    return trace
