"""Time-series conditioning: filtering, time derivatives, extrema and column scaling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    columns: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1:
            raise DataError("time must be one-dimensional")
        if not np.all(np.isfinite(t)):
            raise DataError("time column contains non-finite values")
        steps = np.diff(t)
        if np.any(steps <= 0):
            # rows are numbered from 1 for the first sample
            k = int(np.argmax(steps <= 0)) + 1
            raise DataError(f"time must be strictly increasing (row {k + 1}: t={float(t[k])!r} "
                            f"after {float(t[k - 1])!r})")
        cols = {}
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != t.shape:
                raise DataError(f"column {name!r} has {col.size} values, time has {t.size}")
            if not np.all(np.isfinite(col)):
                k = int(np.argmax(~np.isfinite(col))) + 1
                raise DataError(f"column {name!r} has a non-finite value at row {k}")
            cols[name] = col
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "columns", cols)

    def __len__(self):
        return self.t.size

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r}; have {sorted(self.columns)}") from None

    def select(self, rows) -> "TimeSeries":
        return TimeSeries(self.t[rows], {k: v[rows] for k, v in self.columns.items()})

    def scaled(self, scales: Mapping[str, float]) -> "TimeSeries":
        """Divide named columns by physical scale factors (default 1)."""
        for name, s in scales.items():
            if name not in self.columns:
                raise DataError(f"scale given for unknown column {name!r}")
            if not s > 0:
                raise DataError(f"scale for column {name!r} must be > 0, got {s}")
        return TimeSeries(self.t, {k: v / scales.get(k, 1.0) for k, v in self.columns.items()})


def gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = window // 2
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma) ** 2)
    return k / k.sum()


def _smooth(v: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # truncated kernel renormalised over the in-range samples near the ends
    num = np.convolve(v, kernel, mode="same")
    den = np.convolve(np.ones_like(v), kernel, mode="same")
    return num / den


def gaussian_filter(series: TimeSeries, window: int, sigma: float, passes: int = 1,
                    columns=None) -> TimeSeries:
    """Repeatedly smooth columns with a truncated Gaussian kernel.

    Near the ends the kernel is renormalised over the samples that exist, so
    no padding values are invented.  ``columns`` restricts which columns are
    filtered (default: all).
    """
    if int(window) != window or window < 1 or window % 2 == 0:
        raise DataError(f"filter window must be a positive odd integer, got {window}")
    if window > len(series):
        raise DataError(f"filter window {window} is longer than the series ({len(series)})")
    if not sigma > 0:
        raise DataError(f"filter sigma must be > 0, got {sigma}")
    if passes < 0:
        raise DataError(f"number of passes must be >= 0, got {passes}")
    kernel = gaussian_kernel(int(window), sigma)
    names = set(series.columns) if columns is None else set(columns)
    out = {}
    for name, col in series.columns.items():
        if name in names:
            for _ in range(passes):
                col = _smooth(col, kernel)
        out[name] = col
    return TimeSeries(series.t, out)


def backward_euler_derivative(series: TimeSeries, column: str, name: str | None = None) -> TimeSeries:
    """``(v_k - v_{k-1}) / (t_k - t_{k-1})`` aligned with ``t[1:]``."""
    if len(series) < 2:
        raise DataError("a time derivative needs at least 2 samples")
    v = series[column]
    d = np.diff(v) / np.diff(series.t)
    return TimeSeries(series.t[1:], {name or f"d{column}_dt": d})


def _extrema(v: np.ndarray) -> np.ndarray:
    if v.size < 3:
        return np.zeros(0, dtype=int)
    mid, left, right = v[1:-1], v[:-2], v[2:]
    hit = ((mid > left) & (mid > right)) | ((mid < left) & (mid < right))
    return np.flatnonzero(hit) + 1


def find_peaks(values, passes: int = 1) -> np.ndarray:
    """Indices of strict local maxima and minima, refined over several passes.

    Each further pass keeps only the extrema of the sequence of previously
    found extremal values.  Endpoints and plateau interiors are never chosen.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 3:
        raise DataError(f"peak finding needs at least 3 samples, got {v.size}")
    if passes < 1:
        raise DataError(f"peak finding needs at least one pass, got {passes}")
    idx = np.arange(v.size)
    for _ in range(passes):
        idx = idx[_extrema(v[idx])]
        if idx.size == 0:
            break
    return idx


@dataclass(frozen=True)
class NormalizationPair:
    """Diagonals of the column scalings ``X~ = X N_X`` and ``y~ = y N_y``."""

    nx: np.ndarray
    ny: np.ndarray

    def __post_init__(self):
        nx = np.atleast_1d(np.asarray(self.nx, dtype=float))
        ny = np.atleast_1d(np.asarray(self.ny, dtype=float))
        if np.any(~(nx > 0)) or np.any(~(ny > 0)):
            raise DataError("normalization scales must be strictly positive")
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "ny", ny)

    def normalize_coef(self, gamma) -> np.ndarray:
        """Physical coefficients to the normalized frame: ``N_X^-1 gamma N_y``."""
        g = np.asarray(gamma, dtype=float)
        if g.ndim == 1:
            return g / self.nx * self.ny[0]
        return g / self.nx[:, None] * self.ny[None, :]

    def physical_coef(self, gamma_tilde) -> np.ndarray:
        g = np.asarray(gamma_tilde, dtype=float)
        if g.ndim == 1:
            return g * self.nx / self.ny[0]
        return g * self.nx[:, None] / self.ny[None, :]

    def unnormalize(self, X_tilde, y_tilde):
        X = np.asarray(X_tilde) / self.nx
        y = np.asarray(y_tilde)
        y = y / self.ny[0] if y.ndim == 1 else y / self.ny
        return X, y


def column_scales(A: np.ndarray, norm: str = "l2", names=None, allow_zero: bool = False) -> np.ndarray:
    if norm == "l2":
        size = np.sqrt(np.sum(A * A, axis=0))
    elif norm == "maxabs":
        size = np.max(np.abs(A), axis=0)
    else:
        raise DataError(f"unknown normalization {norm!r}; expected 'l2' or 'maxabs'")
    zero = ~(size > 0)
    if np.any(zero):
        if not allow_zero:
            k = int(np.argmax(zero))
            label = f"column {names[k]!r}" if names is not None else f"column {k}"
            raise DataError(f"cannot normalize all-zero {label}")
        size = np.where(zero, 1.0, size)
    return 1.0 / size


def scale_and_normalize(X, y, norm: str = "l2", names=None, allow_zero: bool = False):
    """Scale every column of ``X`` and ``y`` to unit size over the samples.

    Returns ``(X~, y~, NormalizationPair)``.  ``norm`` is ``"l2"`` (Euclidean
    norm, default) or ``"maxabs"``.  With ``allow_zero`` an all-zero column is
    left unscaled instead of raising.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DataError("X must be a 2-D matrix")
    y2 = y[:, None] if y.ndim == 1 else y
    if y2.shape[0] != X.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y2.shape[0]}")
    nx = column_scales(X, norm, names, allow_zero)
    ny = column_scales(y2, norm, ["target"] * y2.shape[1], allow_zero)
    Xt = X * nx
    yt = y * ny[0] if y.ndim == 1 else y * ny
    return Xt, yt, NormalizationPair(nx, ny)
