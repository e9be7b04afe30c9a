"""Error analysis of modified Taylor series for 1-D polynomial targets.

Uses the interlaced mesh of ``n + 1`` training points ``0, 2h, ..., 2nh`` and
``n`` testing points ``h, 3h, ..., (2n-1)h`` with ``h = L / (2n)``.  Non-local
derivatives on this mesh carry the prefactor ``1/n``, which is the graph
contraction ``1/(N - 1)`` for the ``N = n + 1`` training vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .calculus import DerivativeCache, first_derivative
from .graph import build_graph
from .regression import ols_fit
from .weights import Family, WeightSpec

# B_1 = -1/2 convention, which makes the closed form sum j = 0..n
BERNOULLI = (
    Fraction(1), Fraction(-1, 2), Fraction(1, 6), Fraction(0), Fraction(-1, 30), Fraction(0),
    Fraction(1, 42), Fraction(0), Fraction(-1, 30), Fraction(0), Fraction(5, 66),
)
MAX_FAULHABER = len(BERNOULLI) - 1
MACHINE_FLOOR = 1e-12


@dataclass(frozen=True)
class Mesh1D:
    n: int
    L: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"mesh needs a positive integer number of intervals, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"mesh length must be > 0, got {self.L}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.L / (2 * self.n)

    @property
    def training(self) -> np.ndarray:
        return 2 * self.h * np.arange(self.n + 1)

    @property
    def testing(self) -> np.ndarray:
        return self.h * (2 * np.arange(self.n) + 1)


@dataclass(frozen=True)
class PolySpec:
    """Polynomial target ``u(x) = sum_l alpha[l] x**l``."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if not alpha:
            raise ValueError("a polynomial needs at least one coefficient")
        if not all(math.isfinite(a) for a in alpha):
            raise ValueError(f"polynomial coefficients must be finite, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def K(self) -> int:
        return len(self.alpha) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.alpha)

    def derivative(self, x, order: int = 1):
        c = np.polynomial.polynomial.polyder(self.alpha, order) if order <= self.K else [0.0]
        return np.polynomial.polynomial.polyval(x, c)

    @classmethod
    def random(cls, K: int, seed: int, low: float = 0.5, high: float = 1.5) -> "PolySpec":
        """Coefficients drawn uniformly from [low, high] with a fixed seed."""
        rng = np.random.default_rng(seed)
        return cls(tuple(rng.uniform(low, high, K + 1)))


def faulhaber(l: int, n: int) -> int:
    """``phi_l[n] = sum_{j=0}^{n} j**l`` from the Bernoulli closed form.

    For ``l = 0`` the closed form gives ``n`` (the ``j = 0`` term is not
    counted); use :func:`power_sum` for the literal sum.
    """
    if int(l) != l or l < 0:
        raise ValueError(f"Faulhaber order must be a nonnegative integer, got {l}")
    if l > MAX_FAULHABER:
        raise ValueError(f"Faulhaber order {l} exceeds the Bernoulli table (max {MAX_FAULHABER})")
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n}")
    l, n = int(l), int(n)
    total = sum((-1) ** j * math.comb(l + 1, j) * BERNOULLI[j] * Fraction(n) ** (l + 1 - j)
                for j in range(l + 1))
    value = total / (l + 1)
    assert value.denominator == 1
    return int(value)


def power_sum(m: int, n: int) -> int:
    """Literal ``sum_{j=0}^{n} j**m`` with ``0**0 = 1``."""
    return n + 1 if m == 0 else faulhaber(m, n)


def harmonic(epsilon: float, n: int) -> float:
    """``H_eps[n] = sum_{j=1}^{n} j**-eps``."""
    if int(n) != n or n < 1:
        raise ValueError(f"harmonic numbers need n >= 1, got {n}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0:
        return float(n)
    j = np.arange(1, int(n) + 1, dtype=float)
    return math.fsum(j ** -float(epsilon))


def p_poly(l: int, i: int, j: int) -> int:
    """``p_l[i, j] = sum_{q=1}^{l} i**(q-1) j**(l-q)``, so ``j**l - i**l = (j - i) p_l``."""
    return sum(i ** (q - 1) * j ** (l - q) for q in range(1, l + 1))


def p_sum_offdiag(l: int, i: int, n: int) -> int:
    """``sum_{j != i} p_l[i, j]`` over ``j = 0..n`` via power sums."""
    if l == 0:
        return 0
    full = sum(i ** (q - 1) * power_sum(l - q, n) for q in range(1, l + 1))
    return full - l * i ** (l - 1)


def _check_index(mesh: Mesh1D, i: int) -> int:
    if int(i) != i or not 0 <= i <= mesh.n:
        raise ValueError(f"training index {i} out of range [0, {mesh.n}]")
    return int(i)


def nonlocal_derivative_closed(spec: PolySpec, mesh: Mesh1D, i: int, epsilon: float = 0.0) -> float:
    """Non-local first derivative at training point ``i`` with polynomial weights.

    ``(C_eps / n) sum_l alpha_l (2h)**(l-1-eps) sum_{j != i} p_l[i,j] / |j-i|**eps``
    with ``C_eps = (1 - eps) (L/2)**eps``.  At ``eps = 0`` the inner sums are
    evaluated exactly through Faulhaber sums.
    """
    i = _check_index(mesh, i)
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    n, h = mesh.n, mesh.h
    C = (1 - epsilon) * (mesh.L / 2) ** epsilon
    others = [j for j in range(n + 1) if j != i]
    terms = []
    for l, a in enumerate(spec.alpha):
        if l == 0 or a == 0:
            continue
        if epsilon == 0:
            s = float(p_sum_offdiag(l, i, n))
        else:
            s = math.fsum(p_poly(l, i, j) / abs(j - i) ** epsilon for j in others)
        terms.append(a * (2 * h) ** (l - 1 - epsilon) * s)
    return C / n * math.fsum(terms)


def derivative_error_closed(spec: PolySpec, mesh: Mesh1D, i: int, epsilon: float = 0.0) -> float:
    """Non-local minus exact first derivative at training point ``i``."""
    x = mesh.training[_check_index(mesh, i)]
    return nonlocal_derivative_closed(spec, mesh, i, epsilon) - float(spec.derivative(x))


def training_graph(mesh: Mesh1D, spec: PolySpec, epsilon: float = 0.0):
    """1-D graph over the training points with polynomial weights of exponent ``epsilon``."""
    x = mesh.training
    ws = WeightSpec(Family.POLYNOMIAL, 1, epsilon=epsilon)
    return build_graph(x[:, None], {"u": spec(x)}, ws, labels=("x",))


def oracle_match_graph_derivative(spec: PolySpec, mesh: Mesh1D, epsilon: float = 0.0) -> float:
    """Largest gap between the graph derivative and the closed form over training points."""
    g = training_graph(mesh, spec, epsilon)
    graph_d = first_derivative(g, g.observables["u"], 0)
    closed = np.array([nonlocal_derivative_closed(spec, mesh, i, epsilon) for i in range(mesh.n + 1)])
    return float(np.max(np.abs(graph_d - closed)))


def fit_gamma1(spec: PolySpec, mesh: Mesh1D, i: int, epsilon: float = 0.0) -> float:
    """Least-squares ``gamma_1`` of the first-order model at training point ``i``.

    Fits ``d = gamma_1 b`` with ``d_j = u_j - u_i`` and
    ``b_j = du_i (x_j - x_i)``, the base coefficient being pinned to 1.
    """
    i = _check_index(mesh, i)
    x = mesh.training
    du = nonlocal_derivative_closed(spec, mesh, i, epsilon)
    b = du * (x - x[i])
    if not np.any(b != 0):
        raise ValueError("degenerate fit: the non-local derivative column is identically zero")
    d = spec(x) - spec(x[i])
    return float(ols_fit(b[:, None], d)[0])


def gamma1_limit(spec: PolySpec, L: float) -> float:
    """``h -> 0`` limit of the fitted ``gamma_1`` at a fixed training index.

    ``(1 + sum_l r_l 3 L**(l-1) / (l+2)) / (1 + sum_l r_l L**(l-1) / l)`` over
    ``l >= 2`` with ``r_l = alpha_l / alpha_1``.
    """
    a = spec.alpha
    if len(a) < 2 or a[1] == 0:
        raise ValueError("the gamma_1 limit needs a nonzero linear coefficient")
    num = 1 + sum(a[l] / a[1] * 3 * L ** (l - 1) / (l + 2) for l in range(2, len(a)))
    den = 1 + sum(a[l] / a[1] * L ** (l - 1) / l for l in range(2, len(a)))
    return num / den


def aggregate_error(e: np.ndarray, norm) -> float:
    """Discrete-average norm ``((1/n) sum |e|**l)**(1/l)``, or the max for ``inf``."""
    e = np.abs(np.asarray(e, dtype=float))
    if norm in ("inf", math.inf):
        return float(e.max())
    l = int(norm)
    if l not in (1, 2):
        raise ValueError(f"norm must be 1, 2 or 'inf', got {norm!r}")
    return float(np.mean(e**l) ** (1 / l))


def _model_errors(spec: PolySpec, mesh: Mesh1D, k: int, epsilon: float, mode: str) -> np.ndarray:
    """Pointwise model errors at the testing points, each based at its left training neighbour."""
    xt = mesh.training
    xs = mesh.testing
    u_t = spec(xt)
    if mode == "differential":
        derivs = np.array([spec.derivative(xt, l) for l in range(1, k + 1)])
    else:
        g = training_graph(mesh, spec, epsilon)
        cache = DerivativeCache(g, u_t)
        derivs = np.array([cache((0,) * l) for l in range(1, k + 1)])
    fact = np.array([math.factorial(l) for l in range(1, k + 1)], dtype=float)
    powers = np.arange(1, k + 1)
    err = np.empty(mesh.n)
    for m in range(mesh.n):
        i = m
        dx_test = xs[m] - xt[i]
        if k == 0:
            err[m] = u_t[i] - spec(xs[m])
            continue
        if mode == "differential":
            gamma = np.ones(k)
        else:
            cols = derivs[:, i][None, :] * (xt - xt[i])[:, None] ** powers[None, :] / fact[None, :]
            gamma = ols_fit(cols, u_t - u_t[i])
        pred = u_t[i] + np.sum(gamma * derivs[:, i] * dx_test**powers / fact)
        err[m] = pred - spec(xs[m])
    return err


@dataclass
class StudyResult:
    mode: str
    k: int
    epsilon: float
    norm: str
    n: list[int]
    h: list[float]
    errors: dict[str, list[float]]
    slope: float
    slope_window: tuple[int, int]
    floor_start: int | None
    at_floor: bool
    rows: list[dict] = field(default_factory=list)

    def to_summary(self) -> dict:
        return {"mode": self.mode, "k": self.k, "epsilon": self.epsilon, "norm": self.norm,
                "slope": self.slope, "slope_window": list(self.slope_window),
                "floor_start": self.floor_start, "at_floor": self.at_floor}


def fit_slope(h: Sequence[float], e: Sequence[float]) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def detect_floor(e: Sequence[float], rel: float = 0.05) -> int | None:
    """First index whose error differs from its predecessor by less than ``rel``."""
    for m in range(1, len(e)):
        if abs(e[m] - e[m - 1]) < rel * abs(e[m - 1]):
            return m
    return None


def convergence_study(spec: PolySpec, k: int = 1, L: float = 1.0, n_list: Sequence[int] = (8, 16, 32, 64, 128),
                      epsilon: float = 0.0, norm="2", mode: str = "nonlocal") -> StudyResult:
    """Total model error over mesh refinements and its fitted order in ``h``.

    ``mode`` is ``"nonlocal"`` (non-local derivatives, fitted ``gamma_1..gamma_k``)
    or ``"differential"`` (exact derivatives, all ``gamma = 1``).  The slope
    uses refinements up to the first point where the error stops changing by
    more than 5% (the floor); errors below 1e-12 of the target scale mark the
    study as ``at_floor``.
    """
    n_list = [int(v) for v in n_list]
    if len(n_list) < 3:
        raise ValueError(f"a convergence study needs at least 3 mesh sizes, got {len(n_list)}")
    if sorted(set(n_list)) != n_list:
        raise ValueError("n_list must be strictly increasing")
    if mode not in ("nonlocal", "differential"):
        raise ValueError(f"mode must be 'nonlocal' or 'differential', got {mode!r}")
    if int(k) != k or k < 0:
        raise ValueError(f"model order must be a nonnegative integer, got {k}")
    norm_key = "inf" if str(norm) == "inf" else str(int(norm))
    errors = {"1": [], "2": [], "inf": []}
    hs = []
    rows = []
    for n in n_list:
        mesh = Mesh1D(n, L)
        e = _model_errors(spec, mesh, int(k), epsilon, mode)
        for key in errors:
            errors[key].append(aggregate_error(e, key))
        hs.append(mesh.h)
        rows.append({"n": n, "h": mesh.h, "error_l1": errors["1"][-1],
                     "error_l2": errors["2"][-1], "error_linf": errors["inf"][-1]})
    chosen = errors[norm_key]
    scale = max(1.0, max(abs(a) for a in spec.alpha) * max(1.0, L) ** spec.K)
    at_floor = all(v < MACHINE_FLOOR * scale for v in chosen)
    floor = None if at_floor else detect_floor(chosen)
    end = len(chosen) if floor is None else floor
    if at_floor or end < 2:
        slope = math.nan
        window = (0, end)
    else:
        slope = fit_slope(hs[:end], chosen[:end])
        window = (0, end)
    for m, row in enumerate(rows):
        row["slope_window"] = int(window[0] <= m < window[1])
    return StudyResult(mode, int(k), float(epsilon), norm_key, n_list, hs, errors, slope,
                       window, floor, at_floor, rows)
