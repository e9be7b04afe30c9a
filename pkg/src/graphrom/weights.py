"""Radial edge-weight families and their moment constraints.

Weights have the form ``w(r) = C * w~(r / sigma)`` and are scaled so that the
continuous second-moment constraint

    integral_0^R r**(p+1) w(r) dr = R**p

holds for a graph of radius ``R`` in ``p`` dimensions.  Also contains the
lattice-point counting and unit-ball constants used to reason about the
discrete version of that constraint.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    POLYNOMIAL = "polynomial"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown weight family {value!r}; expected one of "
                f"{[f.value for f in cls]}") from None


@dataclass(frozen=True)
class WeightSpec:
    """Parameters of a radial weight function.

    ``R``, ``sigma``, ``epsilon`` and ``C`` may be left as ``None`` ("auto").
    ``R`` is then taken from the graph, ``sigma`` defaults to ``R``,
    ``epsilon`` defaults to ``p / 2`` (polynomial family only) and ``C`` is
    derived from the moment constraint by :func:`weight_scale`.
    """

    family: Family
    p: int
    R: float | None = None
    sigma: float | None = None
    epsilon: float | None = None
    C: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"dimension p must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        if self.R is not None and not self.R > 0:
            raise ValueError(f"radius R must be > 0, got {self.R}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"decay length sigma must be > 0, got {self.sigma}")
        if self.C is not None and not self.C > 0:
            raise ValueError(f"weight scale C must be > 0, got {self.C}")
        if self.family is Family.POLYNOMIAL and self.epsilon is not None:
            if not 0 <= self.epsilon < self.p:
                raise ValueError(
                    f"polynomial weights need 0 <= epsilon < p, got "
                    f"epsilon={self.epsilon}, p={self.p}")

    @property
    def eps(self) -> float:
        if self.family is Family.GAUSSIAN:
            return 0.0
        return self.p / 2 if self.epsilon is None else float(self.epsilon)

    @property
    def is_resolved(self) -> bool:
        return self.R is not None and self.sigma is not None and self.C is not None

    def resolve(self, R: float | None = None) -> "WeightSpec":
        """Fill every "auto" field, using ``R`` when none is set."""
        radius = self.R if self.R is not None else R
        if radius is None or not radius > 0:
            raise ValueError(f"cannot resolve weight spec without a positive radius (got {radius})")
        sigma = self.sigma if self.sigma is not None else radius
        epsilon = self.eps if self.family is Family.POLYNOMIAL else self.epsilon
        spec = replace(self, R=float(radius), sigma=float(sigma), epsilon=epsilon)
        if spec.C is None:
            spec = replace(spec, C=weight_scale(spec))
        return spec


def gaussian_moment(p: int, z: float) -> float:
    """Scaled Gaussian weight constraint ``int_0^z v**(p+1) exp(-v**2/2) dv``.

    Uses the upward recursion ``W[p] = p W[p-2] - z**p exp(-z**2/2)`` seeded
    by the closed forms for ``p = -1`` and ``p = 0``.  The ``p = -2`` row is
    defined as zero.  Below the integrand peak (``z**2 < p + 2``) the
    recursion cancels badly, so the exponential's power series is summed
    instead.
    """
    if int(p) != p or p < -2:
        raise ValueError(f"moment order p must be an integer >= -2, got {p}")
    if not z > 0:
        raise ValueError(f"scaled radius z must be > 0, got {z}")
    p = int(p)
    if p == -2:
        return 0.0
    if p >= 1 and z * z < p + 2:
        return _gaussian_moment_series(p, z)
    tail = math.exp(-0.5 * z * z)
    if p % 2:
        value = math.sqrt(math.pi / 2) * math.erf(z / math.sqrt(2))
        order = -1
    else:
        value = -math.expm1(-0.5 * z * z)
        order = 0
    while order < p:
        order += 2
        value = order * value - z**order * tail
    return value


def _gaussian_moment_series(p: int, z: float) -> float:
    # sum_k (-z^2/2)^k / k! * z^(p+2) / (p+2+2k); alternating with shrinking terms for z^2 < p+2
    x = -0.5 * z * z
    coef = 1.0
    terms = []
    for k in range(200):
        term = coef / (p + 2 + 2 * k)
        terms.append(term)
        if abs(term) < 1e-18 * abs(terms[0]):
            break
        coef *= x / (k + 1)
    return z ** (p + 2) * math.fsum(terms)


def polynomial_moment(p: int, z: float, epsilon: float) -> float:
    """Scaled polynomial weight constraint ``z**(p - eps) / (p - eps)``."""
    if int(p) != p or p < 1:
        raise ValueError(f"polynomial moments are undefined for p={p} (need p >= 1)")
    if not 0 <= epsilon < p:
        raise ValueError(f"polynomial moment diverges unless 0 <= epsilon < p (epsilon={epsilon}, p={p})")
    if not z > 0:
        raise ValueError(f"scaled radius z must be > 0, got {z}")
    return z ** (p - epsilon) / (p - epsilon)


def scaled_moment(spec: WeightSpec, z: float) -> float:
    if spec.family is Family.GAUSSIAN:
        return gaussian_moment(spec.p, z)
    return polynomial_moment(spec.p, z, spec.eps)


def weight_scale(spec: WeightSpec) -> float:
    """Weight scale ``C = z**p / sigma**2 / W~[p, z]`` with ``z = R / sigma``."""
    if spec.R is None or not spec.R > 0:
        raise ValueError("weight_scale needs a positive radius R")
    sigma = spec.R if spec.sigma is None else spec.sigma
    if not sigma > 0:
        raise ValueError("weight_scale needs a positive sigma")
    z = spec.R / sigma
    return z**spec.p / sigma**2 / scaled_moment(spec, z)


def eval_weight(spec: WeightSpec, r):
    """Evaluate the weight at distance(s) ``r > 0``.

    The Gaussian family is truncated: it is exactly zero for ``r > R``.
    Accepts scalars or arrays; returns the same shape.
    """
    if not spec.is_resolved:
        spec = spec.resolve()
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise ValueError("weights are only defined for r > 0")
    if spec.family is Family.GAUSSIAN:
        out = spec.C * np.exp(-0.5 * (r_arr / spec.sigma) ** 2)
        out = np.where(r_arr <= spec.R, out, 0.0)
    else:
        out = spec.C * (spec.sigma / r_arr) ** (2 + spec.eps)
    if np.ndim(r) == 0:
        return float(out)
    return out


def inflection_radius(p: int) -> float:
    """Scaled radius where ``v**(p+1) exp(-v**2/2)`` changes curvature for good.

    This is the larger root of ``v**4 - (2p+3) v**2 + p(p+1) = 0``.  Beyond
    it the Gaussian moment integrand is convex and decays to zero.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return math.sqrt(p + 1.5 + math.sqrt(2 * p + 2.25))


def gauss_circle_count(R: float, p: int) -> int:
    """Number of integer lattice points with squared norm <= R**2."""
    if p not in (1, 2, 3):
        raise ValueError(f"lattice counting supports p in {{1, 2, 3}}, got {p}")
    if R < 0:
        raise ValueError(f"radius must be >= 0, got {R}")
    # j**2 <= R**2 - i**2 is equivalent to j**2 <= floor(R**2) - i**2 for integers
    r2 = math.floor(R * R)
    top = math.isqrt(r2)
    if p == 1:
        return 2 * top + 1
    if p == 2:
        return 1 + 4 * sum(math.isqrt(r2 - i * i) for i in range(top + 1))
    total = 0
    for i in range(-top, top + 1):
        rest = r2 - i * i
        m = math.isqrt(rest)
        for j in range(-m, m + 1):
            total += 2 * math.isqrt(rest - j * j) + 1
    return total


def ball_volume_surface(p: int, R: float) -> tuple[float, float]:
    """Volume ``V_p R**p`` and surface ``S_p R**(p-1)`` of a p-ball of radius R."""
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    if not R > 0:
        raise ValueError(f"R must be > 0, got {R}")
    p = int(p)
    if p % 2 == 0:
        unit = math.pi ** (p // 2) / math.factorial(p // 2)
    else:
        k = (p - 1) // 2
        unit = 2**p / p * math.factorial(k) / math.factorial(p - 1) * math.pi**k
    return unit * R**p, p * unit * R ** (p - 1)

