"""Seeded synthetic time series for exercising the pipeline."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import write_series
from .preprocessing import DataError, TimeSeries


class Recipe(str, enum.Enum):
    DAMPED_OSCILLATOR = "damped-oscillator-states"
    PLANTED_SPARSE = "planted-sparse-linear"
    MICROSTRUCTURE = "microstructure-like"


@dataclass(frozen=True)
class SynthSpec:
    recipe: Recipe = Recipe.MICROSTRUCTURE
    seed: int = 0
    n_steps: int = 200
    dt: float = 0.05
    noise: float = 0.0
    n_features: int = 20
    n_active: int = 5

    def __post_init__(self):
        object.__setattr__(self, "recipe", Recipe(getattr(self.recipe, "value", self.recipe)))
        if self.n_steps < 3:
            raise DataError(f"n_steps must be >= 3, got {self.n_steps}")
        if not self.dt > 0:
            raise DataError(f"dt must be > 0, got {self.dt}")
        if self.noise < 0:
            raise DataError(f"noise must be >= 0, got {self.noise}")
        if not 1 <= self.n_active <= self.n_features:
            raise DataError(f"need 1 <= n_active <= n_features, got {self.n_active}, {self.n_features}")


@dataclass
class PlantedProblem:
    X: np.ndarray
    y: np.ndarray
    coef: np.ndarray
    active: tuple[int, ...]
    names: tuple[str, ...]


def planted_problem(seed: int, n: int = 200, n_features: int = 20, n_active: int = 5,
                    noise: float = 1e-3) -> PlantedProblem:
    """Gaussian features with a sparse planted coefficient vector and Gaussian noise."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n_features))
    active = tuple(sorted(int(k) for k in rng.choice(n_features, n_active, replace=False)))
    coef = np.zeros(n_features)
    coef[list(active)] = rng.uniform(0.5, 2.0, n_active) * rng.choice([-1.0, 1.0], n_active)
    y = X @ coef + noise * rng.standard_normal(n)
    names = tuple(f"c{k:02d}" for k in range(n_features))
    return PlantedProblem(X, y, coef, active, names)


def damped_oscillator(spec: SynthSpec) -> TimeSeries:
    """Decaying oscillation whose frequency falls over time; position and velocity."""
    rng = np.random.default_rng(spec.seed)
    t = spec.dt * np.arange(spec.n_steps)
    T = t[-1] + spec.dt
    omega0, kappa, zeta = 2 * np.pi * 40 / T, 4.0 / T, 0.5 / T
    theta = omega0 * np.log1p(kappa * t) / kappa
    omega = omega0 / (1 + kappa * t)
    x = np.exp(-zeta * t) * np.cos(theta)
    v = np.exp(-zeta * t) * (-zeta * np.cos(theta) - omega * np.sin(theta))
    x = x + spec.noise * rng.standard_normal(t.size)
    v = v + spec.noise * rng.standard_normal(t.size)
    return TimeSeries(t, {"x": x, "v": v})


def planted_sparse(spec: SynthSpec) -> tuple[TimeSeries, dict]:
    prob = planted_problem(spec.seed, spec.n_steps, spec.n_features, spec.n_active, spec.noise)
    t = spec.dt * np.arange(spec.n_steps)
    cols = {name: prob.X[:, k] for k, name in enumerate(prob.names)}
    cols["y"] = prob.y
    truth = {"target": "y", "active": [prob.names[k] for k in prob.active],
             "coefficients": {prob.names[k]: float(prob.coef[k]) for k in prob.active},
             "noise": spec.noise, "seed": spec.seed}
    return TimeSeries(t, cols), truth


def microstructure_like(spec: SynthSpec) -> TimeSeries:
    """Qualitative stand-in for simulated microstructure state vectors.

    Energy decreases monotonically, the phase fraction oscillates inside
    [0, 1] and the strains drift slowly.
    """
    rng = np.random.default_rng(spec.seed)
    t = spec.dt * np.arange(spec.n_steps)
    T = t[-1] + spec.dt
    s = t / T
    phase0 = rng.uniform(0, 2 * np.pi)
    phi = 0.5 + 0.3 * np.exp(-2 * s) * np.sin(2 * np.pi * 6 * s + phase0) + 0.1 * (1 - np.exp(-3 * s))
    e11 = 0.02 * (1 + 0.5 * s) + 0.002 * np.sin(2 * np.pi * s)
    e22 = -0.015 * (1 + 0.3 * s) + 0.001 * np.cos(2 * np.pi * 0.5 * s)
    e12 = 0.005 * np.sin(np.pi * s + 0.3)
    psi = 0.2 + np.exp(-3 * s) + 0.05 * (1 - s)
    L1 = 1.0 + 0.5 * np.exp(-2 * s) * (1 + 0.2 * np.sin(2 * np.pi * 3 * s))
    L2 = 0.8 + 0.4 * np.exp(-1.5 * s) * (1 + 0.2 * np.cos(2 * np.pi * 2 * s))
    N1 = 4.0 + 20.0 * np.exp(-4 * s)
    N2 = 3.0 + 15.0 * np.exp(-3 * s)
    if spec.noise > 0:
        phi = np.clip(phi + spec.noise * rng.standard_normal(t.size), 0.0, 1.0)
        e11 = e11 + spec.noise * 0.01 * rng.standard_normal(t.size)
        e12 = e12 + spec.noise * 0.01 * rng.standard_normal(t.size)
        e22 = e22 + spec.noise * 0.01 * rng.standard_normal(t.size)
    return TimeSeries(t, {"phi": phi, "e11": e11, "e12": e12, "e22": e22, "psi": psi,
                          "L1": L1, "L2": L2, "N1": N1, "N2": N2})


def generate(spec: SynthSpec) -> tuple[TimeSeries, dict | None]:
    if spec.recipe is Recipe.DAMPED_OSCILLATOR:
        return damped_oscillator(spec), None
    if spec.recipe is Recipe.PLANTED_SPARSE:
        return planted_sparse(spec)
    return microstructure_like(spec), None


def synth(spec: SynthSpec, out: str | Path) -> Path:
    """Write the recipe as CSV; the planted recipe also writes ``<stem>.truth.json``."""
    out = Path(out)
    series, truth = generate(spec)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_series(out, series)
        if truth is not None:
            out.with_suffix(".truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write synthetic data to {str(out)!r}: {exc}") from None
    return out
