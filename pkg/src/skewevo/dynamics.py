"""Evolution semiflows, evolution cocycles and skew-evolution semiflows.

A skew-evolution semiflow pairs a semiflow ``phi(t, s, x)`` on a state space
with an operator-valued cocycle ``Phi(t, s, x)`` on ``V = R^p`` and acts by
``C(t, s, x, v) = (phi(t, s, x), Phi(t, s, x) v)``.  Both maps are defined for
``t >= s >= 0`` and must satisfy the identity and composition laws that
:func:`check_semiflow_axioms` and :func:`check_cocycle_axioms` sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .grid import GridPoint, SampleGrid
from .profiles import (
    DEFAULT_PANELS_PER_UNIT,
    StateProfile,
    as_fraction,
    cumulative_profile_integral,
    integrate_profile,
    profile_distance,
    shift_profile,
)


class TimeDomainError(ValueError):
    """Raised for time pairs outside ``t >= s >= 0``."""


def check_time_pair(t, s) -> None:
    if s < 0 or t < s:
        raise TimeDomainError(f"expected t >= s >= 0, got t={t}, s={s}")


def norm1(v, axis=-1):
    """The norm ``|v_1| + ... + |v_p|`` used throughout."""
    return np.sum(np.abs(v), axis=axis)


def relative_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Largest entry difference, scaled by ``max(1, largest entry of b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0


class TranslationSemiflow:
    """``phi(t, s, x) = x_{t-s}`` on translates of a base profile."""

    def __call__(self, t, s, x: StateProfile) -> StateProfile:
        check_time_pair(t, s)
        return shift_profile(x, as_fraction(t) - as_fraction(s))

    def __repr__(self):
        return "TranslationSemiflow()"


@dataclass(frozen=True)
class ExponentTerm:
    """One diagonal entry ``exp(integral*J + drift*d + anchor*d*x(0))``.

    Here ``d = t - s`` and ``J = int_s^t x(tau - s) dtau``.
    """

    integral: float = 1.0
    drift: float = 0.0
    anchor: float = 0.0


@dataclass
class DiagonalCocycle:
    """Diagonal cocycle whose entries are exponentials of the profile integral.

    ``literal_t0`` replaces the second time argument by a fixed origin, so the
    entries become ``exp(E(t - literal_t0))`` regardless of ``s``.  That form is
    not a cocycle; it exists to exhibit the failure of the composition law.
    """

    terms: tuple[ExponentTerm, ...]
    integration: str = "closed_form"
    panels_per_unit: int = DEFAULT_PANELS_PER_UNIT
    literal_t0: float | None = None

    def __post_init__(self):
        self.terms = tuple(self.terms)
        if not self.terms:
            raise ValueError("a diagonal cocycle needs at least one entry")
        if self.integration not in ("closed_form", "quadrature"):
            raise ValueError(f"unknown integration method {self.integration!r}")
        self._coef = np.array([[e.integral, e.drift, e.anchor] for e in self.terms], dtype=float)

    @property
    def dim(self) -> int:
        return len(self.terms)

    def _origin(self, s):
        return s if self.literal_t0 is None else self.literal_t0

    def log_diagonal(self, t, s, x: StateProfile) -> np.ndarray:
        """Exponents of the diagonal entries; shape ``(p,)`` or ``(n, p)`` for array ``t``."""
        origin = self._origin(s)
        scalar = np.ndim(t) == 0
        if scalar:
            check_time_pair(t, s)
            length = float(as_fraction(t) - as_fraction(origin))
            if length < 0:
                raise TimeDomainError(f"literal form needs t >= {origin}, got t={t}")
            lengths = np.array([length])
            J = np.array([integrate_profile(x, origin, t, self.integration, self.panels_per_unit)])
        else:
            t = np.asarray(t, dtype=float)
            if np.any(t < s):
                raise TimeDomainError("all times must be >= s")
            lengths = t - origin
            if np.any(lengths < 0):
                raise TimeDomainError(f"literal form needs t >= {origin}")
            J = cumulative_profile_integral(x, lengths, self.integration, self.panels_per_unit)
        basis = np.stack([J, lengths, lengths * x.initial_value], axis=-1)
        out = basis @ self._coef.T
        return out[0] if scalar else out

    def __call__(self, t, s, x: StateProfile) -> np.ndarray:
        return np.diag(np.exp(self.log_diagonal(t, s, x)))

    def path(self, taus, s, x: StateProfile) -> np.ndarray:
        """Matrices ``Phi(tau, s, x)`` stacked along axis 0."""
        diag = np.exp(self.log_diagonal(np.asarray(taus, dtype=float), s, x))
        n, p = diag.shape
        out = np.zeros((n, p, p))
        idx = np.arange(p)
        out[:, idx, idx] = diag
        return out


@dataclass
class SkewEvolutionSystem:
    """A semiflow and a cocycle over it on ``V = R^dim``."""

    semiflow: Callable[[float, float, Any], Any]
    cocycle: Callable[[float, float, Any], np.ndarray]
    dim: int
    distance: Callable[[Any, Any], float] = profile_distance
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(self.dim)

    def cocycle_path(self, taus, s, x) -> np.ndarray:
        path = getattr(self.cocycle, "path", None)
        if path is not None:
            return path(taus, s, x)
        return np.stack([evaluate_cocycle(self, float(tau), s, x) for tau in np.asarray(taus)])


def evaluate_semiflow(system: SkewEvolutionSystem, t, s, x):
    check_time_pair(t, s)
    return system.semiflow(t, s, x)


def evaluate_cocycle(system: SkewEvolutionSystem, t, s, x) -> np.ndarray:
    check_time_pair(t, s)
    matrix = np.asarray(system.cocycle(t, s, x), dtype=float)
    if matrix.shape != (system.dim, system.dim):
        raise ValueError(f"cocycle returned shape {matrix.shape}, expected {(system.dim, system.dim)}")
    if not np.all(np.isfinite(matrix)):
        raise FloatingPointError(f"non-finite cocycle entries at t={t}, s={s}, x={x!r}")
    return matrix


def evaluate_skew(system: SkewEvolutionSystem, t, s, x, v):
    """``C(t, s, x, v) = (phi(t, s, x), Phi(t, s, x) v)``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (system.dim,):
        raise ValueError(f"vector has shape {v.shape}, system dimension is {system.dim}")
    return evaluate_semiflow(system, t, s, x), evaluate_cocycle(system, t, s, x) @ v


@dataclass
class AxiomReport:
    name: str
    residuals: dict[str, float]
    tol: float
    n_samples: int
    worst: dict[str, dict] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "tol": self.tol,
            "n_samples": self.n_samples,
            "residuals": dict(self.residuals),
            "worst": {k: dict(v) for k, v in self.worst.items()},
        }


def sample_points(samples) -> Sequence[GridPoint]:
    points = samples.points if isinstance(samples, SampleGrid) else list(samples)
    if not points:
        raise ValueError("axiom checks need a nonempty sample grid")
    return points


def describe_point(p: GridPoint) -> dict:
    return {"t0": p.t0, "s": p.s, "t": p.t, "x_shift": p.x_shift}


class _Worst:
    def __init__(self, *names):
        self.value = {n: 0.0 for n in names}
        self.where: dict[str, dict] = {}

    def update(self, name, value, point):
        if name not in self.where or value > self.value[name]:
            self.value[name] = value
            self.where[name] = describe_point(point)


def check_semiflow_axioms(system: SkewEvolutionSystem, samples, tol: float = 0.0) -> AxiomReport:
    """Max residuals of ``phi(t,t,x) = x`` and ``phi(t,s,phi(s,t0,x)) = phi(t,t0,x)``."""
    points = sample_points(samples)
    worst = _Worst("identity", "composition")
    for p in points:
        for time in (p.t0, p.s, p.t):
            worst.update("identity", system.distance(evaluate_semiflow(system, time, time, p.x), p.x), p)
        lhs = evaluate_semiflow(system, p.t, p.s, evaluate_semiflow(system, p.s, p.t0, p.x))
        rhs = evaluate_semiflow(system, p.t, p.t0, p.x)
        worst.update("composition", system.distance(lhs, rhs), p)
    return AxiomReport("semiflow", worst.value, tol, len(points), worst.where)


def check_cocycle_axioms(system: SkewEvolutionSystem, samples, tol: float = 1e-9) -> AxiomReport:
    """Max residuals of ``Phi(t,t,x) = I`` and the cocycle composition law.

    Residuals are entrywise differences relative to ``max(1, |Phi(t,t0,x)|_max)``.
    """
    points = sample_points(samples)
    eye = np.eye(system.dim)
    worst = _Worst("identity", "composition")
    for p in points:
        for time in (p.t0, p.s, p.t):
            worst.update("identity", relative_residual(evaluate_cocycle(system, time, time, p.x), eye), p)
        moved = evaluate_semiflow(system, p.s, p.t0, p.x)
        lhs = evaluate_cocycle(system, p.t, p.s, moved) @ evaluate_cocycle(system, p.s, p.t0, p.x)
        rhs = evaluate_cocycle(system, p.t, p.t0, p.x)
        worst.update("composition", relative_residual(lhs, rhs), p)
    return AxiomReport("cocycle", worst.value, tol, len(points), worst.where)


def composition_residual_by_entry(system: SkewEvolutionSystem, samples) -> np.ndarray:
    """Per-entry max of the relative cocycle-law residual, shape ``(p, p)``."""
    out = np.zeros((system.dim, system.dim))
    for p in sample_points(samples):
        moved = evaluate_semiflow(system, p.s, p.t0, p.x)
        lhs = evaluate_cocycle(system, p.t, p.s, moved) @ evaluate_cocycle(system, p.s, p.t0, p.x)
        rhs = evaluate_cocycle(system, p.t, p.t0, p.x)
        out = np.maximum(out, np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs)))
    return out
