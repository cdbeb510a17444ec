"""State space of translates of a nonincreasing base function.

A state is the profile ``x = f_a`` with ``f_a(tau) = f(a + tau)``.  Shifts are
stored as :class:`fractions.Fraction` so that composing translations is exact:
``(a + (s - t0)) + (t - s)`` and ``a + (t - t0)`` are the same rational number,
which makes the semiflow identities hold with zero residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

EXP_PLUS_CONST = "exp_plus_const"
RATIONAL_PLUS_CONST = "rational_plus_const"
CONSTANT = "constant"
TABULATED = "tabulated"

PROFILE_KINDS = (EXP_PLUS_CONST, RATIONAL_PLUS_CONST, CONSTANT, TABULATED)

DEFAULT_PANELS_PER_UNIT = 64


class QuadratureError(ArithmeticError):
    """Raised when an integrand produces a non-finite sample."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"time value must be finite, got {value!r}")
    return Fraction(value)


@dataclass(frozen=True)
class BaseProfile:
    """A nonincreasing function ``f: [0, inf) -> [0, inf)`` with limit ``l``.

    Families::

        exp_plus_const       f(u) = l + a * exp(-b u)
        rational_plus_const  f(u) = l + a / (1 + u)
        constant             f(u) = l
        tabulated            piecewise linear through (nodes, values),
                             held at values[-1] beyond the last node
    """

    kind: str = EXP_PLUS_CONST
    a: float = 1.0
    b: float = 1.0
    l: float = 1.0
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        if self.kind == TABULATED:
            nodes = tuple(float(u) for u in self.nodes)
            values = tuple(float(v) for v in self.values)
            if len(nodes) < 2 or len(nodes) != len(values):
                raise ValueError("tabulated profile needs >= 2 nodes and matching values")
            if nodes[0] != 0.0 or any(u2 <= u1 for u1, u2 in zip(nodes, nodes[1:])):
                raise ValueError("tabulated nodes must start at 0 and increase strictly")
            if any(v2 > v1 for v1, v2 in zip(values, values[1:])):
                raise ValueError("tabulated values must be nonincreasing")
            if values[-1] < 0 or not all(math.isfinite(v) for v in values):
                raise ValueError("tabulated values must be finite and nonnegative")
            object.__setattr__(self, "nodes", nodes)
            object.__setattr__(self, "values", values)
            object.__setattr__(self, "l", values[-1])
            object.__setattr__(self, "a", values[0] - values[-1])
            return
        for name in ("a", "b", "l"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"profile parameter {name} must be finite")
        if self.a < 0:
            raise ValueError("profile parameter a must be >= 0")
        if self.b <= 0:
            raise ValueError("profile parameter b must be > 0")
        if self.l < 0:
            raise ValueError("profile parameter l must be >= 0")
        if self.kind == CONSTANT:
            object.__setattr__(self, "a", 0.0)

    @classmethod
    def from_dict(cls, data: dict) -> "BaseProfile":
        data = dict(data)
        for key in ("nodes", "values"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        if self.kind == TABULATED:
            return {"kind": self.kind, "nodes": list(self.nodes), "values": list(self.values)}
        if self.kind == CONSTANT:
            return {"kind": self.kind, "l": self.l}
        return {"kind": self.kind, "a": self.a, "b": self.b, "l": self.l}

    @property
    def has_antiderivative(self) -> bool:
        return self.kind != TABULATED

    @property
    def limit(self) -> float:
        return self.l

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == EXP_PLUS_CONST:
            out = self.l + self.a * np.exp(-self.b * u)
        elif self.kind == RATIONAL_PLUS_CONST:
            out = self.l + self.a / (1.0 + u)
        elif self.kind == CONSTANT:
            out = np.full_like(u, self.l)
        else:
            out = np.interp(u, self.nodes, self.values)
        return out if out.ndim else float(out)

    def integral(self, start: float, length):
        """Closed form of ``int_0^length f(start + u) du`` (vectorized in length)."""
        length = np.asarray(length, dtype=float)
        if self.kind == EXP_PLUS_CONST:
            out = self.l * length - self.a / self.b * math.exp(-self.b * start) * np.expm1(-self.b * length)
        elif self.kind == RATIONAL_PLUS_CONST:
            out = self.l * length + self.a * np.log1p(length / (1.0 + start))
        elif self.kind == CONSTANT:
            out = self.l * length
        else:
            raise NotImplementedError("tabulated profiles are integrated by quadrature only")
        return out if out.ndim else float(out)

    def tail_horizon(self, eps: float) -> float:
        """A ``U`` with ``|f(u) - l| <= eps`` for all ``u >= U``."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self.a == 0.0:
            return 0.0
        if self.kind == EXP_PLUS_CONST:
            return max(0.0, math.log(self.a / eps) / self.b)
        if self.kind == RATIONAL_PLUS_CONST:
            return max(0.0, self.a / eps - 1.0)
        return self.nodes[-1]


@dataclass(frozen=True)
class StateProfile:
    """The translate ``f_shift`` of a base profile."""

    base: BaseProfile
    shift: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        shift = as_fraction(self.shift)
        if shift < 0:
            raise ValueError(f"profile shift must be >= 0, got {float(shift)}")
        object.__setattr__(self, "shift", shift)

    def __call__(self, tau):
        return self.base(float(self.shift) + np.asarray(tau, dtype=float))

    @property
    def initial_value(self) -> float:
        """``x(0) = f(shift)``."""
        return float(self.base(float(self.shift)))

    def shifted(self, delta) -> "StateProfile":
        return shift_profile(self, delta)

    def __repr__(self):
        return f"StateProfile({self.base.kind}, shift={float(self.shift):g})"


def shift_profile(x: StateProfile, delta) -> StateProfile:
    """Translate ``x`` by ``delta >= 0``: the result evaluates to ``x(delta + tau)``."""
    delta = as_fraction(delta)
    if delta < 0:
        raise ValueError(f"shift increment must be >= 0, got {float(delta)}")
    if delta == 0:
        return x
    return StateProfile(x.base, x.shift + delta)


def simpson_weights(s: float, t: float, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson with ``n_panels`` panels on ``[s, t]``."""
    if n_panels < 1:
        raise ValueError("n_panels must be >= 1")
    nodes = np.linspace(s, t, 2 * n_panels + 1)
    h = (t - s) / (2 * n_panels)
    weights = np.full(nodes.shape, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return nodes, weights * (h / 3.0)


def quadrature(fun: Callable, s: float, t: float, n_panels: int):
    """Composite Simpson rule for ``int_s^t fun``.

    ``fun`` is called once with the array of nodes and must return an array whose
    leading axis runs over the nodes; trailing axes are integrated independently.
    """
    if t < s:
        raise ValueError(f"quadrature needs t >= s, got [{s}, {t}]")
    if t == s:
        return 0.0
    nodes, weights = simpson_weights(s, t, n_panels)
    samples = np.asarray(fun(nodes), dtype=float)
    if samples.shape[:1] != nodes.shape:
        raise ValueError("integrand must return one sample per node along axis 0")
    bad = ~np.isfinite(samples)
    if bad.any():
        idx = int(np.argwhere(bad)[0][0])
        raise QuadratureError(f"non-finite integrand value at tau={nodes[idx]!r} on [{s}, {t}]")
    out = np.tensordot(weights, samples, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def panels_for(length: float, panels_per_unit: int = DEFAULT_PANELS_PER_UNIT) -> int:
    return max(1, math.ceil(panels_per_unit * length))


def _kinks(x: StateProfile, length: float) -> np.ndarray:
    """Breakpoints of a tabulated profile strictly inside ``(0, length)``.

    Splitting the quadrature there keeps Simpson exact on each linear piece.
    """
    if x.base.kind != TABULATED:
        return np.empty(0)
    pts = np.asarray(x.base.nodes) - float(x.shift)
    return pts[(pts > 0) & (pts < length)]


def integrate_profile(x: StateProfile, s, t, method: str = "closed_form",
                      panels_per_unit: int = DEFAULT_PANELS_PER_UNIT) -> float:
    """``int_s^t x(tau - s) dtau``, i.e. ``int_0^(t-s) x(u) du``."""
    length = float(as_fraction(t) - as_fraction(s))
    if length < 0 or float(s) < 0:
        raise ValueError(f"integrate_profile needs t >= s >= 0, got s={s}, t={t}")
    if length == 0:
        return 0.0
    if method == "closed_form" and x.base.has_antiderivative:
        value = x.base.integral(float(x.shift), length)
    elif method in ("closed_form", "quadrature"):
        edges = np.concatenate(([0.0], _kinks(x, length), [length]))
        value = sum(quadrature(x, a, b, panels_for(b - a, panels_per_unit)) for a, b in zip(edges, edges[1:]))
    else:
        raise ValueError(f"unknown integration method {method!r}")
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite profile integral for {x!r} over length {length}")
    return value


def cumulative_profile_integral(x: StateProfile, lengths, method: str = "closed_form",
                                panels_per_unit: int = DEFAULT_PANELS_PER_UNIT) -> np.ndarray:
    """``int_0^L x(u) du`` for every ``L`` in ``lengths`` (any order)."""
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths < 0):
        raise ValueError("integration lengths must be nonnegative")
    if method == "closed_form" and x.base.has_antiderivative:
        return np.asarray(x.base.integral(float(x.shift), lengths), dtype=float)
    if lengths.size == 0:
        return np.zeros_like(lengths)
    edges = np.union1d(lengths, _kinks(x, float(lengths.max())))
    pieces = np.empty_like(edges)
    prev = 0.0
    for i, upper in enumerate(edges):
        pieces[i] = quadrature(x, prev, upper, panels_for(upper - prev, panels_per_unit)) if upper > prev else 0.0
        prev = upper
    return np.cumsum(pieces)[np.searchsorted(edges, lengths)]


def profile_distance(x: StateProfile, y: StateProfile, T_trunc: float = 50.0,
                     n_samples: int = 2001) -> float:
    """Sup of ``|x(tau) - y(tau)|`` over an even sampling of ``[0, T_trunc]``."""
    if T_trunc <= 0:
        raise ValueError("T_trunc must be positive")
    if x == y:
        return 0.0
    taus = np.linspace(0.0, T_trunc, n_samples)
    return float(np.max(np.abs(np.asarray(x(taus)) - np.asarray(y(taus)))))
