"""Sample grids of time triples ``t >= s >= t0 >= 0``, initial states and test vectors."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence

import numpy as np

from .profiles import BaseProfile, StateProfile


@dataclass(frozen=True)
class GridPoint:
    t0: float
    s: float
    t: float
    x: Any

    def __post_init__(self):
        if not (self.t >= self.s >= self.t0 >= 0):
            raise ValueError(f"grid point violates t >= s >= t0 >= 0: {(self.t, self.s, self.t0)}")

    @property
    def dt(self) -> float:
        return self.t - self.s

    @property
    def x_shift(self) -> float:
        return float(getattr(self.x, "shift", float("nan")))


def _midpoints(values: Sequence[float]) -> tuple[float, ...]:
    values = sorted(set(float(v) for v in values))
    out = list(values)
    out += [(a + b) / 2 for a, b in zip(values, values[1:])]
    return tuple(sorted(out))


@dataclass(frozen=True)
class GridSpec:
    t0: tuple[float, ...] = (0.0, 1.0)
    dt: tuple[float, ...] = (0.0, 0.25, 1.0, 5.0, 20.0)
    s_offsets: tuple[float, ...] = (0.0, 1.0, 5.0)
    shifts: tuple[float, ...] = (0.0, 1.0, 10.0)
    n_random_vectors: int = 16

    def __post_init__(self):
        for name in ("t0", "dt", "s_offsets", "shifts"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"grid.{name} must be nonempty")
            if any(v < 0 or not np.isfinite(v) for v in values):
                raise ValueError(f"grid.{name} entries must be finite and >= 0")
            object.__setattr__(self, name, values)
        if int(self.n_random_vectors) < 0:
            raise ValueError("grid.n_random_vectors must be >= 0")
        object.__setattr__(self, "n_random_vectors", int(self.n_random_vectors))

    def refined(self) -> "GridSpec":
        """Same ranges, with midpoints inserted and twice the random vectors."""
        return GridSpec(
            t0=_midpoints(self.t0),
            dt=_midpoints(self.dt),
            s_offsets=_midpoints(self.s_offsets),
            shifts=_midpoints(self.shifts),
            n_random_vectors=2 * self.n_random_vectors,
        )

    @property
    def max_dt(self) -> float:
        return max(self.dt)

    def to_dict(self) -> dict:
        return {
            "t0": list(self.t0),
            "dt": list(self.dt),
            "s_offsets": list(self.s_offsets),
            "shifts": list(self.shifts),
            "n_random_vectors": self.n_random_vectors,
        }


@dataclass
class SampleGrid:
    points: list[GridPoint]
    vectors: np.ndarray
    spec: GridSpec | None = None
    base: BaseProfile | None = None
    seed: int | None = None

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if not self.points:
            raise ValueError("sample grid is empty")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def max_dt(self) -> float:
        return max(p.dt for p in self.points)

    def restrict(self, keep: Callable[[GridPoint], bool]) -> "SampleGrid":
        return replace(self, points=[p for p in self.points if keep(p)])

    def for_shift(self, shift: float) -> "SampleGrid":
        return self.restrict(lambda p: p.x_shift == float(shift))

    def shifts(self) -> list[float]:
        return sorted({p.x_shift for p in self.points})

    def refined(self) -> "SampleGrid":
        if self.spec is None or self.base is None:
            raise ValueError("only grids built from a GridSpec can be refined")
        seed = None if self.seed is None else self.seed + 1
        return build_grid(self.spec.refined(), self.base, self.dim, seed=seed)

    def summary(self) -> dict:
        out = {
            "n_points": len(self.points),
            "n_vectors": int(self.vectors.shape[0]),
            "max_dt": self.max_dt,
            "max_t": max(p.t for p in self.points),
        }
        if self.spec is not None:
            out["spec"] = self.spec.to_dict()
        return out


def probe_vectors(dim: int, n_random: int, rng: np.random.Generator) -> np.ndarray:
    """Coordinate basis followed by ``n_random`` standard normal vectors."""
    basis = np.eye(dim)
    if n_random == 0:
        return basis
    return np.vstack([basis, rng.standard_normal((n_random, dim))])


def build_grid(spec: GridSpec, base: BaseProfile, dim: int, seed: int | None = 42) -> SampleGrid:
    """Structured grid: every ``t0 x shift x s_offset x dt`` combination."""
    points = []
    for t0 in spec.t0:
        for shift in spec.shifts:
            x = StateProfile(base, shift)
            for offset in spec.s_offsets:
                for dt in spec.dt:
                    s = t0 + offset
                    points.append(GridPoint(t0=t0, s=s, t=s + dt, x=x))
    rng = np.random.default_rng(seed)
    vectors = probe_vectors(dim, spec.n_random_vectors, rng)
    return SampleGrid(points=points, vectors=vectors, spec=spec, base=base, seed=seed)


def random_grid(base: BaseProfile, dim: int, n: int, seed: int | None = 42,
                horizon: float = 5.0, max_shift: float = 10.0, n_random_vectors: int = 4) -> SampleGrid:
    """``n`` random triples with each gap uniform on ``[0, horizon]``."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.0, horizon, size=(n, 3))
    shifts = rng.uniform(0.0, max_shift, size=n)
    points = []
    for (g0, g1, g2), shift in zip(gaps, shifts):
        t0 = float(g0)
        s = t0 + float(g1)
        points.append(GridPoint(t0=t0, s=s, t=s + float(g2), x=StateProfile(base, float(shift))))
    return SampleGrid(points=points, vectors=probe_vectors(dim, n_random_vectors, rng), base=base, seed=seed)
