"""Projector families ``x -> P_k(x)`` and their compatibility with a skew system."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Any, Callable, Sequence

import numpy as np

from .dynamics import (
    AxiomReport,
    SkewEvolutionSystem,
    describe_point,
    sample_points,
    evaluate_cocycle,
    evaluate_semiflow,
    norm1,
)

RANK_THRESHOLD = 1e-8


@dataclass
class ProjectorFamily:
    evaluate: Callable[[Any], np.ndarray]
    label: int
    dim: int

    def __post_init__(self):
        if self.label not in (1, 2, 3):
            raise ValueError(f"projector label must be 1, 2 or 3, got {self.label}")

    def __call__(self, x) -> np.ndarray:
        matrix = np.asarray(self.evaluate(x), dtype=float)
        if matrix.shape != (self.dim, self.dim):
            raise ValueError(f"projector {self.label} returned shape {matrix.shape}, expected {(self.dim, self.dim)}")
        return matrix

    @classmethod
    def constant(cls, matrix, label: int) -> "ProjectorFamily":
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("projector matrix must be square")
        matrix.setflags(write=False)
        return cls(lambda x: matrix, label, matrix.shape[0])

    @classmethod
    def coordinate(cls, indices: Sequence[int], dim: int, label: int) -> "ProjectorFamily":
        """Projection onto the listed coordinates (zero elsewhere)."""
        diag = np.zeros(dim)
        for i in indices:
            if not 0 <= int(i) < dim:
                raise ValueError(f"coordinate index {i} out of range for dimension {dim}")
            diag[int(i)] = 1.0
        return cls.constant(np.diag(diag), label)


@dataclass
class CompatibleFamilySet:
    families: list[ProjectorFamily]
    system: SkewEvolutionSystem

    def __post_init__(self):
        self.families = list(self.families)
        if len(self.families) not in (2, 3):
            raise ValueError(f"expected 2 or 3 projector families, got {len(self.families)}")
        for fam in self.families:
            if fam.dim != self.system.dim:
                raise ValueError(f"projector {fam.label} has dimension {fam.dim}, system has {self.system.dim}")

    def __len__(self):
        return len(self.families)

    def __getitem__(self, k):
        return self.families[k]

    @property
    def mode(self) -> str:
        return "dichotomy" if len(self.families) == 2 else "trichotomy"

    def matrices(self, x) -> list[np.ndarray]:
        return [fam(x) for fam in self.families]


def coordinate_families(system: SkewEvolutionSystem, partition: Sequence[Sequence[int]]) -> CompatibleFamilySet:
    """One coordinate projector per block of ``partition`` (blocks may be empty)."""
    return CompatibleFamilySet(
        [ProjectorFamily.coordinate(block, system.dim, k + 1) for k, block in enumerate(partition)],
        system,
    )


def matrix_families(system: SkewEvolutionSystem, matrices) -> CompatibleFamilySet:
    return CompatibleFamilySet(
        [ProjectorFamily.constant(m, k + 1) for k, m in enumerate(matrices)], system
    )


def projector_rank(matrix: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    return int(np.sum(np.linalg.svd(matrix, compute_uv=False) > threshold))


def _abs_max(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def check_family_algebra(families: CompatibleFamilySet, samples, tol: float = 1e-12) -> AxiomReport:
    """Idempotence, partition of the identity and mutual annihilation at sampled states."""
    points = sample_points(samples)
    eye = np.eye(families.system.dim)
    residuals = {"idempotence": 0.0, "partition": 0.0, "annihilation": 0.0}
    worst: dict[str, dict] = {}

    def note(name, value, p):
        if name not in worst or value > residuals[name]:
            residuals[name] = value
            worst[name] = describe_point(p)

    seen = set()
    for p in points:
        key = repr(p.x)
        if key in seen:
            continue
        seen.add(key)
        mats = families.matrices(p.x)
        note("idempotence", max(_abs_max(m @ m - m) for m in mats), p)
        note("partition", _abs_max(sum(mats) - eye), p)
        note("annihilation", max(max(_abs_max(a @ b), _abs_max(b @ a)) for a, b in combinations(mats, 2)), p)
    return AxiomReport("family_algebra", residuals, tol, len(seen), worst)


def check_intertwining(families: CompatibleFamilySet, samples, tol: float = 1e-9,
                       vectors: np.ndarray | None = None) -> AxiomReport:
    """Max of ``|P_k(phi(t,s,x)) Phi(t,s,x) v - Phi(t,s,x) P_k(x) v|`` over samples.

    Each residual is divided by ``max(1, |Phi(t,s,x) v|)``.
    """
    points = sample_points(samples)
    if vectors is None:
        vectors = getattr(samples, "vectors", None)
    if vectors is None:
        vectors = np.eye(families.system.dim)
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    system = families.system
    residuals = {"intertwining": 0.0, "invariance": 0.0}
    worst: dict[str, dict] = {}
    eye = np.eye(system.dim)
    for p in points:
        phi = evaluate_cocycle(system, p.t, p.s, p.x)
        moved = evaluate_semiflow(system, p.t, p.s, p.x)
        scale = np.maximum(1.0, norm1(vectors @ phi.T))
        for fam in families.families:
            src, dst = fam(p.x), fam(moved)
            diff = norm1(vectors @ (dst @ phi - phi @ src).T) / scale
            leak = norm1(vectors @ ((eye - dst) @ phi @ src).T) / scale
            for name, value in (("intertwining", float(diff.max())), ("invariance", float(leak.max()))):
                if name not in worst or value > residuals[name]:
                    residuals[name] = value
                    worst[name] = {**describe_point(p), "family": fam.label}
    return AxiomReport("intertwining", residuals, tol, len(points), worst)
