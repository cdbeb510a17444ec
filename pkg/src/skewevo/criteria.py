"""Growth-function and integral criteria, with their constant extraction.

The growth-function criterion replaces ``exp(nu (t-s))`` by any nondecreasing
unbounded ``f > 1``:

    f(t-s) |Phi(t,t0,x)P1 v| <= |Phi(s,t0,x)P1 v|
    f(t-s) |Phi(s,t0,x)P2 v| <= |Phi(t,t0,x)P2 v|

and ``delta`` with ``f(delta) > 1`` yields ``N = f(delta)``, ``nu = ln f(delta) / delta``.

The integral criterion bounds the stable/unstable parts by a sup constant ``N``
and an integral constant ``M`` and the center part two-sidedly by some ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import SpectralConstants, Trajectories, Violation, violation_at
from .dynamics import SkewEvolutionSystem, norm1
from .grid import SampleGrid
from .profiles import DEFAULT_PANELS_PER_UNIT, panels_for, quadrature
from .projectors import CompatibleFamilySet

AFFINE_OVER_CONST = "affine_over_const"
SCALED_EXP = "scaled_exp"
TABULATED = "tabulated"

CRITERION_KINDS = (AFFINE_OVER_CONST, SCALED_EXP, TABULATED)


class InvalidCriterionError(ValueError):
    pass


@dataclass(frozen=True)
class CriterionFunction:
    """``affine_over_const``: ``(u + 1) / c``; ``scaled_exp``: ``exp(nu u) / N``;
    ``tabulated``: piecewise linear, extended with the last slope."""

    kind: str
    c: float = 1.0
    N: float = 1.0
    nu: float = 1.0
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise InvalidCriterionError(f"unknown criterion kind {self.kind!r}")
        if self.kind == AFFINE_OVER_CONST and not self.c > 0:
            raise InvalidCriterionError("affine_over_const needs c > 0")
        if self.kind == SCALED_EXP and not (self.N > 0 and self.nu > 0):
            raise InvalidCriterionError("scaled_exp needs N > 0 and nu > 0")
        if self.kind == TABULATED:
            nodes = tuple(float(u) for u in self.nodes)
            values = tuple(float(v) for v in self.values)
            if len(nodes) < 2 or len(nodes) != len(values) or nodes[0] != 0.0:
                raise InvalidCriterionError("tabulated criterion needs >= 2 nodes starting at 0 with matching values")
            if any(b <= a for a, b in zip(nodes, nodes[1:])):
                raise InvalidCriterionError("tabulated nodes must increase strictly")
            object.__setattr__(self, "nodes", nodes)
            object.__setattr__(self, "values", values)

    @classmethod
    def affine_over_const(cls, c: float) -> "CriterionFunction":
        return cls(AFFINE_OVER_CONST, c=float(c))

    @classmethod
    def scaled_exp(cls, N: float, nu: float) -> "CriterionFunction":
        return cls(SCALED_EXP, N=float(N), nu=float(nu))

    @classmethod
    def tabulated(cls, nodes, values) -> "CriterionFunction":
        return cls(TABULATED, nodes=tuple(nodes), values=tuple(values))

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionFunction":
        data = {k: v for k, v in data.items() if k != "delta"}
        for key in ("nodes", "values"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        if self.kind == AFFINE_OVER_CONST:
            return {"kind": self.kind, "c": self.c}
        if self.kind == SCALED_EXP:
            return {"kind": self.kind, "N": self.N, "nu": self.nu}
        return {"kind": self.kind, "nodes": list(self.nodes), "values": list(self.values)}

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == AFFINE_OVER_CONST:
            out = (u + 1.0) / self.c
        elif self.kind == SCALED_EXP:
            out = np.exp(self.nu * u) / self.N
        else:
            nodes, values = self.nodes, self.values
            slope = (values[-1] - values[-2]) / (nodes[-1] - nodes[-2])
            out = np.where(u <= nodes[-1], np.interp(u, nodes, values), values[-1] + slope * (u - nodes[-1]))
        return out if out.ndim else float(out)

    def log(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == SCALED_EXP:
            return self.nu * u - math.log(self.N)
        return np.log(self(u))

    @property
    def crossing(self) -> float:
        """Point beyond which the range condition ``f > 1`` is enforced."""
        if self.kind == SCALED_EXP:
            return max(0.0, math.log(self.N) / self.nu)
        return 0.0

    def validate(self, horizon: float = 100.0, n_samples: int = 513) -> None:
        """Check monotonicity, ``f > 1`` past :attr:`crossing`, and unboundedness."""
        u = np.union1d(np.linspace(0.0, max(horizon, 1.0), n_samples), np.asarray(self.nodes, dtype=float))
        values = np.asarray(self(u))
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidCriterionError(f"{self.kind} criterion must be finite and positive")
        if np.any(np.diff(values) < 0):
            raise InvalidCriterionError(f"{self.kind} criterion is not nondecreasing")
        cross = self.crossing
        in_range = u > cross if self.kind == SCALED_EXP else u >= 0
        if np.any(values[in_range] <= 1.0):
            raise InvalidCriterionError(f"{self.kind} criterion must exceed 1 on its range (u > {cross:g})")
        if self.kind == TABULATED and not self.values[-1] > self.values[-2]:
            raise InvalidCriterionError("tabulated criterion must end with a positive slope to be unbounded")


@dataclass
class CriterionReport:
    criterion: str
    passed: bool
    function: CriterionFunction
    witnesses: list[Violation] = field(default_factory=list)
    n_violations: int = 0
    extracted: dict | None = None
    delta: float | None = None
    details: dict = field(default_factory=dict)
    integral_table: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "passed": self.passed,
            "function": self.function.to_dict(),
            "n_violations": self.n_violations,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "extracted": self.extracted,
            "delta": self.delta,
            "details": self.details,
        }


def _collect(traj, checks, mask, slack, n_witnesses):
    """Run ``(k, name, lhs, rhs)`` log inequalities; return violations and worst witnesses."""
    tol = math.log1p(slack)
    rows = []
    n_bad = 0
    for k, name, lhs, rhs in checks:
        active = traj.active[k] & mask[:, None]
        with np.errstate(invalid="ignore"):
            margin = np.where(np.isneginf(lhs), -np.inf, lhs - rhs)
        margin = np.where(active, margin, -np.inf)
        n_bad += int(np.sum(margin > tol))
        flat = np.argsort(margin, axis=None)[::-1][:n_witnesses]
        for i, j in zip(*np.unravel_index(flat, margin.shape)):
            if np.isfinite(margin[i, j]):
                rows.append((float(margin[i, j]), violation_at(traj, i, j, k, name, float(lhs[i, j]), float(rhs[i, j]))))
    rows.sort(key=lambda r: -r[0])
    return n_bad, [w for _, w in rows[:n_witnesses]]


def derive_constants_from_criterion(f: CriterionFunction, delta: float) -> tuple[float, float]:
    """``N = f(delta)`` and ``nu = ln f(delta) / delta``."""
    if not delta > 0:
        raise InvalidCriterionError("delta must be positive")
    fd = float(f(delta))
    if not fd > 1.0:
        raise InvalidCriterionError(f"need f(delta) > 1, got f({delta:g}) = {fd:.6g}")
    return fd, math.log(fd) / delta


def build_criterion_from_constants(N1: float, N2: float, nu1: float, nu2: float) -> CriterionFunction:
    """``f(u) = exp(nu u) / N`` with ``N = max(N1, N2)``, ``nu = min(nu1, nu2)``.

    Note ``f(0) = 1 / N <= 1``: the range condition only holds for
    ``u > ln(N) / nu``.
    """
    SpectralConstants((N1, N2), (nu1, nu2)).validate(2)
    return CriterionFunction.scaled_exp(max(N1, N2), min(nu1, nu2))


def check_growth_criterion(system: SkewEvolutionSystem, families: CompatibleFamilySet,
                           f: CriterionFunction, grid: SampleGrid, delta: float = 1.0,
                           min_horizon: float | None = None, slack: float = 1e-9,
                           n_witnesses: int = 5) -> CriterionReport:
    """Check both growth-function inequalities on the grid.

    Pairs with ``t == s`` are skipped unless ``min_horizon`` is given: there the
    first inequality reads ``f(0) |w| <= |w|``, which no ``f(0) > 1`` satisfies.
    With ``min_horizon`` only pairs with ``t - s >= min_horizon`` are checked.
    """
    if families.system is not system or len(families) != 2:
        raise ValueError("the growth criterion needs two projector families of this system")
    f.validate(horizon=grid.max_dt)
    traj = Trajectories(families, grid)
    mask = traj.dt > 0 if min_horizon is None else traj.dt >= min_horizon
    logf = np.asarray(f.log(traj.dt), dtype=float)[:, None]
    checks = [
        (0, "growth_i", logf + traj.log_b[0], traj.log_a[0]),
        (1, "growth_ii", logf + traj.log_a[1], traj.log_b[1]),
    ]
    n_bad, witnesses = _collect(traj, checks, mask, slack, n_witnesses)
    passed = n_bad == 0
    extracted = None
    notes = []
    if passed:
        try:
            N, nu = derive_constants_from_criterion(f, delta)
            extracted = {"N": N, "nu": nu}
        except InvalidCriterionError as exc:
            notes.append(str(exc))
    return CriterionReport(
        criterion="growth", passed=passed, function=f, witnesses=witnesses, n_violations=n_bad,
        extracted=extracted, delta=delta if extracted else None,
        details={"n_pairs": int(mask.sum()), "min_horizon": min_horizon, "notes": notes},
    )


def _projected_integrals(system, families, grid, traj, panels_per_unit):
    """``int_s^t |Phi(tau,t0,x) P_k v| dtau`` for k = 1, 2; shape ``(2, n_points, m)``."""
    out = np.zeros((2, len(traj.points), grid.vectors.shape[0]))
    for i, p in enumerate(traj.points):
        if p.dt <= 0:
            continue
        Ws = [grid.vectors @ P.T for P in families.matrices(p.x)[:2]]

        def integrand(taus, p=p, Ws=Ws):
            path = system.cocycle_path(taus, p.t0, p.x)
            return np.stack([norm1(np.einsum("npq,mq->nmp", path, W)) for W in Ws], axis=1)

        out[:, i, :] = quadrature(integrand, p.s, p.t, panels_for(p.dt, panels_per_unit))
    return out


def check_integral_criterion(system: SkewEvolutionSystem, families: CompatibleFamilySet,
                             g: CriterionFunction, grid: SampleGrid,
                             panels_per_unit: int = DEFAULT_PANELS_PER_UNIT,
                             max_gain: float = 10.0, slack: float = 1e-9,
                             n_witnesses: int = 5) -> CriterionReport:
    """Grid-feasible sup constant ``N``, integral constant ``M`` and the ``g`` bounds.

    ``N`` and ``M`` are the grid suprema (at least 1) of

        |Phi(t,t0,x)P1 v| / |P1 v|,          |P2 v| / |Phi(t,t0,x)P2 v|,
        int_s^t |Phi(tau,t0,x)P1 v| / |Phi(s,t0,x)P1 v|,
        int_s^t |Phi(tau,t0,x)P2 v| / |Phi(t,t0,x)P2 v|.

    The report passes when both are finite and at most ``max_gain`` and the
    center component satisfies ``g(t-s)``-bounds in both directions.
    """
    if families.system is not system or len(families) != 3:
        raise ValueError("the integral criterion needs three projector families of this system")
    g.validate(horizon=grid.max_dt)
    traj = Trajectories(families, grid)
    all_points = np.ones(len(traj.points), dtype=bool)

    def sup(values, k):
        sel = values[traj.active[k]]
        return float(np.exp(sel.max())) if sel.size else 0.0

    with np.errstate(invalid="ignore"):
        N1 = max(sup(traj.log_b[0] - traj.log_src[0], 0), sup(traj.log_a[0] - traj.log_src[0], 0))
        N2 = max(sup(traj.log_src[1] - traj.log_b[1], 1), sup(traj.log_src[1] - traj.log_a[1], 1))
    integrals = _projected_integrals(system, families, grid, traj, panels_per_unit)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_int = np.log(integrals)
        M1 = sup(np.where(traj.dt[:, None] > 0, log_int[0] - traj.log_a[0], -np.inf), 0)
        M2 = sup(np.where(traj.dt[:, None] > 0, log_int[1] - traj.log_b[1], -np.inf), 1)
    N = max(1.0, N1, N2)
    M = max(1.0, M1, M2)
    logg = np.asarray(g.log(traj.dt), dtype=float)[:, None]
    checks = [
        (2, "center_upper", traj.log_b[2], logg + traj.log_a[2]),
        (2, "center_lower", traj.log_a[2], logg + traj.log_b[2]),
    ]
    n_bad, witnesses = _collect(traj, checks, all_points, slack, n_witnesses)
    bounded = math.isfinite(N) and math.isfinite(M) and N <= max_gain and M <= max_gain
    passed = bounded and n_bad == 0
    extracted = None
    if passed:
        g1 = float(g(1.0))
        extracted = {"N": N, "M": M, "N3": g1, "nu3": math.log(g1)}
    table = [
        {"t0": p.t0, "s": p.s, "t": p.t, "x_shift": p.x_shift, "component": k + 1,
         "vector": j, "integral": float(integrals[k, i, j])}
        for k in range(2) for i, p in enumerate(traj.points) if p.dt > 0
        for j in range(grid.vectors.shape[0]) if traj.active[k, i, j]
    ]
    return CriterionReport(
        criterion="integral", passed=passed, function=g, witnesses=witnesses, n_violations=n_bad,
        extracted=extracted,
        details={"N1": N1, "N2": N2, "M1": M1, "M2": M2, "N": N, "M": M, "max_gain": max_gain,
                 "bounded": bounded, "panels_per_unit": panels_per_unit},
        integral_table=table,
    )


def trichotomy_delta(N: float, M: float) -> int:
    """Smallest integer ``delta >= N (M + 1)``, so ``(delta + 1) / (N (M + 1)) > 1``."""
    return max(1, math.ceil(N * (M + 1)))


def derive_trichotomy_constants(report: CriterionReport) -> SpectralConstants:
    """Constants from a passed integral-criterion report.

    With ``f(u) = (u + 1) / (N (M + 1))`` and ``delta`` from
    :func:`trichotomy_delta`, components 1 and 2 get rate ``ln f(delta) / delta``
    and gain ``N f(delta)``; component 3 gets ``N3 = g(1)``, ``nu3 = ln g(1)``.
    The extra factor ``N`` covers horizons shorter than ``delta``, where only the
    sup bound is available.
    """
    if not report.passed or report.extracted is None or report.criterion != "integral":
        raise ValueError("need a passed integral-criterion report")
    N, M = report.extracted["N"], report.extracted["M"]
    g1 = float(report.function(1.0))
    if not g1 > 1.0:
        raise InvalidCriterionError(f"need g(1) > 1, got {g1:.6g}")
    delta = trichotomy_delta(N, M)
    f = CriterionFunction.affine_over_const(N * (M + 1))
    fd, nu = derive_constants_from_criterion(f, delta)
    report.delta = float(delta)
    return SpectralConstants((N * fd, N * fd, g1), (nu, nu, math.log(g1)))
