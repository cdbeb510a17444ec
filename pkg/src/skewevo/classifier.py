"""Grid verification and estimation of uniform exponential dichotomy / trichotomy.

For a grid tuple ``(t0, s, t, x)`` and test vector ``v`` write
``a = |Phi(s,t0,x) P_k(x) v|`` and ``b = |Phi(t,t0,x) P_k(x) v|``.  The
inequalities checked per component are

* decay (k = 1):   ``exp(nu1 (t-s)) b <= N1 a``
* growth (k = 2):  ``exp(nu2 (t-s)) a <= N2 b``
* center (k = 3):  ``b <= N3 exp(nu3 (t-s)) a`` and ``a <= N3 exp(nu3 (t-s)) b``

All comparisons are made on logarithms with relative slack ``1 + slack``.
Certificates are evidence on a finite grid, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SkewEvolutionSystem, evaluate_cocycle, norm1
from .grid import SampleGrid
from .projectors import CompatibleFamilySet

DECAY, GROWTH, CENTER = "decay", "growth", "center"
ROLES = (DECAY, GROWTH, CENTER)

DEFAULT_SLACK = 1e-9
DEGENERATE_TOL = 1e-12

DICHOTOMIC, TRICHOTOMIC, REJECTED = "dichotomic", "trichotomic", "rejected"


@dataclass(frozen=True)
class SpectralConstants:
    gains: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    def validate(self, n: int | None = None) -> None:
        if len(self.gains) != len(self.rates) or len(self.gains) not in (2, 3):
            raise ValueError("constants need 2 or 3 matching gains and rates")
        if n is not None and len(self.gains) != n:
            raise ValueError(f"expected {n} gain/rate pairs, got {len(self.gains)}")
        for k, (N, nu) in enumerate(zip(self.gains, self.rates), start=1):
            if not (math.isfinite(N) and N >= 1):
                raise ValueError(f"gain N{k} must be finite and >= 1, got {N}")
            if not (math.isfinite(nu) and nu > 0):
                raise ValueError(f"rate nu{k} must be finite and > 0, got {nu}")

    def to_dict(self) -> dict:
        return {"gains": list(self.gains), "rates": list(self.rates)}

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralConstants":
        return cls(tuple(data["gains"]), tuple(data["rates"]))


@dataclass
class Violation:
    t: float
    s: float
    t0: float
    x_shift: float
    vector: list[float]
    component: int
    condition: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "t": self.t, "s": self.s, "t0": self.t0, "x_shift": self.x_shift,
            "vector": list(self.vector), "component": self.component,
            "condition": self.condition, "lhs": self.lhs, "rhs": self.rhs,
        }


@dataclass
class SpectralCertificate:
    verdict: str
    constants: SpectralConstants | None
    grid: dict
    violations: list[Violation] = field(default_factory=list)
    n_violations: int = 0
    first_violation: Violation | None = None
    worst_margin: float = 0.0
    n_checked: int = 0
    notes: list[str] = field(default_factory=list)
    per_state: dict[str, dict] = field(default_factory=dict)
    estimates: dict | None = None

    @property
    def passed(self) -> bool:
        return self.verdict != REJECTED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "constants": None if self.constants is None else self.constants.to_dict(),
            "grid": self.grid,
            "n_checked": self.n_checked,
            "n_violations": self.n_violations,
            "worst_margin": self.worst_margin,
            "first_violation": None if self.first_violation is None else self.first_violation.to_dict(),
            "violations": [v.to_dict() for v in self.violations],
            "notes": list(self.notes),
            "per_state": self.per_state,
            "estimates": self.estimates,
        }


def roles_for(n_families: int) -> tuple[str, ...]:
    return ROLES[:n_families]


class Trajectories:
    """Projected trajectory norms over a grid, computed once and reused.

    Arrays are indexed ``[component][point, vector]`` and hold natural logs of
    ``|Phi(s,t0,x)P_k v|`` (``log_a``) and ``|Phi(t,t0,x)P_k v|`` (``log_b``).
    ``active`` masks vectors with ``P_k(x) v != 0``.
    """

    def __init__(self, families: CompatibleFamilySet, grid: SampleGrid):
        system = families.system
        if grid.dim != system.dim:
            raise ValueError(f"grid vectors have dimension {grid.dim}, system has {system.dim}")
        self.families = families
        self.grid = grid
        self.points = list(grid.points)
        vectors = grid.vectors
        n, m, K = len(self.points), vectors.shape[0], len(families)
        self.dt = np.array([p.dt for p in self.points])
        self.log_a = np.empty((K, n, m))
        self.log_b = np.empty((K, n, m))
        self.log_src = np.empty((K, n, m))
        cache: dict = {}

        def phi(time, p):
            key = (time, p.t0, p.x)
            if key not in cache:
                cache[key] = evaluate_cocycle(system, time, p.t0, p.x)
            return cache[key]

        vnorm = norm1(vectors)
        with np.errstate(divide="ignore"):
            for i, p in enumerate(self.points):
                A, B = phi(p.s, p), phi(p.t, p)
                for k, P in enumerate(families.matrices(p.x)):
                    W = vectors @ P.T
                    self.log_src[k, i] = np.log(norm1(W))
                    self.log_a[k, i] = np.log(norm1(W @ A.T))
                    self.log_b[k, i] = np.log(norm1(W @ B.T))
        self.active = self.log_src > np.log(DEGENERATE_TOL) + np.log(np.maximum(vnorm, 1e-300))[None, None, :]

    def point_mask(self, shift: float | None = None) -> np.ndarray:
        if shift is None:
            return np.ones(len(self.points), dtype=bool)
        return np.array([p.x_shift == shift for p in self.points])

    def sides(self, k: int, role: str, gain: float, rate: float):
        """Log lhs/rhs pairs for every inequality of component ``k``."""
        dt = self.dt[:, None]
        a, b = self.log_a[k], self.log_b[k]
        logN = math.log(gain)
        if role == DECAY:
            return [("decay", rate * dt + b, logN + a)]
        if role == GROWTH:
            return [("growth", rate * dt + a, logN + b)]
        return [("center_upper", b, logN + rate * dt + a), ("center_lower", a, logN + rate * dt + b)]


def violation_at(traj: Trajectories, i: int, j: int, k: int, cond: str, lhs: float, rhs: float) -> Violation:
    p = traj.points[i]
    return Violation(
        t=p.t, s=p.s, t0=p.t0, x_shift=p.x_shift,
        vector=[float(c) for c in traj.grid.vectors[j]],
        component=k + 1, condition=cond,
        lhs=float(math.exp(lhs)) if lhs < 709 else math.inf,
        rhs=float(math.exp(rhs)) if rhs < 709 else math.inf,
    )


def _verify(families: CompatibleFamilySet, constants: SpectralConstants, grid: SampleGrid,
            slack: float, max_violations: int, traj: Trajectories | None = None) -> SpectralCertificate:
    K = len(families)
    constants.validate(K)
    if traj is None:
        traj = Trajectories(families, grid)
    tol = math.log1p(slack)
    found = []  # (margin, grid order, i, j, k, cond, lhs, rhs)
    worst = -math.inf
    n_checked = 0
    for k, role in enumerate(roles_for(K)):
        active = traj.active[k]
        for cond, lhs, rhs in traj.sides(k, role, constants.gains[k], constants.rates[k]):
            with np.errstate(invalid="ignore"):
                margin = np.where(np.isneginf(lhs), -np.inf, lhs - rhs)
            margin = np.where(active, margin, -np.inf)
            n_checked += int(active.sum())
            if active.any():
                worst = max(worst, float(margin[active].max()))
            for i, j in np.argwhere(margin > tol):
                found.append((float(margin[i, j]), (i, k, j), i, j, k, cond, float(lhs[i, j]), float(rhs[i, j])))
    verdict = REJECTED if found else (DICHOTOMIC if K == 2 else TRICHOTOMIC)
    first = min(found, key=lambda f: f[1]) if found else None
    found.sort(key=lambda f: (-f[0], f[1]))
    return SpectralCertificate(
        verdict=verdict,
        constants=constants,
        grid=grid.summary(),
        violations=[violation_at(traj, *f[2:]) for f in found[:max_violations]],
        n_violations=len(found),
        first_violation=None if first is None else violation_at(traj, *first[2:]),
        worst_margin=math.exp(worst) if math.isfinite(worst) else 0.0,
        n_checked=n_checked,
    )


def _check_families(system: SkewEvolutionSystem, families: CompatibleFamilySet, n: int) -> None:
    if families.system is not system:
        raise ValueError("projector families belong to a different system")
    if len(families) != n:
        raise ValueError(f"expected {n} projector families, got {len(families)}")


def verify_dichotomy(system: SkewEvolutionSystem, families: CompatibleFamilySet,
                     constants: SpectralConstants, grid: SampleGrid,
                     slack: float = DEFAULT_SLACK, max_violations: int = 10) -> SpectralCertificate:
    """Check the decay/growth inequalities with the given ``(N1, N2, nu1, nu2)``."""
    _check_families(system, families, 2)
    return _verify(families, constants, grid, slack, max_violations)


def verify_trichotomy(system: SkewEvolutionSystem, families: CompatibleFamilySet,
                      constants: SpectralConstants, grid: SampleGrid,
                      slack: float = DEFAULT_SLACK, max_violations: int = 10) -> SpectralCertificate:
    """As :func:`verify_dichotomy`, plus the two-sided bounds on the center component."""
    _check_families(system, families, 3)
    return _verify(families, constants, grid, slack, max_violations)


@dataclass
class ComponentEstimate:
    label: int
    role: str
    rate: float | None
    gain: float | None
    n_pairs: int
    degenerate: bool = False
    extremal: dict | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label, "role": self.role, "rate": self.rate, "gain": self.gain,
            "n_pairs": self.n_pairs, "degenerate": self.degenerate, "extremal": self.extremal,
        }


@dataclass
class RateEstimate:
    components: list[ComponentEstimate]
    per_state: dict[str, list[ComponentEstimate]] = field(default_factory=dict)

    def constants(self) -> SpectralConstants:
        return SpectralConstants(tuple(c.gain for c in self.components), tuple(c.rate for c in self.components))

    def to_dict(self) -> dict:
        return {
            "uniform": [c.to_dict() for c in self.components],
            "per_state": {k: [c.to_dict() for c in v] for k, v in self.per_state.items()},
        }


def _estimate_component(traj: Trajectories, k: int, role: str, mask: np.ndarray) -> ComponentEstimate:
    active = traj.active[k] & mask[:, None]
    pairs = active & (traj.dt[:, None] > 0)
    a, b = traj.log_a[k], traj.log_b[k]
    label = k + 1
    if not pairs.any():
        return ComponentEstimate(label, role, None, None, 0)
    degenerate = bool(np.any(pairs & np.isneginf(b) & np.isfinite(a)) or np.any(pairs & np.isneginf(a)))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (b - a) / traj.dt[:, None]
    if role == DECAY:
        cand = np.where(pairs & np.isfinite(r), r, -np.inf)
        idx = np.unravel_index(np.argmax(cand), cand.shape)
        rate = -float(cand[idx]) if np.isfinite(cand[idx]) else None
    elif role == GROWTH:
        cand = np.where(pairs, np.nan_to_num(r, nan=-np.inf), np.inf)
        idx = np.unravel_index(np.argmin(cand), cand.shape)
        rate = float(cand[idx])
    else:
        cand = np.where(pairs, np.abs(np.nan_to_num(r, nan=np.inf)), -np.inf)
        idx = np.unravel_index(np.argmax(cand), cand.shape)
        rate = float(cand[idx])
    p = traj.points[idx[0]]
    extremal = {"t": p.t, "s": p.s, "t0": p.t0, "x_shift": p.x_shift, "vector": int(idx[1])}
    gain = None
    if rate is not None and math.isfinite(rate):
        worst = -np.inf
        for _, lhs, rhs in traj.sides(k, role, 1.0, rate):
            with np.errstate(invalid="ignore"):
                margin = np.where(np.isneginf(lhs), -np.inf, lhs - rhs)
            sel = margin[active]
            if sel.size:
                worst = max(worst, float(sel.max()))
        gain = max(1.0, math.exp(worst)) if math.isfinite(worst) else 1.0
    return ComponentEstimate(label, role, rate, gain, int(pairs.sum()), degenerate, extremal)


def estimate_sharp_rates(system: SkewEvolutionSystem, families: CompatibleFamilySet, grid: SampleGrid,
                         traj: Trajectories | None = None) -> RateEstimate:
    """Extremal per-pair exponents ``r = ln(b / a) / (t - s)`` for each component.

    Decay rate is ``-max r``, growth rate ``min r``, center rate ``max |r|``.
    Gains are the smallest ``N >= 1`` that make the grid inequalities hold with
    those rates.  Estimates are reported uniformly and per initial state.
    """
    if families.system is not system:
        raise ValueError("projector families belong to a different system")
    if traj is None:
        traj = Trajectories(families, grid)
    roles = roles_for(len(families))
    if not np.any(traj.dt > 0):
        raise ValueError("rate estimation needs at least one grid pair with t > s")
    uniform = [_estimate_component(traj, k, role, traj.point_mask()) for k, role in enumerate(roles)]
    per_state = {
        f"{shift:g}": [_estimate_component(traj, k, role, traj.point_mask(shift)) for k, role in enumerate(roles)]
        for shift in grid.shifts()
    }
    return RateEstimate(uniform, per_state)


def resolvable_rate(horizon: float) -> float:
    """Slowest exponential rate distinguishable from ``(1 + h)^-1`` decay on ``[0, horizon]``."""
    return math.log1p(horizon) / horizon if horizon > 0 else 0.0


def _certified_constants(est: list[ComponentEstimate], safety: float, inflation: float,
                         floor: float) -> tuple[SpectralConstants, list[str], list[str]]:
    gains, rates, problems, notes = [], [], [], []
    for c in est:
        if c.rate is None:
            notes.append(f"component {c.label} has no nondegenerate pairs; constants are vacuous")
            gains.append(1.0)
            rates.append(1.0)
            continue
        if c.role == CENTER:
            nu = c.rate / safety if c.rate > 0 else floor
            if not math.isfinite(nu):
                problems.append(f"component {c.label}: unbounded center exponent")
                nu = floor
        else:
            nu = safety * c.rate
            if not math.isfinite(nu) or nu < floor or nu <= 0:
                problems.append(
                    f"component {c.label}: estimated {c.role} rate {c.rate:.6g} is below the "
                    f"resolvable floor {floor:.6g} after safety factor {safety}"
                )
                nu = floor
        gains.append(inflation * (c.gain if c.gain is not None and math.isfinite(c.gain) else 1.0))
        rates.append(nu)
    return SpectralConstants(tuple(gains), tuple(rates)), problems, notes


def certify(system: SkewEvolutionSystem, families: CompatibleFamilySet, grid: SampleGrid,
            mode: str | None = None, safety: float = 0.95, gain_inflation: float = 1.05,
            min_rate: float | None = None, slack: float = DEFAULT_SLACK,
            max_violations: int = 10) -> SpectralCertificate:
    """Estimate sharp constants, back them off, and verify on a refined grid.

    Decay and growth rates are multiplied by ``safety``; the center rate is
    divided by it; gains are multiplied by ``gain_inflation``.  A decay or growth
    rate below ``min_rate`` (default: :func:`resolvable_rate` of the grid's
    longest horizon) cannot be told apart from polynomial behaviour on the grid
    and the verdict is rejected.
    """
    mode = mode or families.mode
    n = {"dichotomy": 2, "trichotomy": 3}.get(mode)
    if n is None:
        raise ValueError(f"unknown mode {mode!r}")
    _check_families(system, families, n)
    if not 0 < safety <= 1 or gain_inflation < 1:
        raise ValueError("safety must lie in (0, 1] and gain_inflation must be >= 1")
    traj = Trajectories(families, grid)
    est = estimate_sharp_rates(system, families, grid, traj)
    floor = resolvable_rate(grid.max_dt) if min_rate is None else float(min_rate)
    if floor <= 0:
        raise ValueError("the grid needs a pair with t > s (or an explicit positive min_rate)")
    constants, problems, notes = _certified_constants(est.components, safety, gain_inflation, floor)
    refined = grid.refined() if grid.spec is not None else grid
    cert = _verify(families, constants, refined, slack, max_violations)
    if problems:
        cert.verdict = REJECTED
    cert.notes = notes + problems + [f"rate floor {floor:.6g}", "verified on refined grid" if refined is not grid else "verified on the estimation grid"]
    cert.estimates = est.to_dict()
    per_state = {}
    for shift, comps in est.per_state.items():
        try:
            c, p, _ = _certified_constants(comps, safety, gain_inflation, floor)
            per_state[shift] = {**c.to_dict(), "resolved": not p}
        except ValueError:
            continue
    cert.per_state = per_state
    return cert


def classify(system: SkewEvolutionSystem, families: CompatibleFamilySet, grid: SampleGrid,
             constants: SpectralConstants | None = None, slack: float = DEFAULT_SLACK,
             max_violations: int = 10) -> SpectralCertificate:
    """Verify ``constants`` on ``grid``; without them, use the sharp grid estimates.

    Sharp estimates hold on the grid by construction, so in that case the
    verdict hinges on the decay/growth rates clearing the resolvable floor.
    """
    n = len(families)
    _check_families(system, families, n)
    traj = Trajectories(families, grid)
    est = estimate_sharp_rates(system, families, grid, traj)
    problems: list[str] = []
    notes: list[str] = []
    if constants is None:
        floor = resolvable_rate(grid.max_dt)
        constants, problems, notes = _certified_constants(est.components, 1.0, 1.0, floor)
        notes.append("constants are the sharp grid estimates")
    cert = _verify(families, constants, grid, slack, max_violations, traj)
    if problems:
        cert.verdict = REJECTED
    cert.notes = notes + problems
    cert.estimates = est.to_dict()
    return cert


def rate_table(estimate: RateEstimate | dict) -> list[dict]:
    """Flat rows ``(state, component, role, rate, gain)`` for reports.

    Accepts a :class:`RateEstimate` or its ``to_dict()`` form.
    """
    data = estimate.to_dict() if isinstance(estimate, RateEstimate) else estimate
    states = [("uniform", data["uniform"])] + list(data["per_state"].items())
    return [
        {"state": state, "component": c["label"], "role": c["role"], "rate": c["rate"], "gain": c["gain"]}
        for state, comps in states for c in comps
    ]
