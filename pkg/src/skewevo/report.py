"""Running a config end to end, and the JSON report / CSV plot data it produces."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .classifier import SpectralConstants, certify, classify, rate_table, verify_dichotomy, verify_trichotomy
from .config import AnalysisConfig
from .criteria import check_growth_criterion, check_integral_criterion, derive_trichotomy_constants
from .dynamics import SkewEvolutionSystem, check_cocycle_axioms, check_semiflow_axioms, evaluate_skew, norm1
from .grid import SampleGrid, build_grid, random_grid
from .projectors import CompatibleFamilySet, check_family_algebra, check_intertwining, coordinate_families, matrix_families
from .systems import build_custom_diagonal, build_example_dichotomy, build_example_translation, build_example_trichotomy

log = logging.getLogger(__name__)

PLOT_HEADER = ("t", "s", "t0", "x_shift", "component", "norm", "log_norm")


def to_jsonable(obj: Any) -> Any:
    """Plain JSON data; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class AnalysisReport:
    config: dict
    command: str
    passed: bool
    verdict: str
    axioms: dict = field(default_factory=dict)
    result: dict | None = None
    derived: dict | None = None
    rate_table: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("config", "axioms", "result", "derived", "rate_table", "violations", "metadata"):
            setattr(self, name, to_jsonable(getattr(self, name)))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))


def build_system(cfg: AnalysisConfig) -> tuple[SkewEvolutionSystem, CompatibleFamilySet | None]:
    spec = cfg.system
    common = {"integration": spec.integration, "panels_per_unit": spec.panels_per_unit}
    if spec.example == "ses":
        system, families = build_example_translation(spec.profile, spec.p, **common), None
    elif spec.example == "ued":
        system, families = build_example_dichotomy(spec.profile, exponents=spec.exponents, **common)
    elif spec.example == "uet":
        system, families = build_example_trichotomy(spec.profile, spec.mu, literal_t0=spec.literal_t0, **common)
    else:
        system, families = build_custom_diagonal(spec.profile, spec.exponents, **common)
    proj = cfg.projectors
    if proj is not None:
        if proj.kind == "coordinate":
            families = coordinate_families(system, proj.partition)
        else:
            families = matrix_families(system, proj.matrices)
    return system, families


def _metadata(cfg: AnalysisConfig) -> dict:
    # no timestamps or timings: reports must be byte-identical across runs
    return {"package": "skewevo", "version": __version__, "numpy": np.__version__,
            "python": platform.python_version(), "seed": cfg.seed}


def run_axioms(cfg: AnalysisConfig, system: SkewEvolutionSystem, families: CompatibleFamilySet | None) -> dict:
    samples = random_grid(cfg.system.profile, system.dim, cfg.n_axiom_samples, seed=cfg.seed)
    out = {
        "semiflow": check_semiflow_axioms(system, samples, tol=0.0).to_dict(),
        "cocycle": check_cocycle_axioms(system, samples, tol=cfg.cocycle_tol).to_dict(),
    }
    if families is not None:
        out["family_algebra"] = check_family_algebra(families, samples).to_dict()
        out["intertwining"] = check_intertwining(families, samples, tol=cfg.cocycle_tol).to_dict()
    return out


def _verify(system, families, constants, grid):
    fn = verify_dichotomy if len(families) == 2 else verify_trichotomy
    return fn(system, families, constants, grid)


def run_config(cfg: AnalysisConfig, write: bool = True) -> AnalysisReport:
    """Dispatch ``cfg.command``; optionally write the report and plot data to ``cfg.output``."""
    system, families = build_system(cfg)
    log.info("system %s (dim %d), command %s", system.name, system.dim, cfg.command)
    axioms = run_axioms(cfg, system, families)
    grid = build_grid(cfg.grid, cfg.system.profile, system.dim, seed=cfg.seed)
    result = derived = None
    table: list = []
    violations: list = []

    if cfg.command == "verify-axioms":
        passed = all(r["passed"] for r in axioms.values())
        verdict = "axioms_hold" if passed else "axioms_violated"
    elif cfg.command in ("classify", "certify"):
        if cfg.command == "certify":
            cert = certify(system, families, grid)
        else:
            cert = classify(system, families, grid, cfg.constants)
        result = cert.to_dict()
        table = rate_table(cert.estimates) if cert.estimates else []
        violations = result["violations"]
        passed, verdict = cert.passed, cert.verdict
    elif cfg.command == "criterion-3-1":
        crit = cfg.criterion
        report = check_growth_criterion(system, families, crit.function, grid, delta=crit.delta,
                                        min_horizon=crit.min_horizon)
        result = report.to_dict()
        violations = result["witnesses"] if not report.passed else []
        passed = report.passed and report.extracted is not None
        if passed:
            N, nu = report.extracted["N"], report.extracted["nu"]
            cert = _verify(system, families, SpectralConstants((N, N), (nu, nu)), grid)
            derived = cert.to_dict()
            passed = cert.passed
        verdict = "passed" if passed else "failed"
    else:
        crit = cfg.criterion
        report = check_integral_criterion(system, families, crit.function, grid,
                                          panels_per_unit=crit.panels_per_unit, max_gain=crit.max_gain)
        passed = report.passed
        if passed:
            constants = derive_trichotomy_constants(report)
            cert = _verify(system, families, constants, grid)
            derived = cert.to_dict()
            passed = cert.passed
        result = report.to_dict()
        violations = result["witnesses"] if not report.passed else []
        verdict = "passed" if passed else "failed"

    out = AnalysisReport(config=cfg.to_dict(), command=cfg.command, passed=passed, verdict=verdict,
                         axioms=axioms, result=result, derived=derived, rate_table=table,
                         violations=violations, metadata=_metadata(cfg))
    if write:
        if cfg.output.get("report"):
            Path(cfg.output["report"]).write_text(out.to_json())
        if cfg.output.get("plot_data") and families is not None:
            write_plot_data(cfg.output["plot_data"], system, families, grid)
    return out


def plot_rows(system: SkewEvolutionSystem, families: CompatibleFamilySet, grid: SampleGrid) -> list[tuple]:
    """``|Phi(t,t0,x) P_k(x) 1|`` at every grid point, skipping components with ``P_k(x) 1 = 0``."""
    ones = np.ones(system.dim)
    rows = []
    for p in grid.points:
        for fam in families.families:
            v = fam(p.x) @ ones
            if norm1(v) == 0.0:
                continue
            _, w = evaluate_skew(system, p.t, p.t0, p.x, v)
            norm = float(norm1(w))
            rows.append((p.t, p.s, p.t0, p.x_shift, fam.label, norm, math.log(norm) if norm > 0 else -math.inf))
    return rows


def plot_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLOT_HEADER)
    for t, s, t0, shift, k, norm, log_norm in rows:
        writer.writerow([repr(float(t)), repr(float(s)), repr(float(t0)), repr(float(shift)), k,
                         repr(norm), repr(log_norm)])
    return buf.getvalue()


def write_plot_data(path, system, families, grid) -> int:
    rows = plot_rows(system, families, grid)
    Path(path).write_text(plot_csv(rows))
    return len(rows)
