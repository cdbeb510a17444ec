"""Ready-made skew-evolution semiflows over the translation semiflow.

All systems here have diagonal cocycles built from the shared integral
``J = int_s^t x(tau - s) dtau`` of the state profile.
"""

from __future__ import annotations

from typing import Sequence

from .dynamics import DiagonalCocycle, ExponentTerm, SkewEvolutionSystem, TranslationSemiflow
from .profiles import DEFAULT_PANELS_PER_UNIT, BaseProfile
from .projectors import CompatibleFamilySet, coordinate_families

DEFAULT_PROFILE = BaseProfile("exp_plus_const", a=1.0, b=1.0, l=1.0)


def _system(base: BaseProfile, terms, name: str, integration: str, panels_per_unit: int,
            literal_t0: float | None = None, **meta) -> SkewEvolutionSystem:
    if not isinstance(base, BaseProfile):
        raise TypeError("base must be a BaseProfile")
    cocycle = DiagonalCocycle(tuple(terms), integration, panels_per_unit, literal_t0)
    return SkewEvolutionSystem(
        semiflow=TranslationSemiflow(),
        cocycle=cocycle,
        dim=cocycle.dim,
        name=name,
        meta={"profile": base.to_dict(), "integration": integration, **meta},
    )


def build_example_translation(base: BaseProfile = DEFAULT_PROFILE, p: int = 1,
                              integration: str = "closed_form",
                              panels_per_unit: int = DEFAULT_PANELS_PER_UNIT) -> SkewEvolutionSystem:
    """``Phi(t,s,x) = exp(J) I_p`` over the translation semiflow."""
    if p < 1:
        raise ValueError("dimension p must be >= 1")
    return _system(base, [ExponentTerm(1.0)] * p, "ses", integration, panels_per_unit)


def build_example_dichotomy(base: BaseProfile = DEFAULT_PROFILE, integration: str = "closed_form",
                            panels_per_unit: int = DEFAULT_PANELS_PER_UNIT,
                            exponents: Sequence[float] = (-2.0, 3.0)) -> tuple[SkewEvolutionSystem, CompatibleFamilySet]:
    """``Phi(t,s,x) v = (v1 exp(-2J), v2 exp(3J))`` with coordinate projectors."""
    terms = [ExponentTerm(float(c)) for c in exponents]
    if len(terms) != 2:
        raise ValueError("the dichotomy example has exactly two exponents")
    system = _system(base, terms, "ued", integration, panels_per_unit, exponents=list(map(float, exponents)))
    return system, coordinate_families(system, [[0], [1]])


def build_example_trichotomy(base: BaseProfile = DEFAULT_PROFILE, mu: float = 3.0,
                             integration: str = "closed_form",
                             panels_per_unit: int = DEFAULT_PANELS_PER_UNIT,
                             literal_t0: bool = False) -> tuple[SkewEvolutionSystem, CompatibleFamilySet]:
    """Diagonal entries ``exp(-mu d + J)``, ``exp(J)``, ``exp(-d x(0) + J)`` with ``d = t - s``.

    ``literal_t0=True`` measures ``d`` and ``J`` from the fixed origin 0 instead of
    ``s``; that variant breaks the cocycle law.
    """
    f0 = float(base(0.0))
    if not mu > f0:
        raise ValueError(f"mu must exceed f(0) = {f0:g}, got {mu:g}")
    terms = [ExponentTerm(1.0, drift=-mu), ExponentTerm(1.0), ExponentTerm(1.0, anchor=-1.0)]
    system = _system(base, terms, "uet", integration, panels_per_unit,
                     literal_t0=0.0 if literal_t0 else None, mu=float(mu), literal=bool(literal_t0))
    return system, coordinate_families(system, [[0], [1], [2]])


def build_custom_diagonal(base: BaseProfile, exponents: Sequence[float],
                          partition: Sequence[Sequence[int]] | None = None,
                          integration: str = "closed_form",
                          panels_per_unit: int = DEFAULT_PANELS_PER_UNIT) -> tuple[SkewEvolutionSystem, CompatibleFamilySet | None]:
    """``Phi(t,s,x) = diag(exp(c_i J))`` for the given coefficients ``c_i``."""
    if not exponents:
        raise ValueError("need at least one exponent")
    terms = [ExponentTerm(float(c)) for c in exponents]
    system = _system(base, terms, "custom_diagonal", integration, panels_per_unit,
                     exponents=list(map(float, exponents)))
    families = coordinate_families(system, partition) if partition is not None else None
    return system, families
