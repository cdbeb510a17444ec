import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exp_integral
from skewevo.dynamics import (
    DiagonalCocycle,
    ExponentTerm,
    SkewEvolutionSystem,
    TimeDomainError,
    TranslationSemiflow,
    check_cocycle_axioms,
    check_semiflow_axioms,
    composition_residual_by_entry,
    evaluate_cocycle,
    evaluate_semiflow,
    evaluate_skew,
    norm1,
)
from skewevo.grid import GridPoint, SampleGrid, random_grid
from skewevo.profiles import BaseProfile, QuadratureError, StateProfile, shift_profile
from skewevo.systems import build_example_translation

E1 = math.exp(2 - math.exp(-1))


def test_semiflow_identity(ses, base):
    x = StateProfile(base, 2)
    assert evaluate_semiflow(ses, 3, 3, x) == x


def test_semiflow_translates(ses, base):
    assert evaluate_semiflow(ses, 5, 3, StateProfile(base, 2)) == StateProfile(base, 4)


def test_semiflow_composition_random_states(ses, base):
    rng = np.random.default_rng(11)
    for shift in rng.uniform(0, 20, 100):
        x = StateProfile(base, shift)
        assert evaluate_semiflow(ses, 7, 5, evaluate_semiflow(ses, 5, 3, x)) == evaluate_semiflow(ses, 7, 3, x)


@pytest.mark.parametrize("t,s", [(1, 2), (1, -1), (-2, -3)])
def test_time_domain_rejected(ses, f0, t, s):
    with pytest.raises(TimeDomainError):
        evaluate_semiflow(ses, t, s, f0)
    with pytest.raises(TimeDomainError):
        evaluate_cocycle(ses, t, s, f0)


def test_cocycle_identity(ued, f0):
    system, _ = ued
    for t in (0, 1.5, 30):
        np.testing.assert_array_equal(evaluate_cocycle(system, t, t, f0), np.eye(2))


def test_translation_cocycle_value(ses, f0):
    phi = evaluate_cocycle(ses, 1, 0, f0)
    assert phi.shape == (1, 1)
    assert phi[0, 0] == pytest.approx(E1, rel=1e-14)
    assert phi[0, 0] == pytest.approx(5.1155, abs=1e-3)  # quoted to 3 decimals only


def test_translation_cocycle_value_by_quadrature(base, f0):
    system = build_example_translation(base, 1, integration="quadrature")
    assert evaluate_cocycle(system, 1, 0, f0)[0, 0] == pytest.approx(E1, rel=1e-10)


def test_p3_entries_equal(base, f0):
    phi = evaluate_cocycle(build_example_translation(base, 3), 4.2, 1.0, f0)
    d = np.diag(phi)
    assert d[0] == d[1] == d[2]
    np.testing.assert_array_equal(phi, np.diag(d))


def test_skew_pair(base, f0):
    system = build_example_translation(base, 2)
    y, w = evaluate_skew(system, 1, 0, f0, [1, 1])
    assert y == StateProfile(base, 1)
    np.testing.assert_allclose(w, [E1, E1], rtol=1e-14)


def test_skew_identity_and_zero(ued, f0):
    system, _ = ued
    x = shift_profile(f0, 3)
    y, w = evaluate_skew(system, 2, 2, x, [0.3, -4])
    assert y == x
    np.testing.assert_array_equal(w, [0.3, -4])
    y, w = evaluate_skew(system, 6, 2, x, [0, 0])
    assert y == shift_profile(x, 4)
    np.testing.assert_array_equal(w, [0, 0])


def test_skew_dimension_mismatch(ued, f0):
    with pytest.raises(ValueError):
        evaluate_skew(ued[0], 1, 0, f0, [1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(-1e3, 1e3), t=st.floats(0, 10), v1=st.floats(-10, 10), v2=st.floats(-10, 10))
def test_homogeneity(alpha, t, v1, v2):
    base = BaseProfile()
    from skewevo.systems import build_example_dichotomy
    system, _ = build_example_dichotomy(base)
    x = StateProfile(base, 1)
    v = np.array([v1, v2])
    _, w = evaluate_skew(system, t, 0, x, v)
    _, wa = evaluate_skew(system, t, 0, x, alpha * v)
    assert norm1(wa) == pytest.approx(abs(alpha) * norm1(w), rel=1e-12, abs=1e-300)


def test_linearity(ued, f0):
    system, _ = ued
    phi = evaluate_cocycle(system, 3, 1, f0)
    v, w = np.array([1.0, -2.0]), np.array([0.5, 4.0])
    np.testing.assert_allclose(phi @ (3 * v + w), 3 * (phi @ v) + phi @ w)


def test_closed_form_entry_matches_oracle(ued, base):
    system, _ = ued
    for shift, s, t in [(0, 0, 1), (2.5, 1, 4), (10, 3, 23)]:
        J = exp_integral(shift, t - s)
        phi = evaluate_cocycle(system, t, s, StateProfile(base, shift))
        np.testing.assert_allclose(np.diag(phi), [math.exp(-2 * J), math.exp(3 * J)], rtol=1e-13)


def test_semiflow_axioms_translation(ses, base):
    report = check_semiflow_axioms(ses, random_grid(base, 1, 1000, seed=1), tol=0.0)
    assert report.passed
    assert report.residuals == {"identity": 0.0, "composition": 0.0}
    assert report.n_samples == 1000


class ForgetfulSemiflow:
    """phi(t, s, x) = x_t: ignores s, so the composition law breaks."""

    def __call__(self, t, s, x):
        return shift_profile(x, t)


def test_broken_semiflow_detected(base):
    system = SkewEvolutionSystem(ForgetfulSemiflow(), DiagonalCocycle((ExponentTerm(),)), 1)
    # hand check: phi(2,1,phi(1,0,f0)) = f3 but phi(2,0,f0) = f2
    x = StateProfile(base, 0)
    assert evaluate_semiflow(system, 2, 1, evaluate_semiflow(system, 1, 0, x)) == StateProfile(base, 3)
    grid = SampleGrid([GridPoint(0, 1, 2, x)], np.eye(1))
    report = check_semiflow_axioms(system, grid)
    assert not report.passed
    assert report.residuals["composition"] > 0
    assert report.worst["composition"]["s"] == 1


def test_identity_only_grid_passes(ses, base):
    points = [GridPoint(t, t, t, StateProfile(base, sh)) for t in (0, 1, 7) for sh in (0, 3)]
    grid = SampleGrid(points, np.eye(1))
    assert check_semiflow_axioms(ses, grid).passed
    report = check_cocycle_axioms(ses, grid)
    assert report.passed and report.max_residual == 0.0


def test_empty_grid_rejected(ses):
    with pytest.raises(ValueError):
        check_semiflow_axioms(ses, [])


@pytest.mark.parametrize("integration,tol", [("closed_form", 1e-9), ("quadrature", 1e-6)])
def test_cocycle_axioms_translation(base, integration, tol):
    system = build_example_translation(base, 2, integration=integration)
    report = check_cocycle_axioms(system, random_grid(base, 2, 300, seed=5), tol=tol)
    assert report.passed, report.residuals


def test_literal_origin_breaks_composition(base):
    cocycle = DiagonalCocycle((ExponentTerm(),), literal_t0=0.0)
    system = SkewEvolutionSystem(TranslationSemiflow(), cocycle, 1)
    report = check_cocycle_axioms(system, random_grid(base, 1, 50, seed=2), tol=1e-9)
    assert not report.passed


def test_residual_by_entry_localizes(uet, base):
    system, _ = uet
    entries = composition_residual_by_entry(system, random_grid(base, 3, 200, seed=9))
    assert entries.shape == (3, 3)
    assert entries[0, 0] < 1e-12 and entries[1, 1] < 1e-12
    assert entries[2, 2] > 1e-3
    off = entries[~np.eye(3, dtype=bool)]
    assert np.all(off == 0)


def test_nonfinite_quadrature_propagates():
    def bad_profile(tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau > 0.5, np.nan, 1.0)

    class Weird(StateProfile):
        def __call__(self, tau):
            return bad_profile(tau)

    x = Weird(BaseProfile("tabulated", nodes=(0, 1), values=(1.0, 1.0)), 0)
    cocycle = DiagonalCocycle((ExponentTerm(),), integration="quadrature")
    system = SkewEvolutionSystem(TranslationSemiflow(), cocycle, 1)
    with pytest.raises(QuadratureError):
        evaluate_cocycle(system, 1, 0, x)


def test_path_matches_pointwise(uet, base):
    system, _ = uet
    x = StateProfile(base, 0.5)
    taus = np.array([1.0, 1.5, 4.0, 9.0])
    path = system.cocycle_path(taus, 1.0, x)
    for k, tau in enumerate(taus):
        np.testing.assert_allclose(path[k], evaluate_cocycle(system, tau, 1.0, x), rtol=1e-13)
