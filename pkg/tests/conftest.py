from collections import defaultdict

import pytest

from skewevo.grid import GridSpec, build_grid
from skewevo.profiles import BaseProfile, StateProfile
from skewevo.systems import build_example_dichotomy, build_example_translation, build_example_trichotomy

CRITERIA = {
    1: "axiom suite (s1/s2 exact, c1/c2 within tolerance, < 5 s)",
    2: "dichotomy example: reference constants (1,1,2,3) verify, certify nu1 >= 1.9, nu2 >= 2.85",
    3: "trichotomy example: per-state and uniform constants verify",
    4: "empty center: P3 = 0 trichotomy and dichotomy verdicts agree on 20 configs",
    5: "growth criterion round trip (sufficiency and necessity)",
    6: "integral criterion chain (quadrature oracle, derived constants verify)",
    7: "negative controls rejected",
    8: "determinism: byte-identical reports",
}

_outcomes: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[crit].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if not results:
            continue
        ok = all(r == "passed" for r in results)
        n_pass = sum(r == "passed" for r in results)
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if ok else 'FAIL'} ({n_pass}/{len(results)}) {CRITERIA[n]}"
        )


@pytest.fixture
def base():
    """f(u) = 1 + exp(-u): l = 1, f(0) = 2."""
    return BaseProfile("exp_plus_const", a=1.0, b=1.0, l=1.0)


@pytest.fixture
def f0(base):
    return StateProfile(base, 0)


@pytest.fixture
def ses(base):
    return build_example_translation(base, p=1)


@pytest.fixture
def ued(base):
    return build_example_dichotomy(base)


@pytest.fixture
def uet(base):
    return build_example_trichotomy(base, mu=3.0)


@pytest.fixture
def default_grid(base):
    def make(dim, spec=None, seed=42):
        return build_grid(spec or GridSpec(), base, dim, seed=seed)
    return make

