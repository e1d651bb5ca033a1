import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fsstab.core import Dataset
from fsstab.ingest import SyntheticSpec, generate_synthetic

settings.register_profile(
    "fsstab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fsstab")


@pytest.fixture(scope="session")
def small_synth():
    """300 x 12 with 3 planted features (coefficient 1.5) and 9 noise columns."""
    d, planted = generate_synthetic(
        SyntheticSpec(n_instances=300, n_informative=3, n_noise=9, coefficients=[1.5, 1.5, 1.5], seed=11)
    )
    return d, planted


@pytest.fixture(scope="session")
def medium_synth():
    """500 x 20 with 4 planted features."""
    d, planted = generate_synthetic(SyntheticSpec(n_instances=500, n_informative=4, n_noise=16, seed=5))
    return d, planted


def make_dataset(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"f{i}" for i in range(X.shape[1])]
    return Dataset(tuple(names), X, np.asarray(y))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    prev = item.config._acceptance.get(number)
    if prev is None or rep.failed:
        item.config._acceptance[number] = (title, rep.passed, rep.duration, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, duration, detail = results[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title} ({duration:.1f}s) {detail}".rstrip())
