import os

import pytest
from hypothesis import HealthCheck, settings

from vnwb.gallery import build_amplification, build_crossed_product, build_fixed_point, build_tlj

settings.register_profile(
    "vnwb",
    deadline=None,
    max_examples=int(os.environ.get("VNWB_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("vnwb")


@pytest.fixture(scope="session")
def amp():
    return build_amplification()


@pytest.fixture(scope="session")
def crossed():
    return build_crossed_product()


@pytest.fixture(scope="session")
def fixed():
    return build_fixed_point()


@pytest.fixture(scope="session")
def tlj4():
    return build_tlj(4, 2)


@pytest.fixture(scope="session", params=["amplification", "crossed-product", "fixed-point"])
def inclusion(request, amp, crossed, fixed):
    return {"amplification": amp, "crossed-product": crossed, "fixed-point": fixed}[request.param]


# ---------------------------------------------------------------- acceptance summary

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n = mark.args[0]
    ok, names = _criteria.get(n, (True, set()))
    names.add(item.name)
    _criteria[n] = (ok and rep.passed, names)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, names = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({len(names)} checks)")
