import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from lrle import catalog as cat  # noqa: E402
from lrle.criterion import search_witness  # noqa: E402

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def example2():
    return cat.make_example2()


@pytest.fixture(scope="session")
def ghz():
    return cat.make_ghz()


@pytest.fixture(scope="session")
def product():
    return cat.make_product()


@pytest.fixture(scope="session")
def example1():
    return cat.make_example1_random(q=2, n=2, d=2, seed=0)


@pytest.fixture(scope="session")
def d3_block():
    return cat.make_d3_block_random(seed=0)


@pytest.fixture(scope="session")
def aklt():
    return cat.make_aklt()


@pytest.fixture(scope="session")
def catalog_entries():
    return {name: cat.get_entry(name) for name in cat.CATALOG}


_search_cache: dict = {}


@pytest.fixture(scope="session")
def searched():
    """Memoised ``search_witness`` keyed by catalog name (default settings)."""

    def get(name):
        if name not in _search_cache:
            _search_cache[name] = search_witness(cat.get_entry(name).tensor)
        return _search_cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

_acceptance: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    _acceptance[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        status, title, detail = _acceptance[n]
        line = f"criterion {n:2d} {status}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a short measurement summary to the acceptance line."""

    def add(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return add
