import numpy as np
import pytest
from hypothesis import strategies as st

from chasepp.model import SystemParams, Trace, validate_params

# the small hand-checkable parameter set used throughout the unit tests
SMALL = SystemParams(beta=100.0, c_m=10.0, c_o=1.0, L=100.0, eta=1.0, c_g=0.5, p_min=0.0, p_max=2.0)


def random_params(rng: np.random.Generator, beta_range=(0.0, 50.0)) -> SystemParams:
    """Valid parameters drawn so that both economic assumptions hold."""
    L = rng.uniform(1.0, 10.0)
    eta = rng.uniform(0.0, 2.0)
    c_g = rng.uniform(0.0, 1.0)
    c_o = eta * c_g + rng.uniform(0.0, 1.0)
    c_m = rng.uniform(0.0, 10.0)
    p_max = c_o + c_m / L - eta * c_g + rng.uniform(0.0, 2.0)
    p = SystemParams(rng.uniform(*beta_range), c_m, c_o, L, eta, c_g, 0.0, max(p_max, 0.0))
    validate_params(p)
    return p


def random_trace(rng: np.random.Generator, params: SystemParams, T: int) -> Trace:
    return Trace.from_arrays(
        rng.uniform(0, 1.5 * params.L, T),
        rng.uniform(0, 1.5 * params.eta * params.L + 1.0, T),
        rng.uniform(params.p_min, params.p_max, T),
    )


@st.composite
def params_st(draw, min_beta=0.0):
    L = draw(st.floats(1.0, 100.0))
    eta = draw(st.floats(0.0, 2.0))
    c_g = draw(st.floats(0.0, 1.0))
    c_o = eta * c_g + draw(st.floats(0.0, 1.0))
    c_m = draw(st.floats(0.01, 20.0))
    p_max = c_o + c_m / L - eta * c_g + draw(st.floats(0.01, 2.0))
    beta = draw(st.floats(min_beta, 200.0))
    return SystemParams(beta, c_m, c_o, L, eta, c_g, 0.0, p_max)


@st.composite
def trace_st(draw, params, max_T=12):
    T = draw(st.integers(1, max_T))
    unit = st.floats(0.0, 1.0)
    a = [draw(unit) * 1.5 * params.L for _ in range(T)]
    h = [draw(unit) * (1.5 * params.eta * params.L + 1.0) for _ in range(T)]
    p = [params.p_min + draw(unit) * (params.p_max - params.p_min) for _ in range(T)]
    return Trace.from_arrays(a, h, p)


# acceptance criteria summary ------------------------------------------------

_RESULTS: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else "FAIL"
    _RESULTS[n] = (title, status, detail)
    print(f"\ncriterion {n} [{status}] {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, status, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n} {status}: {title}" + (f" | {detail}" if detail else ""))
