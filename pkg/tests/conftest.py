import numpy as np
import pytest

from lhvcompat import states

TABLE_SPECS = [(5, 1), (5, 2), (7, 1), (7, 2), (7, 3)]


@pytest.fixture(scope="session")
def rho52():
    return states.dicke_mixture(states.DickeSpec(5, 2))


@pytest.fixture(scope="session")
def tensor52(rho52):
    from lhvcompat.correlations import full_tensor

    return full_tensor(rho52)


@pytest.fixture(scope="session")
def ineq5():
    from lhvcompat.bell import build_ineq5

    return build_ineq5()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density_matrix(rng, n, rank=None):
    dim = 2**n
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unit_vectors(rng, shape):
    v = rng.normal(size=tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# --------------------------------------------------------------------------- #
# One summary line per acceptance criterion                                   #
# --------------------------------------------------------------------------- #

_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        outcome = report.outcome
        # any failing test of a criterion marks the whole criterion as failed
        if _ACCEPTANCE.get(name) not in ("failed",):
            _ACCEPTANCE[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{outcome.upper():8s} {name}")


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", help="run the long extended visibility regressions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="extended regression; pass --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
