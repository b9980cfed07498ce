import numpy as np
import pytest

from eqhomotopy.ncp import NcpProblem


def scalar_problem(f, df=None, nonnegative=False):
    """1-d NCP from scalar callables."""
    jac = None if df is None else (lambda x: np.array([[df(x[0])]]))
    kwargs = {"domain_guard": (lambda x: x >= 0)} if nonnegative else {}
    return NcpProblem(1, lambda x: np.array([f(x[0])]), jac, **kwargs)


def affine_problem(M, q):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.asarray(q, dtype=float)
    return NcpProblem(q.size, lambda x: M @ x + q, lambda x: M, domain_guard=lambda x: True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
