import numpy as np
import pytest
from scipy.integrate import solve_ivp

from workmoments.model import SystemParams

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    n = marker.args[0]
    _CRITERIA.setdefault(n, []).append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        failed = [name for name, ok in results if not ok]
        status = "PASS" if not failed else "FAIL"
        extra = f" (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n}: {status} [{len(results)} checks]{extra}")


@pytest.fixture(scope="session")
def default_params():
    return SystemParams()


def unitary_transition_probability(p, rtol=1e-12, atol=1e-13):
    """|<e|U(tau)|g>|**2 from an adaptive Runge-Kutta solve of the Schrodinger equation."""

    def rhs(t, y):
        psi = y[:2] + 1j * y[2:]
        lam = p.lambda0 * np.sin(p.drive_omega * t)
        h = np.array([[0.0, lam], [lam, p.omega0]])
        d = -1j * (h @ psi)
        return np.concatenate([d.real, d.imag])

    sol = solve_ivp(rhs, (0.0, p.tau), [1.0, 0.0, 0.0, 0.0], method="DOP853", rtol=rtol, atol=atol)
    psi = sol.y[:2, -1] + 1j * sol.y[2:, -1]
    return abs(psi[1]) ** 2


@pytest.fixture(scope="session")
def p_ge_default(default_params):
    return unitary_transition_probability(default_params.replace(gamma_down=0.0))
