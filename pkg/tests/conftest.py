import numpy as np
import pytest

from mbqc_deutsch import cluster, qcore, tomography

_ACCEPTANCE: dict[str, tuple[str, str]] = {}
_NOTES: dict[str, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        _ACCEPTANCE[item.nodeid] = (label, status)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (label, status) in sorted(_ACCEPTANCE.items(), key=lambda kv: kv[1]):
        terminalreporter.write_line(f"{status}  {label}")
        for note in _NOTES.get(nodeid, []):
            terminalreporter.write_line(f"        {note}")


@pytest.fixture
def note(request):
    """Attach a line of measured values to this test's acceptance summary entry."""
    lines = _NOTES.setdefault(request.node.nodeid, [])
    return lines.append


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def phi_c():
    return cluster.build_phi_c()


@pytest.fixture(scope="session")
def phi_lin():
    return cluster.build_linear_cluster()


@pytest.fixture(scope="session")
def plan4():
    return tomography.settings_plan(4)


@pytest.fixture(scope="session")
def plan2():
    return tomography.settings_plan(2)


@pytest.fixture(scope="session")
def calibrated_p():
    return cluster.calibrate_white_noise(0.62)


@pytest.fixture(scope="session")
def calibrated_phi_c(phi_c, calibrated_p):
    return cluster.apply_noise(phi_c, cluster.NoiseSpec.white(calibrated_p))


def kron_projector(*kets):
    """Dense projector onto a product ket, built without the package's tensor()."""
    v = np.array([1.0 + 0j])
    for k in kets:
        v = np.kron(v, k)
    return np.outer(v, v.conj())


@pytest.fixture(scope="session")
def projector():
    return kron_projector


@pytest.fixture(scope="session")
def is_density():
    def check(rho, tol=1e-10):
        qcore.check_density(rho, tol)
        return True
    return check
