import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from driftspec.hamiltonian import build_heisenberg_1d

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# dense numpy.linalg.eigvalsh of the literal 4-site model (Jx=Jy=0.5, Jz=0.6, h=1)
HEISENBERG4_SPECTRUM = np.array([
    -2.4, -1.956786990952, -1.135571210633, -1.06471536088, -0.554304071938, -0.364428789367,
    -0.177130746673, 0.050804404556, 0.36864900869, 0.394615856219, 0.456786990952, 0.6,
    1.00738357844, 1.13135099131, 1.677130746673, 1.966215593603,
])


@pytest.fixture(scope="session")
def heisenberg4():
    return build_heisenberg_1d(4, 0.5, 0.5, 0.6, 1.0)


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# one summary line per acceptance criterion

_CRITERIA: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_a"):
        return
    label = name[len("test_"):].split("_", 1)[0].upper()
    detail = dict(report.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    _CRITERIA.setdefault(label, []).append(f"{label:<4} {status}  {name}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s[1:])):
        for line in _CRITERIA[label]:
            terminalreporter.write_line(line)
