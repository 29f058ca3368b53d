import numpy as np
import pytest

from pauli_sep.coords import CoordSystem, Family

# one representative parameter choice per family
FAMILY_PARAMS = {
    Family.CARTESIAN: {},
    Family.CYLINDRICAL: {},
    Family.PARABOLIC_CYLINDRICAL: {},
    Family.ELLIPTIC_CYLINDRICAL: {"a": 1.3},
    Family.SPHERICAL: {},
    Family.PROLATE_SPHEROIDAL: {"a": 0.8},
    Family.OBLATE_SPHEROIDAL: {"a": 1.1},
    Family.PARABOLIC: {},
    Family.PARABOLOIDAL: {"a": 0.9},
    Family.ELLIPSOIDAL: {"a": 1.2, "k": 0.6},
    Family.CONICAL: {"k": 0.45},
}


def make_system(fam):
    return CoordSystem(fam, **FAMILY_PARAMS[fam])


ALL_SYSTEMS = [make_system(f) for f in Family]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def fd_gradient(fn, x, h=1e-5):
    """Central-difference gradient of a scalar or vector function at x."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


# --- acceptance reporting -------------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """record(number, title, ok, detail) logs one PASS/FAIL line, then asserts ok."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        _ACCEPTANCE.append((number, line))
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
