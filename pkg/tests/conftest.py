from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "qmsdecomp" / "fixtures"

SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SM = np.array([[0, 1], [0, 0]], dtype=complex)
E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)
E22 = np.array([[0, 0], [0, 1]], dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- acceptance summary: one line per criterion --------------------------------

ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    if call.when == "call" and item.name.startswith("test_criterion_"):
        n = int(item.name.split("_")[2])
        detail = getattr(item.function, "detail", "")
        ACCEPTANCE[n] = ("PASS" if call.excinfo is None else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}" + (f"  ({detail})" if detail else ""))
