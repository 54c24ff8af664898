import pytest

from rayforge import MapSpec, default_partition

# -W_k(1) for k = -1, 1, -2: repelling fixed points of -e^z (mpmath, 40 digits)
FIX_UP = 1.5339133197935746 + 4.375185153061898j
FIX_DOWN = 1.5339133197935746 - 4.375185153061898j
FIX_FAR = 2.401585104868003 - 10.77629951611507j
ATTRACTING_FIX = -0.5671432904097838 + 0j
# period-2 cycle of -e^z landed on by [| 0 1], mpmath findroot
PER2 = 0.7228163125685116 - 1.9292674963319385j
PER2_MULT_ABS = 4.244536494118046


@pytest.fixture(scope="session")
def exp_m1():
    return MapSpec.exp(-1)


@pytest.fixture(scope="session")
def part_m1(exp_m1):
    return default_partition(exp_m1)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
