import pytest

from hobsim.gear import GearSpec
from hobsim.kinematics import MachineSetup, build_schedule

ACCEPTANCE_LINES: list[str] = []


def report(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_setup():
    return MachineSetup()


@pytest.fixture(scope="session")
def finest_cell(default_setup):
    """Feed 1 mm/r, 2 deg: the finest cell of the feed/interval table."""
    return default_setup, build_schedule(default_setup)


@pytest.fixture(scope="session")
def toy_setup():
    # z=12 is undercut with a full-depth mating rack; a short addendum keeps the
    # involute window above the base circle
    gear = GearSpec(tooth_count=12, face_width=6.0, addendum_coeff=0.7)
    return MachineSetup(gear=gear, feed_per_rev=2.0, interval_angle=10.0)
