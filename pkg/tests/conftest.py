import pytest

from barrier_brw import RngStream

# Published critical values of the dominated (X) and dominating (Z) processes, m = 1..12.
PUBLISHED_X = [1.527864, 1.393724, 1.337647, 1.311711, 1.299210, 1.293070,
            1.290027, 1.288513, 1.287757, 1.287379, 1.287191, 1.287096]
PUBLISHED_Z = [1.123106, 1.198501, 1.240855, 1.263415, 1.275074, 1.281004,
            1.283995, 1.285496, 1.286249, 1.286625, 1.286814, 1.286907]


@pytest.fixture
def rng():
    return RngStream(12345, 0)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.acceptance_lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
