import pytest

from qpatrec.pattern_model import build_database

WORKED_INSTANCE = {
    "payload_bits": 4,
    "feature_bits": 4,
    "distance_bits": 4,
    "alpha": 0,
    "mode": "idealized",
    "patterns": [
        {"payload": 5, "class": "target"},
        {"payload": 9, "class": "target"},
        {"payload": 12, "class": "target"},
        {"payload": 3, "class": "spurious"},
        {"payload": 6, "class": "spurious"},
        {"payload": 14, "class": "spurious"},
    ],
    "codebook": [{"feature": 5}, {"feature": 12}],
}

_acceptance_lines: list[str] = []


@pytest.fixture
def db():
    """The worked 8-record database: targets 5, 9, 12; spurious 3, 6, 14."""
    return build_database([5, 9, 12], [3, 6, 14], 4, 4, 4)


@pytest.fixture
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
