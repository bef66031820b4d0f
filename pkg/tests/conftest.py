import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from assembly_parser.grammar import english_reference_grammar, russian_reference_grammar  # noqa: E402

# lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def english():
    return english_reference_grammar()


@pytest.fixture(scope="session")
def russian():
    return russian_reference_grammar()


@pytest.fixture(scope="session")
def shared_topologies():
    """Sampled graphs reused across tests; weights always start fresh."""
    return {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
