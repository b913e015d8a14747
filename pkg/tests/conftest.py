import pytest

from ancilla_qsl.model import ModelConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def cfg_factory():
    def make(topology="id", gamma0=1.0, J=1.0, lam=2.0, tau=3.0):
        return ModelConfig.build(topology, gamma0, J, lam, tau)
    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
