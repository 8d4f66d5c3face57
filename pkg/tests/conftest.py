import pytest

from holonic.games import PublicGoodGame, PublicGoodParams, decoupled_game
from holonic.solvers import SolverConfig

BASELINE = PublicGoodParams(D=3.0, kappa=0.2, gamma=0.1, rho=0.0)
COUPLED = PublicGoodParams(D=3.0, kappa=0.2, gamma=0.1, rho=0.5)


@pytest.fixture
def baseline():
    return PublicGoodGame(3, 5, BASELINE)


@pytest.fixture
def coupled():
    return PublicGoodGame(3, 5, COUPLED)


@pytest.fixture
def decoupled():
    return decoupled_game(3, 5, 3.0, 0.2)


@pytest.fixture
def solver():
    return SolverConfig()


# acceptance report: one line per criterion, printed at the end of the session
_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
