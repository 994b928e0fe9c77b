import numpy as np
import pytest

from grouplpq.datagen import GenSpec, gen_problem
from grouplpq.model import GroupPartition, ProblemSpec


def random_problem(seed, M=6, N=8, n=2, alpha=0.7, p=2.0, q=0.5, r=2.0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((M, N))
    y = rng.standard_normal(M)
    return ProblemSpec(A, y, alpha, p, q, r, GroupPartition.uniform(N, n))


@pytest.fixture
def small_instance():
    return gen_problem(GenSpec(M=32, N=64, n=4, s=2, sigma=0.0, seed=3), alpha=0.01)


_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record a one-line verdict; all verdicts are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
