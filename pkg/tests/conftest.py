import functools

import pytest

from fdrboot.simulation import get_scenario, run_monte_carlo

SCALED_RUNS = 500
MASTER_SEED = 20240
BENCH_METHODS = ("bh", "storey", "ddb", "ddba", "single", "yb")


@functools.lru_cache(maxsize=None)
def scenario_report(scenario_id, runs=SCALED_RUNS, seed=MASTER_SEED):
    return run_monte_carlo(get_scenario(scenario_id), BENCH_METHODS, runs=runs, q=0.05, master_seed=seed)


@pytest.fixture(scope="session")
def bench():
    return scenario_report


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
