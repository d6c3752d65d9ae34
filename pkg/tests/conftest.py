import dataclasses
import time

import numpy as np
import pytest

from quadpath.config import parse_config, resolve_path
from quadpath.simulator import run_scenario

# Lines printed after the test session by test_acceptance.py.
CRITERIA_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile (or load from cache) the numba kernels once, outside any timed test."""
    cfg = parse_config(resolve_path("helix_state"))
    run_scenario(dataclasses.replace(cfg, t_end=0.01))
    run_scenario(dataclasses.replace(cfg, t_end=0.01, controller_mode="output"))


_runs = {}


@pytest.fixture(scope="session")
def scenario_run():
    """Memoised ``run_scenario`` keyed by bundled scenario name and overrides.

    Returns ``(cfg, log, metrics, seconds)``; ``seconds`` is the wall time of
    the one actual run.
    """

    def run(name, **overrides):
        key = (name, tuple(sorted(overrides.items())))
        if key not in _runs:
            cfg = dataclasses.replace(parse_config(resolve_path(name)), **overrides)
            start = time.perf_counter()
            log, metrics = run_scenario(cfg)
            _runs[key] = (cfg, log, metrics, time.perf_counter() - start)
        return _runs[key]

    return run


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
