from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from activesteer.measurement import PairConfig, WeakLimitWarning, enumerate_configs
from activesteer.quantum_state import StateVector

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=float):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_state(n: int, seed: int) -> StateVector:
    return StateVector.random(n, np.random.default_rng(seed))


def make_pc(pair, k1, k2, couplings=(1.0, 1.0), dt=0.2) -> PairConfig:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakLimitWarning)
        return PairConfig(tuple(pair), (k1, k2), tuple(couplings), dt)


def random_pc(rng: np.random.Generator, n: int, dt: float = 0.2, allow_beta_y: bool = True, adjacent: bool = False):
    cfgs = enumerate_configs(allow_beta_y)
    if adjacent:
        a = int(rng.integers(n)) + 1
        pair = (a, a % n + 1)
    else:
        a, b = rng.choice(n, size=2, replace=False) + 1
        pair = (int(a), int(b))
    i, j = rng.integers(len(cfgs), size=2)
    return make_pc(pair, cfgs[i], cfgs[j], dt=dt)
