import numpy as np
import pytest

from fhn_levy.stable import StableParams, StablePath, gen_path


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def step_path(dt, t_start, t_end, jump_at=0.0, size=1.0):
    """One-channel path that is 0 up to ``jump_at`` and ``size`` afterwards."""
    n_neg = round(-t_start / dt)
    t = (np.arange(n_neg + round(t_end / dt) + 1) - n_neg) * dt
    raw = np.where(t > jump_at + 1e-12, size, 0.0)[None, :]
    return StablePath(raw, dt, n_neg)


def constant_path(dt, t_start, t_end, value=0.0, channels=1):
    n = round(-t_start / dt) + round(t_end / dt) + 1
    return StablePath(np.full((channels, n), value), dt, round(-t_start / dt))


@pytest.fixture
def levy_path():
    return gen_path(StableParams(1.5), 2, -60.0, 10.0, 0.01, seed=11)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
