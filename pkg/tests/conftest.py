import numpy as np
import pytest

from bearxai.dataset import SpectrumSet
from bearxai.dsp import OrderGrid
from bearxai.nn import ModelArch, init_model


def eval_ready(arch, seed=0, dtype=np.float32):
    """Untrained model with randomized running statistics, usable in eval mode."""
    model = init_model(arch, seed=seed, dtype=dtype)
    rng = np.random.default_rng(seed + 1000)
    for s in model.bn_stats:
        s.running_mean = rng.normal(0, 0.2, size=s.running_mean.shape).astype(dtype)
        s.running_var = rng.uniform(0.5, 2.0, size=s.running_var.shape).astype(dtype)
        s.n_updates = 1
    return model


def random_set(n_per_class=6, n_bins=64, seed=0, id_offset=0):
    rng = np.random.default_rng(seed)
    n = 3 * n_per_class
    amps = rng.gamma(2.0, 0.05, size=(n, n_bins)).astype(np.float32)
    labels = np.repeat(np.arange(3), n_per_class)
    # a class-dependent bump so classes differ
    for i, c in enumerate(labels):
        amps[i, (n_bins // 8) * (1 + 2 * c)] += 1.0
    return SpectrumSet(amps, labels, np.arange(n) + id_offset, np.full(n, 25.0),
                       OrderGrid(n_bins=n_bins))


SMALL64 = ModelArch(channels=(4, 4, 4), kernels=(3, 3, 3), input_length=64)


@pytest.fixture
def small_model():
    return eval_ready(SMALL64, seed=7)


@pytest.fixture
def small_set():
    return random_set()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k[1:])):
        terminalreporter.write_line(mod.RESULTS[key])
