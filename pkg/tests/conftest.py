import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fgboltz import AngularKernel, KernelSpec, SpectralConfig, build_weight_table, maxwell_kernel  # noqa: E402
from fgboltz.spectral import truncation_from_support  # noqa: E402

R_STD, L_STD = truncation_from_support(1.0)

_ACCEPTANCE_LINES = []


def report_criterion(name: str, passed: bool, detail: str) -> None:
    """Record a one-line acceptance verdict for the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def std_config():
    def make(N):
        return SpectralConfig(2, N, L_STD, R_STD)

    return make


_TABLES = {}


def cached_table(N, kernel=None, L=L_STD, R=R_STD):
    kernel = kernel or maxwell_kernel()
    key = (N, kernel.fingerprint, L, R)
    if key not in _TABLES:
        _TABLES[key] = build_weight_table(SpectralConfig(2, N, L, R), kernel)
    return _TABLES[key]


@pytest.fixture(scope="session")
def table_factory():
    return cached_table


KERNELS = {
    "maxwell": maxwell_kernel(),
    "hard1_linear": KernelSpec("hard", 1.0, AngularKernel.linear(0.2, 0.1)),
    "soft_linear": KernelSpec("modified_soft", -0.5, AngularKernel.linear(0.15, -0.1)),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
