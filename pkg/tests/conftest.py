import sys

import numpy as np
import pytest

from rcvar import _kernels


@pytest.fixture(params=sorted(_kernels.KERNELS))
def kernel(request, monkeypatch):
    """Run a test once per available coordinate-descent backend."""
    monkeypatch.setattr(_kernels, "cd_weighted_lasso", _kernels.KERNELS[request.param])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
