import pytest

from tooltrack import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT-compile once up front so timed tests measure the algorithms only
    kernels.warmup()
