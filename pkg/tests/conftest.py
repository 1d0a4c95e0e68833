import pytest

from reviewgen import _kernels
from reviewgen.fixture import fixture_corpus


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile everything up front so timed tests never pay JIT cost
    _kernels.warmup()


@pytest.fixture(scope="session")
def index():
    return fixture_corpus()
