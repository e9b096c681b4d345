import numpy as np
import pytest

from nsgframes import _backend
from nsgframes.adapt import detect_onsets, scale_frame_schedule
from nsgframes.frame import make_nsgf, make_stationary_gabor
from nsgframes.signal_io import generate, melody_spec

MELODY_LENGTH = 262144


@pytest.fixture(scope="session")
def melody():
    return generate(melody_spec(MELODY_LENGTH))


@pytest.fixture(scope="session")
def melody_onsets(melody):
    return detect_onsets(melody)


@pytest.fixture(scope="session")
def gabor_1536(melody):
    return make_stationary_gabor(melody.length, 1024, 1536)


@pytest.fixture(scope="session")
def scale_frame(melody, melody_onsets):
    return make_nsgf(scale_frame_schedule(melody_onsets, melody.length), melody.length)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    """Run a test once per available kernel backend."""
    previous = _backend.BACKEND
    _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(previous)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
