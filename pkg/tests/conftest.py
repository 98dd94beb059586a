import numpy as np
import pytest
from scipy.io import wavfile


@pytest.fixture
def rng():
    return np.random.default_rng(20220415)


@pytest.fixture
def wav_path(tmp_path):
    """Factory: write ``data`` at ``rate`` and return the path."""

    def make(data, rate=16000, name="x.wav"):
        path = tmp_path / name
        wavfile.write(path, rate, data)
        return path

    return make


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = mark.args[0]
    state = _CRITERIA.setdefault(key, [mark.args[1], "PASS"])
    if report.failed:
        state[1] = "FAIL"
    elif report.skipped and report.when in ("setup", "call") and state[1] == "PASS":
        state[1] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        text, status = _CRITERIA[key]
        terminalreporter.write_line(f"[{status}] {key}: {text}")
