import hypothesis
import numpy as np
import pytest

import imuon.configuration.config as config

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile("fast")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet_logs(tmp_path, monkeypatch):
    """Send session log files to a temporary directory and keep the terminal clean"""
    monkeypatch.setattr(config, "LOG_DIRECTORY", str(tmp_path / "logs"))
    monkeypatch.setattr(config, "LOG_TO_TERMINAL", False)
    return tmp_path


@pytest.fixture(autouse=True)
def restore_tunables():
    before = config.snapshot()
    yield
    config.apply_overrides(before)
