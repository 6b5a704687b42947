import json
from dataclasses import dataclass

import numpy as np
import pytest

from simoid.main import main
from simoid.models import ChannelVector


@dataclass
class CliResult:
    code: int
    out: str
    err: str


@pytest.fixture
def rng():
    """Fixed generator so every test is reproducible"""
    return np.random.default_rng(20240917)


@pytest.fixture
def fixture_channel():
    """h_0 = (3, 3), h_1 = (1, 1): margin 3 at delta = 1"""
    return ChannelVector(np.array([[3.0, 3.0], [1.0, 1.0]]))


@pytest.fixture
def cancel_channel():
    """h_0 = (1, -1), h_1 = (2, 2): v'A cancels, margin 0"""
    return ChannelVector(np.array([[1.0, -1.0], [2.0, 2.0]]))


def write_channel_file(path, taps):
    taps = [list(map(float, tap)) for tap in taps]
    path.write_text(json.dumps({"M": len(taps[0]), "L": len(taps) - 1, "taps": taps}))
    return str(path)


@pytest.fixture
def channel_file(tmp_path):
    """Factory writing a channel JSON document and returning its path"""
    def _write(taps, name="channel.json"):
        return write_channel_file(tmp_path / name, taps)
    return _write


@pytest.fixture
def run_cli(capsys):
    """Invoke the command line in-process and capture exit code, stdout and stderr"""
    def _run(*argv):
        code = main([str(arg) for arg in argv])
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)
    return _run
