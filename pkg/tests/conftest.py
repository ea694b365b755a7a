import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

from triquad.config import Config  # noqa: E402
from triquad.theorems import PairContext  # noqa: E402


@pytest.fixture
def config():
    return Config()


@pytest.fixture
def cache_path(tmp_path):
    return str(tmp_path / 'cache' / 'units.jsonl')


@pytest.fixture(scope='session')
def pair_5_13():
    return PairContext(5, 13)


@pytest.fixture(scope='session')
def ctx(pair_5_13):
    return pair_5_13.ctx
