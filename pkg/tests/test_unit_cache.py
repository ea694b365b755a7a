import json
import os

from triquad.quadratic import clear_memo, fundamental_unit
from triquad.unit_cache import UnitCache


def test_put_and_reload(cache_path):
    cache = UnitCache(cache_path)
    assert cache.put(fundamental_unit(34))
    assert not cache.put(fundamental_unit(34))
    reloaded = UnitCache(cache_path)
    assert 34 in reloaded
    assert reloaded.get(34) == fundamental_unit(34)


def test_header_written(cache_path):
    UnitCache(cache_path)
    with open(cache_path) as f:
        header = json.loads(f.readline())
    assert header['schema'] == 'quadunit'
    assert header['version'] == 1


def test_bad_records_are_skipped(cache_path):
    cache = UnitCache(cache_path)
    with open(cache_path, 'a') as f:
        f.write('not json\n')
        f.write(json.dumps({'d': '34', 'a': '36', 'b': '6', 'denom': '1', 'norm': '1'}) + '\n')
        f.write(json.dumps(fundamental_unit(82).to_dict()) + '\n')
    reloaded = UnitCache(cache_path)
    assert len(cache) == 0
    assert len(reloaded) == 1
    assert 82 in reloaded


def test_headerless_file_is_migrated(cache_path):
    os.makedirs(os.path.dirname(cache_path))
    with open(cache_path, 'w') as f:
        f.write(json.dumps(fundamental_unit(2).to_dict()) + '\n')
    cache = UnitCache(cache_path)
    assert 2 in cache
    with open(cache_path) as f:
        assert json.loads(f.readline())['schema'] == 'quadunit'


def test_read_only_cache_does_not_write(cache_path):
    cache = UnitCache(cache_path, read_only=True)
    cache.put(fundamental_unit(34))
    assert 34 in cache
    assert not os.path.exists(cache_path)


def test_fundamental_unit_fills_cache(cache_path):
    clear_memo()
    cache = UnitCache(cache_path)
    unit = fundamental_unit(2 * 5 * 29, cache)
    assert UnitCache(cache_path).get(290) == unit


def test_power_of_the_unit_is_rejected(cache_path):
    # eps_2^2 = 3 + 2 sqrt(2) satisfies the Pell identity but is not fundamental
    cache = UnitCache(cache_path)
    with open(cache_path, 'a') as f:
        f.write(json.dumps({'d': '2', 'a': '3', 'b': '2', 'denom': '1', 'norm': '1'}) + '\n')
    reloaded = UnitCache(cache_path)
    assert 2 not in reloaded
    clear_memo()
    unit = fundamental_unit(2, reloaded)
    assert (unit.a, unit.b) == (1, 1)
    assert UnitCache(cache_path).get(2) == unit
    assert len(cache) == 0
