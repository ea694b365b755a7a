import json
import os

import pytest

from triquad.units import E, QUADRATIC_BASE
from triquad.verify import (
    TABLE1, VerificationSystem, check_unit, prime_pairs, regulator, saturation_index, verify_index,
)


def _base_elements(pc):
    return [pc.realizer.realize(w) for w in QUADRATIC_BASE]


def test_regulator_of_independent_units(pair_5_13):
    value = regulator(_base_elements(pair_5_13), 256)
    assert value > 0


def test_regulator_of_dependent_units(pair_5_13):
    gens = _base_elements(pair_5_13)
    gens[6] = gens[0]
    assert regulator(gens, 256).contains(0)


def test_regulator_ignores_sign(pair_5_13):
    gens = _base_elements(pair_5_13)
    flipped = [-gens[0]] + gens[1:]
    assert regulator(gens, 256).overlaps(regulator(flipped, 256))


def test_verify_index_of_quadratic_units(pair_5_13):
    assert verify_index(list(QUADRATIC_BASE), pair_5_13) == 1


def test_check_unit(pair_5_13):
    assert check_unit(pair_5_13.realizer.realize(E('2')))
    assert not check_unit(pair_5_13.ctx.rational(2))


def test_prime_pairs():
    assert list(prime_pairs(13)) == [(5, 13)]
    assert (13, 17) in list(prime_pairs(20))


def test_table1_has_ten_rows():
    assert len(TABLE1) == 10


def test_save_writes_results(tmp_path, config):
    system = VerificationSystem(config, results_dir=str(tmp_path), progress=False)
    system._record('sweep', 'lemma10', 13, True, -1, -1)
    system._record('sweep', 'lemma8', 34, False, detail='example')
    summary = system.save()
    assert summary['total'] == 2
    assert summary['failed'] == 1
    assert os.path.exists(tmp_path / 'verification_results.csv')
    with open(tmp_path / 'verification_summary.json') as f:
        assert json.load(f)['by_check']['sweep/lemma8']['fail'] == 1


def test_index_suite_small_pair(tmp_path, config):
    system = VerificationSystem(config, results_dir=str(tmp_path), progress=False)
    system.verify_pair(5, 13)
    assert system.results
    assert not system.failures


def test_saturation_matches_case_analysis(pair_5_13):
    from triquad.theorems import analyze_pair
    qK, words = saturation_index(pair_5_13)
    assert qK == analyze_pair(5, 13).qK
    assert len(words) == 7


@pytest.mark.slow
def test_table1_suite(tmp_path, config):
    system = VerificationSystem(config, results_dir=str(tmp_path), progress=False)
    system.run_table1()
    assert len(system.results) == 30
    assert not system.failures


@pytest.mark.slow
def test_sweep_small_bound(tmp_path, config):
    system = VerificationSystem(config, results_dir=str(tmp_path), progress=False)
    system.sweep_properties(200, pair_bound=60)
    assert not system.failures
    subjects = {r['subject'] for r in system.results if r['check'] == 'fsu_saturated'}
    assert str((41, 73)) in subjects
    assert [r['check'] for r in system.results][-1] == 'final_corollary_pairs'


def test_verify_index_41_13():
    from triquad.theorems import analyze_pair
    report = analyze_pair(41, 13)
    assert verify_index(report.fsu, report.pair_context) == 16


@pytest.mark.slow
def test_verify_index_193_97():
    from triquad.theorems import analyze_pair
    report = analyze_pair(193, 97)
    assert verify_index(report.fsu, report.pair_context) == 32
