from types import SimpleNamespace

import pytest
from gmpy2 import mpq

from triquad.errors import InconsistencyError, PreconditionError
from triquad.mfield import BIQUADRATIC, MQElement, embed_quad_unit, is_square, is_square_in_subfield, mul
from triquad.quadratic import ClassNumber2, LEMMA_RULE, NormSignature, fundamental_unit, shift_square
from triquad.report import to_json
from triquad.theorems import (
    CaseId, FsuResult, LResults, PairContext, ResolutionRecord, _checks, analyze_pair, biquad_fsu,
    biquad_index, classify, h2_K, lemma7_params, sqrt_2p1p2_form,
)
from triquad.units import E, R, UNIT_LABELS
from triquad.verify import TABLE1


def test_case_labels():
    case = CaseId('MT3', 7, 'b', swapped=True)
    assert case.label == 'MT3.7'
    assert case.full_label == 'MT3.7b'
    assert case.to_dict()['swapped'] is True


@pytest.mark.parametrize('pair, theorem, item', [
    ((41, 13), 'MT4', 1),
    ((97, 17), 'MT3', 3),
    ((41, 73), 'MT3', 7),
    ((89, 73), 'MT3', 9),
])
def test_classify(pair, theorem, item):
    case = classify(*pair)
    assert (case.theorem, case.item) == (theorem, item)
    assert not case.relaxed


def test_classify_both_5_mod_8():
    assert classify(5, 13).theorem == 'MT1A'


def test_classify_rejects_bad_pairs():
    with pytest.raises(PreconditionError):
        classify(41, 41)
    with pytest.raises(PreconditionError):
        classify(7, 13)


def test_lemma7_params():
    params = lemma7_params(17)
    assert (params.alpha1, params.alpha2, params.u) == (6, 1, 0)
    with pytest.raises(PreconditionError):
        lemma7_params(13)


def test_sqrt_2p1p2_form():
    pc = PairContext(97, 17)
    form = sqrt_2p1p2_form(pc)
    assert form.tag in ('F1', 'F2', 'F3')
    assert mul(form.root, form.root) == embed_quad_unit(pc.unit('2p1p2'), pc.ctx)


def test_sqrt_2p1p2_form_needs_norm_one(pair_5_13):
    with pytest.raises(PreconditionError):
        sqrt_2p1p2_form(pair_5_13)


def test_biquad_fsu_k1(pair_5_13):
    words = biquad_fsu('k1', pair_5_13)
    assert words == [E('2'), E('p1'), R('2', 'p1', '2p1')]
    assert biquad_index('k1', words) == 2


def test_biquad_fsu_unknown_subfield(pair_5_13):
    with pytest.raises(PreconditionError):
        biquad_fsu('k9', pair_5_13)


def _h2(value):
    return {label: ClassNumber2(d=i + 2, value=value, provenance=LEMMA_RULE)
            for i, label in enumerate(UNIT_LABELS)}


def test_h2_K():
    value, trace = h2_K(16, _h2(2))
    assert value == 4
    assert trace.endswith('/ 2^9')
    with pytest.raises(InconsistencyError):
        h2_K(16, _h2(1))
    assert h2_K(16, _h2(None)) == (None, None)


def test_analyze_5_13():
    report = analyze_pair(5, 13)
    # eps_2 eps_65 eps_130 = (17 + 23/2 sqrt2 + 2 sqrt65 + 3/2 sqrt130)^2 in k3
    assert report.case.full_label == 'MT1A.3'
    assert report.resolution.found
    assert report.qK == 32
    assert report.qL == 64
    assert report.delta == 1
    assert report.h2K == 2
    assert report.checks['fsu_saturated']
    assert all(report.checks.values())
    data = report.to_dict()
    assert data['schema'] == 1
    assert data['torsion_L'] == 'zeta8'
    assert len(data['fsu_elements']) == 7
    ctx = report.pair_context.ctx
    for word, element in zip(report.fsu, data['fsu_elements']):
        assert MQElement.from_dict(element, ctx) == report.pair_context.realizer.realize(word)
    assert to_json(data) == to_json(analyze_pair(5, 13).to_dict())


@pytest.mark.slow
def test_analyze_swapped_order_keeps_user_signature():
    report = analyze_pair(73, 41)
    assert report.pair == (73, 41)
    assert report.canonical == (41, 73)
    assert report.case.swapped
    assert report.signature.as_tuple() == (1, -1, 1, 1)
    assert report.qK == 32


@pytest.mark.slow
@pytest.mark.parametrize('pair', list(TABLE1))
def test_table1_rows(pair):
    signature, qK = TABLE1[pair]
    report = analyze_pair(*pair)
    assert report.signature.as_tuple() == signature
    assert report.qK == qK
    assert report.h2K is None or report.h2K >= 1
    assert all(report.checks.values())


@pytest.mark.slow
def test_square_tests_in_K(config):
    pc = PairContext(41, 29)
    assert is_square(pc.ctx.rational(3), config) is None
    k3_part = pc.realizer.integral(E('2', 'p1p2', '2p1p2'))
    assert is_square_in_subfield(k3_part, BIQUADRATIC['k3'], config) is not None
    assert pc.k3_square()
    other = PairContext(41, 13)
    assert is_square(other.realizer.integral(E('p1', 'p2', 'p1p2')), config) is not None


@pytest.mark.parametrize('pair', [(5, 13), (41, 13)])
def test_biquadratic_generators_are_squares(pair):
    pc = PairContext(*pair)
    assert pc.subfield_square(E('p1', 'p2', 'p1p2'), 'k4')
    if pc.p1 == 41:
        # N(eps_82) = -1
        assert pc.subfield_square(E('2', 'p1', '2p1'), 'k1')


def test_h2_K_both_5_mod_8():
    values = dict(zip(UNIT_LABELS, (1, 1, 1, 2, 2, 2, 4)))
    subfield_h2 = {label: ClassNumber2(d=i + 2, value=values[label], provenance=LEMMA_RULE)
                   for i, label in enumerate(UNIT_LABELS)}
    assert h2_K(32, subfield_h2)[0] == 2
    assert h2_K(16, subfield_h2)[0] == 1


def test_analyze_41_13():
    report = analyze_pair(41, 13)
    assert report.case.full_label.startswith('MT4.1')
    assert report.qK == 16
    assert report.delta == 0
    assert report.qL == 32
    assert all(report.checks.values())


@pytest.mark.slow
def test_analyze_41_29_nested_generator():
    report = analyze_pair(41, 29)
    assert report.case.full_label == 'MT4.1b'
    assert report.resolution.found
    assert any(c['square'] for c in report.resolution.candidates)
    assert report.resolution.candidates[-1]['square']
    assert report.qK == 32
    assert report.delta == 1
    assert report.qL == 64


@pytest.mark.slow
def test_analyze_457_41_without_nested_generator():
    report = analyze_pair(457, 41)
    assert report.qK == 16
    if report.resolution is not None:
        assert not report.resolution.found
        assert not any(c['square'] for c in report.resolution.candidates)


@pytest.mark.slow
def test_analyze_41_73_generator_needs_four_roots():
    report = analyze_pair(41, 73)
    assert report.case.full_label == 'MT3.7b'
    assert report.resolution.found
    word = report.resolution.word
    assert word in report.fsu
    # sqrt(eps_p2 sqrt(eps_2p2 eps_p1p2 eps_2p1p2)) up to squares
    assert word.denominator == 4
    for label in ('2p2', 'p1p2', '2p1p2'):
        assert word.exponent(label) == mpq(1, 4)
    assert report.qK == 32
    assert report.checks['fsu_saturated']
    assert all(report.checks.values())


@pytest.mark.slow
def test_missing_generator_is_caught_by_saturation(monkeypatch):
    def unresolved(case, pc):
        return ResolutionRecord(case=case.label, family='none', fallback=R('2p2'))

    monkeypatch.setattr('triquad.theorems.resolve_ambiguous', unresolved)
    with pytest.raises(InconsistencyError):
        analyze_pair(41, 73)


@pytest.mark.parametrize('qK, expected', [(16, True), (32, False)])
def test_final_corollary_check(qK, expected):
    pc = SimpleNamespace(
        p1=17, p2=73, signature=NormSignature(-1, 1, 1, 1), x_pm1_square=False,
        shifted_square=lambda label, factor=1: label == '2p1p2' and factor == 34,
        legendre=lambda: 1,
    )
    fsu = FsuResult(case=CaseId('MT3', 7, 'b'), words=[], qK=qK)
    L = LResults(qL=2 * qK, h2L=None, delta=qK // 16 - 1, trace=None, imaginary_h2={})
    checks = _checks(pc, fsu, None, {}, L)
    assert checks['final_corollary'] is expected
    assert checks['fsu_saturated']
    pc.shifted_square = lambda label, factor=1: True
    assert 'final_corollary' not in _checks(pc, fsu, None, {}, L)


@pytest.mark.slow
def test_final_corollary_on_table1_pair():
    report = analyze_pair(41, 337)
    assert report.signature.as_tuple() == (-1, 1, 1, 1)
    assert report.qK == 16
    assert report.qL == 32
    p1, p2 = report.canonical
    hypothesis = (not report.case.relaxed and report.canonical == report.pair
                  and shift_square(fundamental_unit(2 * p1 * p2), 2 * p1) is not None
                  and shift_square(fundamental_unit(p1 * p2), 2 * p1) is None)
    assert ('final_corollary' in report.checks) is hypothesis
    assert all(report.checks.values())
