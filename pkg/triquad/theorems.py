"""
Case analysis for K = Q(sqrt(2), sqrt(p1), sqrt(p2)) with p1 = p2 = 1 (mod 4).

The pair is classified by the congruences of the primes and the norms
(n1, n2, n3, n4) of eps_2p1, eps_2p2, eps_p1p2, eps_2p1p2. Each case comes
with an explicit list of seven generators of the unit group; where the list
leaves exponents open the candidates are decided by exact square detection.
From the generators follow q(K) and, through Wada's class number formula,
h2(K), q(L) and h2(L) for L = K(sqrt(-1)).
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Tuple

from gmpy2 import mpq

from triquad.arith import legendre, is_perfect_square, exact_log2
from triquad.config import DEFAULT_CONFIG
from triquad.errors import PreconditionError, InconsistencyError
from triquad.mfield import (
    BIQUADRATIC, FieldCtx, RADICAND_LABELS, embed_quad_unit, is_square_in_subfield, mul,
)
from triquad.quadratic import (
    ClassNumber2, NormSignature, fundamental_unit, h2_quadratic, norm_signature,
    shift_square, validate_pair,
)
from triquad.units import E, R, UNIT_LABELS, UnitRealizer, UnitWord, exponent_index, saturate

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TORSION_L = 'zeta8'

MT3_ITEMS = {
    (-1, -1, -1, 1): 1, (-1, 1, -1, 1): 2, (1, 1, -1, 1): 3,
    (-1, 1, 1, -1): 4, (-1, -1, 1, -1): 5, (1, 1, 1, -1): 6,
    (-1, 1, 1, 1): 7, (-1, -1, 1, 1): 8, (1, 1, 1, 1): 9,
}
MT4_ITEMS = {(-1, -1): 1, (-1, 1): 2, (1, 1): 3}
AMBIGUOUS = {('MT1A', 3), ('MT3', 3), ('MT3', 7), ('MT3', 9), ('MT4', 1)}

# sqrt(eps_2p1p2) form -> radicands of eta, the inner square root of the open generator
ETA_BY_FORM = {
    'F1': ('2p1', '2p2', '2p1p2'),
    'F2': ('2p2', 'p1p2', '2p1p2'),
    'F3': ('2p1', 'p1p2', '2p1p2'),
}


@dataclass(frozen=True)
class CaseId:
    theorem: str
    item: int
    sub: str = ''
    swapped: bool = False
    relaxed: bool = False

    @property
    def label(self):
        return f"{self.theorem}.{self.item}"

    @property
    def full_label(self):
        return self.label + self.sub

    def with_sub(self, sub):
        return CaseId(self.theorem, self.item, sub, self.swapped, self.relaxed)

    def to_dict(self):
        return {'theorem': self.theorem, 'item': self.item, 'sub': self.sub,
                'label': self.full_label, 'swapped': self.swapped,
                'hypothesis_relaxed': self.relaxed}


@dataclass(frozen=True)
class SqrtHalfParams:
    """sqrt(eps_2p) = (alpha1 + alpha2*sqrt(2p)) / sqrt(2), with (alpha1^2 - 2p alpha2^2)/2 = (-1)^u."""
    p: int
    alpha1: int
    alpha2: int
    u: int

    def to_dict(self):
        return {'p': self.p, 'alpha1': str(self.alpha1), 'alpha2': str(self.alpha2), 'u': self.u}


@dataclass
class SqrtForm:
    tag: str
    shift: int
    y1: int
    y2: int
    root: object

    def to_dict(self):
        return {'tag': self.tag, 'shift': self.shift, 'y1': str(self.y1), 'y2': str(self.y2)}


@dataclass
class ResolutionRecord:
    case: str
    family: str
    candidates: List[dict] = field(default_factory=list)
    witness: Optional[Tuple[int, ...]] = None
    word: Optional[UnitWord] = None
    fallback: Optional[UnitWord] = None
    notes: List[str] = field(default_factory=list)

    @property
    def found(self):
        return self.word is not None

    def to_dict(self):
        return {'case': self.case, 'family': self.family, 'candidates': self.candidates,
                'witness': list(self.witness) if self.witness else None,
                'word': self.word.to_dict() if self.word else None,
                'fallback': self.fallback.to_dict() if self.fallback else None,
                'notes': self.notes}


@dataclass
class FsuResult:
    case: CaseId
    words: List[UnitWord]
    qK: int
    resolution: Optional[ResolutionRecord] = None
    notes: List[str] = field(default_factory=list)
    saturated: bool = True


class PairContext:
    """Units, norms and memoized square tests for one ordered pair (p1, p2)."""

    def __init__(self, p1, p2, config=None, cache=None, realizer=None):
        validate_pair(p1, p2)
        self.p1, self.p2 = int(p1), int(p2)
        self.config = config or DEFAULT_CONFIG
        self.cache = cache
        self.realizer = realizer or UnitRealizer(FieldCtx(p1, p2), cache, self.config)
        self.ctx = self.realizer.ctx
        self.signature = norm_signature(self.p1, self.p2, cache)
        self._tests = {}

    def unit(self, label):
        return self.realizer.units[label]

    def swapped(self):
        return PairContext(self.p2, self.p1, self.config, self.cache)

    def legendre(self):
        return legendre(self.p1, self.p2)

    def shifted_square(self, label, factor=1) -> bool:
        """factor * (x +- 1) is a square, x the rational part of eps_label."""
        return shift_square(self.unit(label), factor) is not None

    @property
    def x_pm1_square(self) -> bool:
        return self.shifted_square('2p1p2')

    def subfield_square(self, word: UnitWord, sf_name: str) -> bool:
        key = (word, sf_name)
        if key not in self._tests:
            element = self.realizer.integral(word)
            root = is_square_in_subfield(element, BIQUADRATIC[sf_name], self.config)
            if root is not None:
                self.realizer.remember(word.sqrt(), root)
            self._tests[key] = root is not None
            logger.debug(f"{word} square in {sf_name} for ({self.p1}, {self.p2}): {root is not None}")
        return self._tests[key]

    def k3_square(self) -> bool:
        return self.subfield_square(E('2', 'p1p2', '2p1p2'), 'k3')


def lemma7_params(p, cache=None) -> SqrtHalfParams:
    if p % 8 != 1:
        raise PreconditionError(f"lemma7_params needs p = 1 (mod 8), got {p}")
    unit = fundamental_unit(2 * p, cache)
    if unit.norm != 1:
        raise PreconditionError(f"N(eps_{2 * p}) = -1")
    beta, alpha = unit.a, unit.b
    for s in (1, -1):
        alpha1 = is_perfect_square(beta + s)
        if alpha1 is None or (beta - s) % (2 * p):
            continue
        alpha2 = is_perfect_square((beta - s) // (2 * p))
        if alpha2 is None or alpha1 * alpha2 != alpha:
            continue
        if alpha1 ** 2 + 2 * p * alpha2 ** 2 != 2 * beta:
            continue
        return SqrtHalfParams(p=p, alpha1=alpha1, alpha2=alpha2, u=0 if s == 1 else 1)
    logger.error(f"No decomposition of eps_{2 * p} as (alpha1 + alpha2 sqrt({2 * p}))^2 / 2")
    raise InconsistencyError(f"eps_{2 * p}: neither beta + 1 nor beta - 1 is a square")


def sqrt_2p1p2_form(pc: PairContext) -> SqrtForm:
    """Which of the three shapes sqrt(eps_2p1p2) takes; the root is verified by squaring."""
    unit = pc.unit('2p1p2')
    if unit.norm != 1:
        raise PreconditionError(f"N(eps_{unit.d}) = -1, sqrt(eps_{unit.d}) is not in K")
    x, y = unit.a, unit.b
    p1 = pc.p1
    target = embed_quad_unit(unit, pc.ctx)
    fired = []
    for s in (1, -1):
        shifted = x + s
        shapes = []
        y1 = is_perfect_square(shifted)
        if y1 and y % y1 == 0:
            shapes.append(('F1', y1, y // y1, {'2': mpq(y1, 2), 'p1p2': mpq(y // y1)}))
        if shifted % p1 == 0:
            y2 = is_perfect_square(shifted // p1)
            if y2 and y % y2 == 0:
                shapes.append(('F2', y // y2, y2, {'p2': mpq(y // y2), '2p1': mpq(y2, 2)}))
        if shifted % (2 * p1) == 0:
            y1 = is_perfect_square(shifted // (2 * p1))
            if y1 and y % y1 == 0:
                shapes.append(('F3', y1, y // y1, {'p1': mpq(y1), '2p2': mpq(y // y1, 2)}))
        for tag, a, b, coeffs in shapes:
            vector = [mpq(0)] * 8
            for label, c in coeffs.items():
                vector[RADICAND_LABELS.index(label)] = c
            root = pc.ctx.element(vector)
            if mul(root, root) == target:
                fired.append(SqrtForm(tag=tag, shift=s, y1=a, y2=b, root=root))
    if len(fired) != 1:
        logger.error(f"sqrt(eps_{unit.d}) matched {len(fired)} shapes: {[f.tag for f in fired]}")
        raise InconsistencyError(f"sqrt(eps_{unit.d}) matched {len(fired)} of the three shapes")
    form = fired[0]
    pc.realizer.remember(R('2p1p2'), form.root)
    return form


def _match_item(signature: NormSignature):
    n1, n2, n3, n4 = signature.as_tuple()
    if (n3, n4) == (-1, -1):
        item = MT4_ITEMS.get((n1, n2))
        return ('MT4', item) if item else None
    item = MT3_ITEMS.get(signature.as_tuple())
    return ('MT3', item) if item else None


def classify(p1, p2, config=None, cache=None, pair_ctx=None) -> CaseId:
    validate_pair(p1, p2)
    signature = pair_ctx.signature if pair_ctx else norm_signature(p1, p2, cache)
    if p1 % 8 == 5 and p2 % 8 == 5:
        if signature.n3 == 1:
            return CaseId('MT1A', 1)
        pc = pair_ctx or PairContext(p1, p2, config, cache)
        return CaseId('MT1A', 3 if pc.k3_square() else 2)
    orderings = ((False, p1, signature), (True, p2, signature.swapped()))
    strict = []
    for swapped, first, sig in orderings:
        if first % 8 == 1:
            match = _match_item(sig)
            if match:
                strict.append((match[1], swapped, match[0]))
    if strict:
        item, swapped, theorem = min(strict)
        return CaseId(theorem, item, swapped=swapped)
    for swapped, first, sig in orderings:
        match = _match_item(sig)
        if first % 8 == 5 and match:
            logger.info(f"({p1}, {p2}) matched {match[0]}.{match[1]} only with p1 = 5 (mod 8)")
            return CaseId(match[0], match[1], swapped=swapped, relaxed=True)
    logger.error(f"No case matches ({p1}, {p2}) with signature {signature}")
    raise InconsistencyError(f"No case matches ({p1}, {p2}) with signature {signature}")


def _search(pc, record, labels, tuples, inner_words):
    """Try sqrt(prod eps_label^t * prod inner) for each exponent tuple t."""
    realizer = pc.realizer
    inner = pc.ctx.one()
    inner_word = UnitWord()
    for w in inner_words:
        inner = mul(inner, realizer.realize(w))
        inner_word = inner_word * w
    for t in tuples:
        outer = UnitWord.from_map(dict(zip(labels, t)))
        element = mul(realizer.integral(outer), inner)
        root = realizer.square_root_of(element)
        record.candidates.append({'exponents': list(t), 'family': record.family,
                                  'inner': [str(w) for w in inner_words],
                                  'square': root is not None})
        if root is not None:
            word = (outer * inner_word).sqrt()
            realizer.remember(word, root)
            record.witness = tuple(t)
            record.word = word
            logger.info(f"{record.case}: {word} found for ({pc.p1}, {pc.p2})")
            return word
    return None


def _products(words):
    """Every sub-list of words, shortest first."""
    return [[w for i, w in enumerate(words) if s >> i & 1]
            for s in sorted(range(1 << len(words)), key=lambda s: (bin(s).count('1'), s))]


def _nested_tuples():
    return [t for t in product((0, 1), repeat=4) if t[1:] != (1, 1, 1)]


def _eta_families(pc):
    form = sqrt_2p1p2_form(pc)
    prescribed = ETA_BY_FORM[form.tag]
    others = [eta for eta in ETA_BY_FORM.values() if eta != prescribed]
    return form, [prescribed] + others


def resolve_ambiguous(case: CaseId, pc: PairContext) -> ResolutionRecord:
    """Decide the open generator of an ambiguous case by exhaustive square search."""
    key = (case.theorem, case.item)
    if key not in AMBIGUOUS:
        raise PreconditionError(f"{case.label} has no open exponents")
    if key in (('MT1A', 3), ('MT4', 1)):
        inner = [R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('2', 'p1p2', '2p1p2')]
        record = ResolutionRecord(case=case.label, family='a,b,c,d over 2,p1,p2,p1p2',
                                  fallback=R('2', 'p1p2', '2p1p2'))
        _search(pc, record, ('2', 'p1', 'p2', 'p1p2'), _nested_tuples(), inner)
        return record
    if key == ('MT3', 3):
        eta = R('2p1', '2p2', '2p1p2')
        record = ResolutionRecord(case=case.label, family='a,b,c,d over 2,p1,p2,p1p2', fallback=eta)
        _search(pc, record, ('2', 'p1', 'p2', 'p1p2'), _nested_tuples(), [eta])
        return record
    if key == ('MT3', 7):
        u = lemma7_params(pc.p2, pc.cache).u
        a = (u + 1) % 2
        record = ResolutionRecord(case=case.label, family=f"a = u+1 = {a} (mod 2), u = {u}",
                                  fallback=R('2p2'))
        # eps_2^a eps_p2^(1+a) sqrt(eps_2p2) is only determined modulo squares of
        # the other generators: both a, then times eps_p1 and the rooted ones
        rooted = [R('p1p2'), R('2p1p2'), R('2', 'p1', '2p1')]
        tuples = [(a, 0, 1 + a), (1 - a, 0, 2 - a)]
        tuples += [(t[0], 1, t[2]) for t in tuples]
        for extra in _products(rooted):
            if _search(pc, record, ('2', 'p1', 'p2'), tuples, [R('2p2')] + extra) is not None:
                if record.witness[0] != a:
                    record.notes.append(f"witness uses a = {record.witness[0]}, not u+1 (mod 2)")
                if extra or record.witness[1]:
                    record.notes.append("witness needs the other rooted generators of the case")
                break
        return record
    form, families = _eta_families(pc)
    record = ResolutionRecord(case=case.label, family=f"a,b,c over 2,p1,p2 with sqrt(eps_2p1p2) form {form.tag}",
                              fallback=R(*families[0]))
    for i, eta in enumerate(families):
        if _search(pc, record, ('2', 'p1', 'p2'), list(product((0, 1), repeat=3)), [R(*eta)]) is not None:
            if i:
                record.notes.append(f"witness uses eta = eps_{'*eps_'.join(eta)} instead of the form-selected one")
                record.fallback = R(*eta)
            break
    return record


def _case_words(case: CaseId, pc: PairContext):
    """Generator list (beyond eps_2, eps_p1, eps_p2) for a case, plus its resolved sub-case."""
    theorem, item = case.theorem, case.item
    resolution = None
    notes = []
    sub = ''
    if theorem == 'MT1A':
        if item == 1:
            words = [R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('p1p2'), R('2', 'p1', 'p2', '2p1p2')]
        else:
            words = [R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('2', 'p1p2', '2p1p2'), R('p1', 'p2', 'p1p2')]
        if item == 3:
            resolution = resolve_ambiguous(case, pc)
            if resolution.found:
                words = words[:2] + [R('p1', 'p2', 'p1p2'), resolution.word]
            elif pc.legendre() == -1:
                raise InconsistencyError(
                    f"No nested generator for ({pc.p1}, {pc.p2}) although eps_2 eps_p1p2 eps_2p1p2 is a square in k3")
            else:
                notes.append("no nested generator; (p1/p2) = 1 so the list without it is used")
    elif theorem == 'MT3':
        x_pm1 = pc.x_pm1_square
        if item == 1:
            words = [R('2p1p2'), R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('p1', 'p2', 'p1p2')]
        elif item == 2:
            words = [R('2p2'), R('2p1p2'), R('2', 'p1', '2p1'), R('p1', 'p2', 'p1p2')]
        elif item == 3:
            if not x_pm1:
                sub = 'a'
                words = [R('2p1'), R('2p2'), R('2p1p2'), R('p1', 'p2', 'p1p2')]
            else:
                sub = 'b'
                resolution = resolve_ambiguous(case, pc)
                words = [R('2p1'), R('2p2'), R('p1', 'p2', 'p1p2'), resolution.word or resolution.fallback]
        elif item == 4:
            words = [R('p1p2'), R('2', 'p1', '2p1'), R('2p2'), R('2', 'p1', 'p2', '2p1p2')]
        elif item == 5:
            words = [R('p1p2'), R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('2', 'p1', 'p2', '2p1p2')]
        elif item == 6:
            words = [R('p1p2'), R('2p1'), R('2p2'), R('2', 'p1', 'p2', '2p1p2')]
        elif item == 7:
            if x_pm1:
                sub = 'a'
                words = [R('p1p2'), R('2p1p2'), R('2p2'), R('2', 'p1', '2p1')]
            else:
                sub = 'b'
                resolution = resolve_ambiguous(case, pc)
                words = [R('p1p2'), R('2p1p2'), R('2', 'p1', '2p1'), resolution.word or resolution.fallback]
        elif item == 8:
            sub = 'a' if x_pm1 else 'b'
            words = [R('p1p2'), R('2p1p2'), R('2', 'p1', '2p1'), R('2', 'p2', '2p2')]
        else:
            resolution = resolve_ambiguous(case, pc)
            words = [R('2p1'), R('2p2'), R('p1p2'), resolution.word or resolution.fallback]
    else:
        if item == 1:
            sub = 'a'
            words = [R('2', 'p1', '2p1'), R('2', 'p2', '2p2'), R('2', 'p1p2', '2p1p2'), R('p1', 'p2', 'p1p2')]
            if pc.k3_square():
                resolution = resolve_ambiguous(case, pc)
                if resolution.found:
                    sub = 'b'
                    words = words[:2] + [R('p1', 'p2', 'p1p2'), resolution.word]
        elif item == 2:
            words = [R('2p2'), R('2', 'p1', '2p1'), R('2', 'p1p2', '2p1p2'), R('p1', 'p2', 'p1p2')]
        else:
            words = [R('2p1'), R('2p2'), R('2', 'p1p2', '2p1p2'), R('p1', 'p2', 'p1p2')]
    return [E('2'), E('p1'), E('p2')] + words, sub, resolution, notes


def synthesize_fsu(case: CaseId, pc: PairContext) -> FsuResult:
    """The seven generators of E_K / {+-1} for a classified pair (in its canonical order)."""
    words, sub, resolution, notes = _case_words(case, pc)
    case = case.with_sub(sub)
    missing = [w for w in words if pc.realizer.try_realize(w) is None]
    if missing:
        if not case.relaxed:
            logger.error(f"{case.full_label}: {', '.join(map(str, missing))} not in K for ({pc.p1}, {pc.p2})")
            raise InconsistencyError(f"{case.full_label} generator {missing[0]} is not a unit of K")
        notes.append(f"generators {', '.join(map(str, missing))} absent; unit group by saturation")
        logger.info(f"{case.full_label} (relaxed) falls back to saturation for ({pc.p1}, {pc.p2})")
        words = saturate(pc.realizer, [E(label) for label in UNIT_LABELS]).words
    qK = _integer_index(exponent_index(words))
    saturated = True
    if not missing:
        saturation = saturate(pc.realizer, words)
        saturated = saturation.rounds == 0
        if not saturated:
            larger = _integer_index(exponent_index(saturation.words))
            logger.error(f"{case.full_label} for ({pc.p1}, {pc.p2}): saturation gives q(K) = {larger}, "
                         f"generators give {qK}")
            if resolution is not None and not resolution.found:
                raise InconsistencyError(
                    f"{case.full_label}: no square found by the search, but saturation raises q(K) "
                    f"from {qK} to {larger}")
            notes.append(f"saturation raises q(K) to {larger}: {'; '.join(saturation.steps)}")
    nested = 1 if resolution is not None and resolution.found else 0
    if not missing and qK != 2 ** (4 + nested):
        raise InconsistencyError(f"{case.full_label}: exponent index {qK} != 2^{4 + nested}")
    logger.info(f"({pc.p1}, {pc.p2}) {case.full_label}: q(K) = {qK}")
    return FsuResult(case=case, words=words, qK=qK, resolution=resolution, notes=notes,
                     saturated=saturated)


def _integer_index(index) -> int:
    if index.denominator != 1:
        raise InconsistencyError(f"Unit index {index} is not an integer")
    return int(index.numerator)


def biquad_labels(sf_name) -> Tuple[str, ...]:
    return tuple(RADICAND_LABELS[s] for s in BIQUADRATIC[sf_name].slots if s)


def biquad_fsu(sf_name: str, pc: PairContext) -> List[UnitWord]:
    """Fundamental system of units of a biquadratic subfield k1..k7."""
    if sf_name not in BIQUADRATIC:
        raise PreconditionError(f"Unknown biquadratic subfield '{sf_name}'")
    n1, n2, n3, n4 = pc.signature.as_tuple()
    if sf_name == 'k1':
        words = [E('2'), E('p1'), R('2', 'p1', '2p1') if n1 == -1 else R('2p1')]
    elif sf_name == 'k2':
        words = [E('2'), E('p2'), R('2', 'p2', '2p2') if n2 == -1 else R('2p2')]
    elif sf_name == 'k3':
        if n3 == n4 == -1:
            third = R('2', 'p1p2', '2p1p2') if pc.k3_square() else E('2p1p2')
        elif n4 == -1:
            third = E('2p1p2')
        elif n3 == -1:
            third = R('2p1p2') if pc.x_pm1_square else E('2p1p2')
        else:
            third = R('2p1p2') if pc.x_pm1_square else R('p1p2', '2p1p2')
        words = [E('2'), E('p1p2'), third]
    elif sf_name in ('k5', 'k6'):
        # k6 = Q(sqrt p1, sqrt 2p2); k5 is the same with p1 and p2 exchanged
        q, other, m = ('p1', 'p2', n2) if sf_name == 'k6' else ('p2', 'p1', n1)
        factor = 2 * (pc.p1 if q == 'p1' else pc.p2)
        if m == n4 == -1:
            product_word = E(q, '2' + other, '2p1p2')
            third = product_word.sqrt() if pc.subfield_square(product_word, sf_name) else E('2p1p2')
        elif n4 == -1:
            third = E('2p1p2')
        elif m == -1:
            third = R('2p1p2') if pc.shifted_square('2p1p2', factor) else E('2p1p2')
        else:
            third = R('2p1p2') if pc.shifted_square('2p1p2', factor) else R('2' + other, '2p1p2')
        words = [E(q), E('2' + other), third]
    elif sf_name == 'k4' and n3 == -1:
        words = [E('p1'), E('p2'), R('p1', 'p2', 'p1p2')]
    elif sf_name == 'k7' and pc.p1 % 8 == pc.p2 % 8 == 5 and pc.legendre() == -1:
        words = [E('2p1'), E('2p2'), R('2p1', '2p2', 'p1p2') if pc.k3_square() else E('p1p2')]
    else:
        start = [E(label) for label in biquad_labels(sf_name)]
        words = saturate(pc.realizer, start, subfield=BIQUADRATIC[sf_name]).words
    sf = BIQUADRATIC[sf_name]
    for w in words:
        element = pc.realizer.try_realize(w)
        if element is None or not sf.contains_support(element.support()):
            logger.error(f"{w} is not a unit of {sf_name} for ({pc.p1}, {pc.p2})")
            raise InconsistencyError(f"{w} is not a unit of {sf_name}")
    return words


def biquad_index(sf_name: str, words: List[UnitWord]) -> int:
    return _integer_index(exponent_index(words, columns=biquad_labels(sf_name)))


def h2_biquadratic(sf_name: str, q: int, subfield_h2: Dict[str, ClassNumber2]) -> Optional[int]:
    """Wada's formula for a real biquadratic field: q(k) * prod h2 / 4."""
    values = [subfield_h2[label].value for label in biquad_labels(sf_name)]
    if any(v is None for v in values):
        return None
    value = mpq(q)
    for v in values:
        value *= v
    value /= 4
    if value.denominator != 1:
        raise InconsistencyError(f"h2({sf_name}) = {value} is not an integer")
    return int(value)


def real_subfield_h2(pc: PairContext) -> Dict[str, ClassNumber2]:
    return {label: h2_quadratic(pc.ctx.radicand(label), pc.config) for label in UNIT_LABELS}


def imaginary_subfield_h2(pc: PairContext) -> Dict[str, ClassNumber2]:
    labels = ('1',) + UNIT_LABELS
    return {f"-{label}": h2_quadratic(-pc.ctx.radicand(label), pc.config) for label in labels}


def _wada(q, values, v):
    if any(x is None for x in values):
        return None, None
    value = mpq(q)
    for x in values:
        value *= x
    value /= 2 ** v
    trace = f"{q} * {' * '.join(str(x) for x in values)} / 2^{v}"
    if value.denominator != 1 or value < 1:
        logger.error(f"Class number formula gave {value}: {trace}")
        raise InconsistencyError(f"Class number formula gave the non-integer {value} ({trace})")
    return int(value), trace


def h2_K(qK: int, subfield_h2: Dict[str, ClassNumber2]):
    """h2(K) = q(K) * prod of the seven quadratic h2 / 2^9, with its trace (None if unknown)."""
    return _wada(qK, [subfield_h2[label].value for label in UNIT_LABELS], 9)


@dataclass
class LResults:
    qL: int
    h2L: Optional[int]
    delta: Optional[int]
    trace: Optional[str]
    imaginary_h2: Dict[str, ClassNumber2]
    formulas: List[str] = field(default_factory=list)


def L_results(pc: PairContext, qK: int, subfield_h2: Dict[str, ClassNumber2]) -> LResults:
    """q(L) and h2(L) for L = K(sqrt(-1)); E_L = <zeta8> E_K gives q(L) = 2 q(K)."""
    qL = 2 * qK
    delta = exact_log2(qK) - 4 if qK in (16, 32) else None
    imaginary = imaginary_subfield_h2(pc)
    values = [subfield_h2[label].value for label in UNIT_LABELS] + [c.value for c in imaginary.values()]
    h2L, trace = _wada(qL, values, 16)
    formulas = ['wada'] if h2L is not None else []
    return LResults(qL=qL, h2L=h2L, delta=delta, trace=trace, imaginary_h2=imaginary, formulas=formulas)


@dataclass
class CaseReport:
    pair: Tuple[int, int]
    canonical: Tuple[int, int]
    signature: NormSignature
    case: CaseId
    conditions: Dict[str, object]
    fsu: List[UnitWord]
    qK: int
    h2K: Optional[int]
    h2K_trace: Optional[str]
    subfield_h2: Dict[str, ClassNumber2]
    qL: int
    h2L: Optional[int]
    h2L_trace: Optional[str]
    delta: Optional[int]
    imaginary_h2: Dict[str, ClassNumber2]
    resolution: Optional[ResolutionRecord] = None
    notes: List[str] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    units: Dict[str, dict] = field(default_factory=dict)
    h2L_formulas: List[str] = field(default_factory=list)
    pair_context: Optional[PairContext] = field(default=None, repr=False, compare=False)

    @property
    def resolved_by_search(self):
        return self.resolution is not None

    @property
    def congruences(self):
        return (self.pair[0] % 8, self.pair[1] % 8)

    def fsu_elements(self):
        """Exact coordinates of the realized generators, in the canonical field."""
        if self.pair_context is None:
            return []
        return [self.pair_context.realizer.realize(w).to_dict() for w in self.fsu]

    def to_dict(self):
        p1, p2 = self.pair
        return {
            'schema': SCHEMA_VERSION,
            'pair': [p1, p2],
            'canonical': list(self.canonical),
            'congruences': {'p1': p1 % 8, 'p2': p2 % 8},
            'symbols': {'(p1/p2)': legendre(p1, p2), '(2/p1)': legendre(2, p1), '(2/p2)': legendre(2, p2)},
            'signature': list(self.signature.as_tuple()),
            'case': self.case.to_dict(),
            'conditions': self.conditions,
            'fsu': [w.to_dict() | {'text': str(w)} for w in self.fsu],
            'fsu_elements': self.fsu_elements(),
            'qK': self.qK,
            'h2K': self.h2K,
            'h2K_trace': self.h2K_trace,
            'subfield_h2': {k: v.to_dict() for k, v in self.subfield_h2.items()},
            'qL': self.qL,
            'h2L': self.h2L,
            'h2L_trace': self.h2L_trace,
            'h2L_formulas': self.h2L_formulas,
            'delta': self.delta,
            'torsion_L': TORSION_L,
            'imaginary_h2': {k: v.to_dict() for k, v in self.imaginary_h2.items()},
            'resolution': self.resolution.to_dict() if self.resolution else None,
            'resolved_by_search': self.resolved_by_search,
            'notes': self.notes,
            'checks': self.checks,
            'units': self.units,
        }


def _conditions(pc: PairContext) -> Dict[str, object]:
    n1, n2, n3, n4 = pc.signature.as_tuple()
    conditions = {
        'x_pm1_square': pc.x_pm1_square,
        '2p1(x_pm1)_square': pc.shifted_square('2p1p2', 2 * pc.p1),
        '2p2(x_pm1)_square': pc.shifted_square('2p1p2', 2 * pc.p2),
        "2p1(a'_pm1)_square": pc.shifted_square('p1p2', 2 * pc.p1),
    }
    if n3 == n4 == -1:
        conditions['eps2_epsp1p2_eps2p1p2_square_in_k3'] = pc.k3_square()
    if n4 == 1:
        conditions['sqrt_eps2p1p2_form'] = sqrt_2p1p2_form(pc).tag
    if pc.p1 % 8 == 1 and n1 == 1:
        conditions['u'] = lemma7_params(pc.p1, pc.cache).u
    if pc.p2 % 8 == 1 and n2 == 1:
        conditions['v'] = lemma7_params(pc.p2, pc.cache).u
    return conditions


def _h2(table, label):
    return table[label].value


def _checks(pc: PairContext, fsu: FsuResult, h2K, real_h2, L: LResults) -> Dict[str, bool]:
    checks = {}
    n1, n2, n3, n4 = pc.signature.as_tuple()
    case = fsu.case
    checks['fsu_saturated'] = fsu.saturated
    delta = L.delta
    if case.theorem == 'MT1A' and h2K is not None and _h2(real_h2, 'p1p2') is not None:
        nested = fsu.resolution is not None and fsu.resolution.found
        expected = _h2(real_h2, 'p1p2') if nested else mpq(_h2(real_h2, 'p1p2'), 2)
        checks['h2K_closed_form'] = h2K == expected
    strict_1_5 = pc.p1 % 8 == 1 and pc.p2 % 8 == 5 and not case.relaxed
    if strict_1_5 and h2K is not None and delta is not None:
        values = [_h2(real_h2, label) for label in ('2p1', '2p2', 'p1p2', '2p1p2')]
        if all(v is not None for v in values):
            checks['h2K_corollary'] = h2K * 2 ** (5 - delta) == values[0] * values[1] * values[2] * values[3]
        c1 = n1 == n2 == n3 == n4
        c2 = n1 == n2 == -n3 == n4 == 1 and pc.x_pm1_square
        c3 = -n1 == n2 == n3 == n4 == 1 and not pc.x_pm1_square
        checks['delta_conditions'] = delta == 0 or c1 or c2 or c3
        checks['qL_corollary'] = L.qL == 2 ** (5 + delta)
    if pc.p1 % 8 == 5 and pc.p2 % 8 == 5 and delta is not None:
        expected_delta = 1 if (n3 == -1 and pc.k3_square()) else 0
        checks['delta_k3_criterion'] = delta == expected_delta
        imaginary = [_h2(L.imaginary_h2, f"-{label}") for label in ('p1', 'p2', '2p1', '2p2')]
        checks['imaginary_h2_2'] = all(v == 2 for v in imaginary)
        values = [_h2(real_h2, 'p1p2'), _h2(real_h2, '2p1p2'),
                  _h2(L.imaginary_h2, '-p1p2'), _h2(L.imaginary_h2, '-2p1p2')]
        if L.h2L is not None and all(v is not None for v in values):
            checks['h2L_corollary'] = L.h2L * 2 ** (5 - delta) == values[0] * values[1] * values[2] * values[3]
            L.formulas.append('corollary')
        if pc.legendre() == -1:
            tests = [pc.k3_square(),
                     pc.subfield_square(E('p2', '2p1', '2p1p2'), 'k5'),
                     pc.subfield_square(E('p1', '2p2', '2p1p2'), 'k6'),
                     pc.subfield_square(E('2p1', '2p2', 'p1p2'), 'k7')]
            checks['subfield_squares_agree'] = len(set(tests)) == 1
    if strict_1_5 and pc.legendre() == -1 and (n1, n2, n3, n4) == (-1, -1, -1, -1):
        checks.update(proposition_checks(pc, fsu.qK, h2K, real_h2))
    if (not case.relaxed and (n1, n2, n3, n4) == (-1, 1, 1, 1)
            and pc.shifted_square('2p1p2', 2 * pc.p1) and not pc.shifted_square('p1p2', 2 * pc.p1)):
        checks['final_corollary'] = fsu.qK == 16 and L.qL == 32
    return checks


def proposition_checks(pc: PairContext, qK, h2K, real_h2) -> Dict[str, bool]:
    """p1 = 1, p2 = 5 (mod 8), (p1/p2) = -1 and all four norms -1."""
    checks = {
        'k3_square': pc.k3_square(),
        'k6_square': pc.subfield_square(E('p1', '2p2', '2p1p2'), 'k6'),
    }
    k5_words = biquad_fsu('k5', pc)
    q5 = biquad_index('k5', k5_words)
    checks['qK_is_16_q_k5'] = qK == 16 * q5
    checks['q_k5_from_square_test'] = q5 == (2 if pc.subfield_square(E('p2', '2p1', '2p1p2'), 'k5') else 1)
    h2_k3 = h2_biquadratic('k3', biquad_index('k3', biquad_fsu('k3', pc)), real_h2)
    h2_k6 = h2_biquadratic('k6', biquad_index('k6', biquad_fsu('k6', pc)), real_h2)
    h2_k5 = h2_biquadratic('k5', q5, real_h2)
    if h2_k3 is not None and h2_k6 is not None:
        checks['h2_k3_k6_4'] = h2_k3 == h2_k6 == 4
    if h2_k5 is not None and _h2(real_h2, '2p1') is not None:
        checks['h2_k5_cyclic_order'] = h2_k5 == q5 * _h2(real_h2, '2p1')
    if h2_k5 is not None and h2K is not None:
        checks['h2K_half_h2_k5'] = 2 * h2K == h2_k5
    return checks


def analyze_pair(p1, p2, config=None, cache=None) -> CaseReport:
    """Full analysis of the pair: case, unit group, q(K), h2(K), q(L), h2(L)."""
    config = config or DEFAULT_CONFIG
    validate_pair(p1, p2)
    user = PairContext(p1, p2, config, cache)
    case = classify(p1, p2, config, cache, pair_ctx=user)
    pc = user.swapped() if case.swapped else user
    logger.info(f"({p1}, {p2}) classified as {case.label}"
                + (" (swapped)" if case.swapped else "") + (" (relaxed)" if case.relaxed else ""))
    fsu = synthesize_fsu(case, pc)
    real_h2 = real_subfield_h2(pc)
    h2K, h2K_trace = h2_K(fsu.qK, real_h2)
    L = L_results(pc, fsu.qK, real_h2)
    checks = _checks(pc, fsu, h2K, real_h2, L)
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning(f"({p1}, {p2}) failed checks: {', '.join(failed)}")
    notes = list(fsu.notes)
    if fsu.resolution is not None:
        notes.extend(fsu.resolution.notes)
    return CaseReport(
        pair=(int(p1), int(p2)),
        canonical=(pc.p1, pc.p2),
        signature=user.signature,
        case=fsu.case,
        conditions=_conditions(pc),
        fsu=fsu.words,
        qK=fsu.qK,
        h2K=h2K,
        h2K_trace=h2K_trace,
        subfield_h2=real_h2,
        qL=L.qL,
        h2L=L.h2L,
        h2L_trace=L.trace,
        delta=L.delta,
        imaginary_h2=L.imaginary_h2,
        resolution=fsu.resolution,
        notes=notes,
        checks=checks,
        units={label: pc.unit(label).to_dict() for label in UNIT_LABELS},
        h2L_formulas=L.formulas,
        pair_context=pc,
    )
