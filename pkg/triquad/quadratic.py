"""
Real and imaginary quadratic fields Q(sqrt(d)).

Fundamental units come from the continued-fraction expansion of sqrt(d)
(or of (1 + sqrt(d))/2 when d = 1 mod 4). 2-class numbers come from the
classical rules for d built from 2 and primes = 1 (mod 4), with binary
quadratic form enumeration as the independent oracle.
"""

import logging
import threading
from dataclasses import dataclass, field
from math import gcd, log, sqrt
from typing import Optional, Tuple

import gmpy2
from gmpy2 import mpz, mpq
from sympy import divisors, factorint, primerange

from triquad.arith import (
    is_prime, is_squarefree, legendre, quartic_2_under_p, quartic_p_under_2,
    rational_sqrt, two_part,
)
from triquad.config import DEFAULT_CONFIG
from triquad.errors import PreconditionError, InconsistencyError

logger = logging.getLogger(__name__)

LEMMA_RULE = 'lemma-rule'
FORM_ORACLE = 'form-oracle'


@dataclass(frozen=True)
class QuadUnit:
    """Fundamental unit (a + b*sqrt(d)) / denom of the maximal order of Q(sqrt(d))."""
    d: int
    a: int
    b: int
    denom: int
    norm: int

    @property
    def x(self) -> mpq:
        return mpq(self.a, self.denom)

    @property
    def y(self) -> mpq:
        return mpq(self.b, self.denom)

    def verify(self):
        if self.d <= 1 or self.denom not in (1, 2) or self.norm not in (-1, 1):
            raise InconsistencyError(f"Malformed unit record {self}")
        if self.a <= 0 or self.b <= 0:
            raise InconsistencyError(f"Unit for d={self.d} is not > 1")
        if self.denom == 2 and (self.d % 4 != 1 or (self.a - self.b) % 2):
            raise InconsistencyError(f"Half-integral unit for d={self.d} outside the maximal order")
        a, b = mpz(self.a), mpz(self.b)
        if a * a - self.d * b * b != self.norm * self.denom ** 2:
            raise InconsistencyError(f"Pell identity fails for the unit of d={self.d}")
        return self

    def root_exponent(self) -> Optional[int]:
        """Smallest prime k such that the unit is the k-th power of a unit > 1, or None.

        A unit (t + w*sqrt(d))/2 > 1 is at least sqrt(d - 4) and at least the
        golden ratio, which bounds k by log(eps) / log(eta_min).
        """
        trace = mpz(2 * self.a // self.denom)
        log_eta_min = log((1 + sqrt(5)) / 2)
        if self.d > 8:
            log_eta_min = max(log_eta_min, 0.5 * log(self.d - 4))
        k_max = int(trace.bit_length() * log(2) / log_eta_min) + 1
        for k in primerange(2, k_max + 1):
            root = gmpy2.iroot(trace, k)[0]
            for t in range(max(1, int(root) - 2), int(root) + 3):
                for s in (1, -1):
                    if s ** k != self.norm:
                        continue
                    num = t * t - 4 * s
                    if num <= 0 or num % self.d:
                        continue
                    w, exact = gmpy2.iroot(mpz(num // self.d), 2)
                    if not exact or w == 0:
                        continue
                    if self.d % 4 != 1 and (t % 2 or w % 2):
                        continue
                    if self.d % 4 == 1 and (t - w) % 2:
                        continue
                    if _quad_pow((mpq(t, 2), mpq(w, 2)), k, self.d) == (self.x, self.y):
                        return int(k)
        return None

    def verify_fundamental(self):
        self.verify()
        k = self.root_exponent()
        if k is not None:
            logger.warning(f"Unit record for d={self.d} is a {k}-th power")
            raise InconsistencyError(f"Unit for d={self.d} is the {k}-th power of a smaller unit")
        return self

    def power(self, k: int) -> Tuple[mpq, mpq]:
        """Rational coordinates (u, v) with unit**k = u + v*sqrt(d); k may be negative."""
        if k < 0:
            # inverse of x + y*sqrt(d) is norm * (x - y*sqrt(d))
            base = (self.x * self.norm, -self.y * self.norm)
            k = -k
        else:
            base = (self.x, self.y)
        return _quad_pow(base, k, self.d)

    def to_dict(self):
        return {'d': str(self.d), 'a': str(self.a), 'b': str(self.b),
                'denom': str(self.denom), 'norm': str(self.norm)}

    @classmethod
    def from_dict(cls, data):
        try:
            unit = cls(d=int(data['d']), a=int(data['a']), b=int(data['b']),
                       denom=int(data['denom']), norm=int(data['norm']))
        except (KeyError, TypeError, ValueError) as e:
            raise InconsistencyError(f"Malformed unit record {data!r}: {e}")
        return unit.verify_fundamental()


def _quad_mul(u, v, d):
    return (u[0] * v[0] + d * u[1] * v[1], u[0] * v[1] + u[1] * v[0])


def _quad_pow(base, k, d):
    result = (mpq(1), mpq(0))
    while k:
        if k & 1:
            result = _quad_mul(result, base, d)
        base = _quad_mul(base, base, d)
        k >>= 1
    return result


@dataclass(frozen=True)
class NormSignature:
    n1: int
    n2: int
    n3: int
    n4: int

    def as_tuple(self):
        return (self.n1, self.n2, self.n3, self.n4)

    def swapped(self):
        return NormSignature(self.n2, self.n1, self.n3, self.n4)

    def __str__(self):
        return ','.join(str(n) for n in self.as_tuple())


@dataclass(frozen=True)
class ClassNumber2:
    d: int
    value: Optional[int]
    provenance: str
    oracle_value: Optional[int] = None

    @property
    def known(self):
        return self.value is not None

    def to_dict(self):
        data = {'d': str(self.d), 'value': self.value, 'provenance': self.provenance}
        if self.oracle_value is not None:
            data['oracle_value'] = self.oracle_value
        return data


@dataclass(frozen=True)
class QuadDescriptor:
    """Factorization data of d as (+/-) 2^e times odd primes, as needed by the lemma tables."""
    d: int
    has_two: bool
    primes: Tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def from_d(cls, d):
        d = int(d)
        if not is_squarefree(d):
            raise PreconditionError(f"{d} is not squarefree")
        factors = factorint(abs(d))
        return cls(d=d, has_two=2 in factors, primes=tuple(sorted(p for p in factors if p != 2)))

    @property
    def is_real(self):
        return self.d > 0

    @property
    def lemma_shape(self):
        """True when d > 0 is 2, p, pp', 2p or 2pp' with primes = 1 (mod 4)."""
        return (self.d > 0 and len(self.primes) <= 2 and bool(self.primes or self.has_two)
                and all(p % 4 == 1 for p in self.primes))


_MEMO = {}
_MEMO_LOCK = threading.Lock()


def clear_memo():
    with _MEMO_LOCK:
        _MEMO.clear()


def fundamental_unit(d, cache=None) -> QuadUnit:
    """Fundamental unit of Q(sqrt(d)); consults the process memo, then the on-disk cache."""
    d = int(d)
    if d <= 1 or not is_squarefree(d):
        logger.error(f"fundamental_unit needs a squarefree d > 1, got {d}")
        raise PreconditionError(f"fundamental_unit needs a squarefree d > 1, got {d}")
    with _MEMO_LOCK:
        unit = _MEMO.get(d)
    if unit is not None:
        return unit
    if cache is not None:
        unit = cache.get(d)
    if unit is None:
        unit = _continued_fraction_unit(d)
        if cache is not None:
            cache.put(unit)
    with _MEMO_LOCK:
        return _MEMO.setdefault(d, unit)


def _continued_fraction_unit(d) -> QuadUnit:
    # Expand (P + sqrt(D))/Q; the product of the complete quotients over one
    # period is the fundamental unit of the order Z[(P0 + sqrt(D))/Q0].
    D = mpz(d)
    s = gmpy2.isqrt(D)
    P, Q = (mpz(1), mpz(2)) if d % 4 == 1 else (mpz(0), mpz(1))

    def step(P, Q):
        a = (P + s) // Q
        P = a * Q - P
        return P, (D - P * P) // Q

    start = step(P, Q)
    P, Q = start
    X, Y, C = mpz(1), mpz(0), mpz(1)
    period = 0
    while True:
        X, Y = X * P + Y * D, X + Y * P
        C *= Q
        g = gmpy2.gcd(gmpy2.gcd(X, Y), C)
        X, Y, C = X // g, Y // g, C // g
        period += 1
        P, Q = step(P, Q)
        if (P, Q) == start:
            break
    if C not in (1, 2):
        raise InconsistencyError(f"Continued fraction of d={d} ended with denominator {C}")
    norm = -1 if period % 2 else 1
    unit = QuadUnit(d=d, a=int(X), b=int(Y), denom=int(C), norm=norm).verify()
    logger.debug(f"Fundamental unit of Q(sqrt({d})): period {period}, norm {norm}, "
                 f"{int(X).bit_length()} bits")
    return unit


def validate_pair(p1, p2):
    for p in (p1, p2):
        if not is_prime(p) or p % 4 != 1:
            logger.error(f"Invalid prime {p}: need a prime = 1 (mod 4)")
            raise PreconditionError(f"{p} is not a prime = 1 (mod 4)")
    if p1 == p2:
        raise PreconditionError(f"The primes must be distinct, got {p1} twice")


def lemma10_norm(d) -> Optional[int]:
    """Norm of the fundamental unit when the classical criteria decide it, else None."""
    desc = QuadDescriptor.from_d(d)
    if not desc.lemma_shape:
        return None
    primes = desc.primes
    if not desc.has_two and len(primes) == 1:
        return -1
    if desc.has_two and len(primes) == 1:
        p = primes[0]
        if p % 8 == 5:
            return -1
        q2p, qp2 = quartic_2_under_p(p), quartic_p_under_2(p)
        if q2p != qp2:
            return 1
        if q2p == qp2 == -1:
            return -1
        return None
    if len(primes) == 2:
        p, q = primes
        if not desc.has_two:
            return -1 if legendre(p, q) == -1 else None
        symbols = (legendre(p, q), legendre(2, p), legendre(2, q))
        return -1 if symbols.count(-1) >= 2 else None
    return None


def norm_signature(p1, p2, cache=None) -> NormSignature:
    validate_pair(p1, p2)
    radicands = (2 * p1, 2 * p2, p1 * p2, 2 * p1 * p2)
    norms = []
    for d in radicands:
        norm = fundamental_unit(d, cache).norm
        predicted = lemma10_norm(d)
        if predicted is not None and predicted != norm:
            logger.error(f"N(eps_{d}) = {norm} contradicts the norm criterion ({predicted})")
            raise InconsistencyError(f"N(eps_{d}) = {norm} but the norm criterion gives {predicted}")
        norms.append(norm)
    signature = NormSignature(*norms)
    logger.debug(f"Norm signature of ({p1}, {p2}): {signature}")
    return signature


def h2_lemma(descriptor) -> Optional[ClassNumber2]:
    """2-class number of Q(sqrt(d)) from the classical rules, or None when none applies."""
    if not isinstance(descriptor, QuadDescriptor):
        descriptor = QuadDescriptor.from_d(descriptor)
    if not descriptor.lemma_shape:
        return None
    d, primes = descriptor.d, descriptor.primes
    value = None
    if d == 2 or (not descriptor.has_two and len(primes) == 1):
        value = 1
    elif not descriptor.has_two:
        if legendre(primes[0], primes[1]) == -1:
            value = 2
    elif len(primes) == 1:
        p = primes[0]
        if p % 8 == 5:
            value = 2
        else:
            q2p, qp2 = quartic_2_under_p(p), quartic_p_under_2(p)
            if q2p != qp2:
                value = 2
            elif q2p == qp2 == -1:
                value = 4
    else:
        p, q = primes
        symbols = (legendre(p, q), legendre(2, p), legendre(2, q))
        if symbols.count(-1) >= 2:
            value = 4
    if value is None:
        return None
    return ClassNumber2(d=d, value=value, provenance=LEMMA_RULE)


def field_discriminant(d) -> int:
    return d if d % 4 == 1 else 4 * d


def _primitive(a, b, c):
    return gcd(gcd(abs(a), abs(b)), abs(c)) == 1


def reduced_indefinite_forms(D):
    """All primitive reduced forms (a, b, c) of positive nonsquare discriminant D."""
    s = int(gmpy2.isqrt(D))
    forms = []
    for b in range(D % 2 or 2, s + 1, 2):
        n = (D - b * b) // 4
        for a_abs in divisors(n):
            two_a = 2 * a_abs
            if (two_a + b) ** 2 <= D:
                continue
            if two_a - b > 0 and (two_a - b) ** 2 >= D:
                continue
            for a in (a_abs, -a_abs):
                c = -n // a
                if _primitive(a, b, c):
                    forms.append((a, b, c))
    return forms


def _rho(form, D, s):
    a, b, c = form
    m = 2 * abs(c)
    b_next = s - (s + b) % m
    return (c, b_next, (b_next * b_next - D) // (4 * c))


def class_group_real(d, bound=None) -> Tuple[int, int]:
    """(h, h2) of the real quadratic field Q(sqrt(d)) from cycles of reduced forms."""
    d = int(d)
    if d <= 1 or not is_squarefree(d):
        raise PreconditionError(f"class_group_real needs a squarefree d > 1, got {d}")
    D = field_discriminant(d)
    bound = DEFAULT_CONFIG.oracle_bound if bound is None else bound
    if D > bound:
        raise PreconditionError(f"Discriminant {D} exceeds the oracle bound {bound}")
    s = int(gmpy2.isqrt(D))
    forms = reduced_indefinite_forms(D)
    seen = set()
    cycles = 0
    for form in forms:
        if form in seen:
            continue
        cycles += 1
        current = form
        while current not in seen:
            seen.add(current)
            current = _rho(current, D, s)
        if current != form:
            raise InconsistencyError(f"Reduction operator is not a permutation for D={D}")
    norm = fundamental_unit(d).norm
    if norm == 1:
        if cycles % 2:
            raise InconsistencyError(f"Odd narrow class number {cycles} with N(eps_{d}) = +1")
        h = cycles // 2
    else:
        h = cycles
    logger.debug(f"Form oracle for d={d}: narrow {cycles}, wide {h}")
    return h, two_part(h)


def class_group_imaginary(d) -> Tuple[int, int]:
    """(h, h2) of the imaginary quadratic field Q(sqrt(d)) by counting reduced forms."""
    d = int(d)
    if d >= 0 or not is_squarefree(d):
        raise PreconditionError(f"class_group_imaginary needs a squarefree d < 0, got {d}")
    D = field_discriminant(d)
    a_max = int(gmpy2.isqrt(-D // 3))
    h = 0
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2 or (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if _primitive(a, b, c):
                h += 1
    return h, two_part(h)


def h2_quadratic(d, config=None) -> ClassNumber2:
    """2-class number with provenance: lemma rule when available, else the form oracle.

    When both exist they must agree. Real discriminants above the oracle bound
    with no applicable rule give an unknown value.
    """
    config = config or DEFAULT_CONFIG
    d = int(d)
    if d < 0:
        _, h2 = class_group_imaginary(d)
        return ClassNumber2(d=d, value=h2, provenance=FORM_ORACLE, oracle_value=h2)
    rule = h2_lemma(d)
    oracle = None
    if field_discriminant(d) <= config.oracle_bound:
        oracle = class_group_real(d, config.oracle_bound)[1]
    if rule is not None:
        if oracle is not None and oracle != rule.value:
            logger.error(f"h2({d}): lemma rule {rule.value} vs form oracle {oracle}")
            raise InconsistencyError(f"h2({d}) lemma rule {rule.value} disagrees with oracle {oracle}")
        return ClassNumber2(d=d, value=rule.value, provenance=LEMMA_RULE, oracle_value=oracle)
    if oracle is None:
        logger.info(f"h2({d}) unknown: no lemma rule and discriminant above the oracle bound")
        return ClassNumber2(d=d, value=None, provenance=FORM_ORACLE)
    return ClassNumber2(d=d, value=oracle, provenance=FORM_ORACLE, oracle_value=oracle)


def shift_square(unit: QuadUnit, factor=1) -> Optional[int]:
    """Sign s in {+1, -1} with factor*(x + s) a rational square, x = unit.x; None if neither."""
    for s in (1, -1):
        value = mpq(factor) * (unit.x + s)
        if value > 0 and rational_sqrt(value) is not None:
            return s
    return None
