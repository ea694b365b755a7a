"""
Integer and rational helpers shared by the whole package: perfect-square
tests, residue symbols and the "num/den" text form of rationals.
"""

import logging
from typing import Optional

import gmpy2
from gmpy2 import mpz, mpq
from sympy import isprime, factorint

from triquad.errors import PreconditionError, InconsistencyError

logger = logging.getLogger(__name__)


def is_perfect_square(n) -> Optional[int]:
    """Return the nonnegative root of n when n is a perfect square, else None."""
    n = mpz(n)
    if n < 0 or not gmpy2.is_square(n):
        return None
    return int(gmpy2.isqrt(n))


def rational_sqrt(q) -> Optional[mpq]:
    """Square root of a rational number when it is a rational square."""
    q = mpq(q)
    num = is_perfect_square(q.numerator)
    den = is_perfect_square(q.denominator)
    if num is None or den is None:
        return None
    return mpq(num, den)


def is_prime(n) -> bool:
    return n > 1 and isprime(int(n))


def is_squarefree(n) -> bool:
    n = abs(int(n))
    if n == 0:
        return False
    return all(e == 1 for e in factorint(n).values())


def odd_prime_factors(n):
    return sorted(p for p in factorint(abs(int(n))) if p != 2)


def _check_odd_prime(p):
    if p % 2 == 0 or not is_prime(p):
        raise PreconditionError(f"{p} is not an odd prime")


def legendre(a, p) -> int:
    """Legendre symbol (a/p) by Euler's criterion."""
    _check_odd_prime(p)
    r = gmpy2.powmod(mpz(a), (p - 1) // 2, p)
    if r == 0:
        return 0
    return 1 if r == 1 else -1


def quartic_2_under_p(p) -> int:
    """(2/p)_4 = 2^((p-1)/4) mod p for p = 1 (mod 8)."""
    if p % 8 != 1 or not is_prime(p):
        raise PreconditionError(f"(2/p)_4 needs a prime p = 1 (mod 8), got {p}")
    r = gmpy2.powmod(2, (p - 1) // 4, p)
    if r == 1:
        return 1
    if r == p - 1:
        return -1
    # 2 is a quadratic residue mod p = 1 (mod 8)
    raise InconsistencyError(f"2^((p-1)/4) mod {p} = {r} is not +-1")


def quartic_p_under_2(p) -> int:
    """(p/2)_4 := (-1)^((p-1)/8) for p = 1 (mod 8)."""
    if p % 8 != 1 or not is_prime(p):
        raise PreconditionError(f"(p/2)_4 needs a prime p = 1 (mod 8), got {p}")
    return -1 if ((p - 1) // 8) % 2 else 1


def exact_log2(n) -> int:
    n = mpz(n)
    if n <= 0 or n & (n - 1):
        raise InconsistencyError(f"{n} is not a power of 2")
    return int(n.bit_length() - 1)


def two_part(n) -> int:
    """Largest power of 2 dividing the positive integer n."""
    n = int(n)
    return n & -n


def format_rational(q) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text) -> mpq:
    num, _, den = str(text).partition('/')
    try:
        return mpq(int(num), int(den or 1))
    except (ValueError, ZeroDivisionError) as e:
        raise PreconditionError(f"Malformed rational '{text}': {e}")


def height_bits(q) -> int:
    q = mpq(q)
    return max(int(abs(q.numerator).bit_length()), int(q.denominator.bit_length()))
