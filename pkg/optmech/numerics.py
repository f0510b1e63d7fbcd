"""Exact rational arithmetic and the binomial kernels behind every closed form.

Everything here works on :class:`fractions.Fraction`. Floats are refused at the
parsing boundary so that no approximate value can leak into a certificate.
"""

import math
import re
from collections.abc import Iterable
from fractions import Fraction

from .errors import DomainError, InputError

type Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def to_rational(value: object, field: str = "value") -> Fraction:
    """Parse an exact rational from an int, a Fraction or a "num/den" string.

    Decimal strings and floats are rejected: "0.5" must be written "1/2".
    """
    if isinstance(value, bool):
        raise InputError(f"{field}: expected a rational, got a boolean")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise InputError(f"{field}: floats are not accepted, write the value as an exact fraction like 1/2")
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if match is None:
            if "." in value or "e" in value.lower():
                raise InputError(f"{field}: decimals are not accepted, write {value!r} as an exact fraction like 1/2")
            raise InputError(f"{field}: cannot parse {value!r} as a rational")
        num, den = match.groups()
        if den is not None and int(den) == 0:
            raise InputError(f"{field}: zero denominator in {value!r}")
        return Fraction(int(num), int(den) if den is not None else 1)
    raise InputError(f"{field}: expected a rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Canonical "num/den" form (integers keep the "/1")."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def positive_part(value: Fraction) -> Fraction:
    return value if value > 0 else ZERO


def _check_probability(p: Fraction) -> None:
    if not ZERO <= p <= ONE:
        raise DomainError(f"probability must lie in [0, 1], got {format_rational(p)}")


def binom(n: int, k: int) -> int:
    if n < 0:
        raise DomainError(f"binom requires n >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def binom_pmf(m: int, p: Fraction, k: int) -> Fraction:
    """Pr[B(m, p) = k]."""
    _check_probability(p)
    if k < 0 or k > m:
        return ZERO
    return binom(m, k) * p**k * (1 - p) ** (m - k)


def binom_cdf(m: int, p: Fraction, k: int) -> Fraction:
    """Pr[B(m, p) <= k]."""
    _check_probability(p)
    if k < 0:
        return ZERO
    if k >= m:
        return ONE
    return sum((binom_pmf(m, p, z) for z in range(k + 1)), ZERO)


def binom_cdf_strict(m: int, p: Fraction, k: int) -> Fraction:
    """Pr[B(m, p) < k]."""
    return binom_cdf(m, p, k - 1)


def partition_sum(n: int, p: Fraction, q: Fraction) -> Fraction:
    """Sum over j of (1/j) C(n-1, j-1) q^(j-1) p^(n-j).

    This is the chance of winning a uniform tie-break when each of n-1 rivals
    independently ties with probability q and loses with probability p. The
    closed form ((p+q)^n - p^n)/(nq) is used for q > 0 and its limit p^(n-1)
    for q = 0.
    """
    if n < 1:
        raise DomainError(f"partition_sum requires n >= 1, got {n}")
    if p < 0 or q < 0:
        raise DomainError("partition_sum requires nonnegative p and q")
    if q == 0:
        return p ** (n - 1)
    return ((p + q) ** n - p**n) / (n * q)


def shared_win_probability(rivals: Iterable[tuple[Fraction, Fraction]]) -> Fraction:
    """Chance of winning against independent rivals with uniform tie-breaking.

    Each rival is described by ``(tie, below)``: the probability it ties with us
    and the probability it ranks strictly below. The remainder is the chance it
    ranks above, in which case we lose. With z tying rivals and none above, we
    win with probability 1/(z+1). For identical rivals this is ``partition_sum``.
    """
    # coefficient z: Pr[exactly z ties and nobody above]
    poly = [ONE]
    for tie, below in rivals:
        nxt = [ZERO] * (len(poly) + 1)
        for z, weight in enumerate(poly):
            if not weight:
                continue
            nxt[z] += weight * below
            nxt[z + 1] += weight * tie
        poly = nxt
    return sum((weight / (z + 1) for z, weight in enumerate(poly)), ZERO)
