"""Signed sums-of-powers-of-two coefficients.

A coefficient is stored as an ordered list of (sign, exponent) terms with
strictly decreasing exponents, so multiplying by it costs only bit shifts
and additions.  The greedy quantizer repeatedly subtracts the nearest
signed power of two from the residual; each step shrinks the residual by
at least a factor of three, so a p-term expansion is within |x| * 3**-p
of the input.
"""

import math
from dataclasses import dataclass

from .counting import OpCount
from .errors import ContractError

#: Sentinel precision meaning "keep raw float64 coefficients, skip quantization".
INFINITE_PRECISION = math.inf


@dataclass(frozen=True)
class SopotValue:
    """An expansion sum(sign_t * 2**exp_t) with strictly decreasing exponents."""

    terms: tuple  # of (sign, exponent) pairs, sign in {-1, +1}

    def __post_init__(self):
        prev = None
        for sign, exp in self.terms:
            if sign not in (-1, 1):
                raise ContractError(f"term sign must be +-1, got {sign}")
            if not isinstance(exp, int):
                raise ContractError(f"term exponent must be an integer, got {exp!r}")
            if prev is not None and exp >= prev:
                raise ContractError("term exponents must strictly decrease")
            prev = exp

    @property
    def value(self) -> float:
        acc = 0.0
        for sign, exp in self.terms:
            acc += math.ldexp(float(sign), exp)
        return acc

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def negated(self) -> "SopotValue":
        return SopotValue(tuple((-s, e) for s, e in self.terms))

    def to_dict(self):
        return {"s": [s for s, _ in self.terms], "v": [e for _, e in self.terms]}

    @classmethod
    def from_dict(cls, d) -> "SopotValue":
        signs = d["s"]
        exps = d["v"]
        if len(signs) != len(exps):
            raise ContractError("sign and exponent lists differ in length")
        return cls(tuple((int(s), int(e)) for s, e in zip(signs, exps)))


def nearest_pow2_exponent(x: float) -> int:
    """Exponent k minimizing ||x| - 2**k|; ties go to the larger exponent."""
    if x == 0.0 or not math.isfinite(x):
        raise ContractError("nearest power of two needs a finite nonzero input")
    mant, e = math.frexp(abs(x))  # abs(x) = mant * 2**e, mant in [0.5, 1)
    # candidates are 2**(e-1) and 2**e; midpoint is mant = 0.75
    return e if mant >= 0.75 else e - 1


def quantize(x: float, p) -> SopotValue:
    """Greedy expansion of ``x`` using at most ``p`` signed powers of two.

    Stops early once the residual is exactly zero.  ``p`` may be the
    INFINITE_PRECISION sentinel, in which case the expansion runs until the
    residual vanishes in float64 (at most the 53 significand bits).
    """
    if not math.isfinite(x):
        raise ContractError("cannot quantize a non-finite value")
    if p == INFINITE_PRECISION:
        budget = 64
    else:
        budget = int(p)
        if budget < 1:
            raise ContractError(f"precision must be >= 1, got {p}")
    terms = []
    y = 0.0
    for _ in range(budget):
        r = x - y
        if r == 0.0:
            break
        sign = 1 if r > 0 else -1
        exp = nearest_pow2_exponent(r)
        terms.append((sign, exp))
        y += math.ldexp(float(sign), exp)
    return SopotValue(tuple(terms))


def shift_add_multiply(v: float, c: SopotValue, counter: OpCount = None) -> float:
    """Multiply ``v`` by the coefficient via shifts and adds.

    A p-term coefficient costs p shifts and p-1 additions; the empty
    coefficient is zero and costs nothing.
    """
    p = c.num_terms
    if p == 0:
        return 0.0
    acc = 0.0
    for sign, exp in c.terms:
        acc += math.ldexp(v if sign > 0 else -v, exp)
    if counter is not None:
        counter.add(additions=p - 1, shifts=p)
    return acc
