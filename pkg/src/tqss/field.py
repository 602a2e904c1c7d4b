"""Arithmetic in Z_d and Shamir (t, n) threshold sharing.

Everything here is exact integer arithmetic; no floating point is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CardinalityError,
    InvalidArgument,
    ModulusMismatch,
    ShareError,
    ZeroInverseError,
)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeModulus:
    d: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool):
            raise InvalidArgument(f"modulus must be an integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not is_prime(self.d):
            raise InvalidArgument(f"modulus {self.d} is not prime")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(int(value) % self.d, self)

    def __int__(self):
        return self.d

    def elements(self) -> list[FieldElement]:
        return [FieldElement(v, self) for v in range(self.d)]


def as_modulus(d: int | PrimeModulus) -> PrimeModulus:
    return d if isinstance(d, PrimeModulus) else PrimeModulus(d)


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: PrimeModulus

    def __post_init__(self):
        if not 0 <= self.value < self.modulus.d:
            raise InvalidArgument(f"{self.value} is not in Z_{self.modulus.d}")

    @property
    def d(self) -> int:
        return self.modulus.d

    def _coerce(self, other) -> FieldElement:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ModulusMismatch(f"Z_{self.d} vs Z_{other.d}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.modulus(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value + other.value) % self.d, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value - other.value) % self.d, self.modulus)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.value * other.value % self.d, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.d, self.modulus)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * mod_inverse(other)

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value} (mod {self.d})"


def select_prime(n: int) -> PrimeModulus:
    """Smallest prime p with n < p <= 2n.

    Strictly greater than n so that n distinct nonzero x-values fit in Z_p.
    """
    if n < 2:
        raise InvalidArgument(f"need n >= 2, got {n}")
    for p in range(n + 1, 2 * n + 1):
        if is_prime(p):
            return PrimeModulus(p)
    raise AssertionError("unreachable: Bertrand's postulate")


def mod_inverse(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroInverseError(f"0 has no inverse mod {a.d}")
    return FieldElement(pow(a.value, -1, a.d), a.modulus)


@dataclass(frozen=True)
class Polynomial:
    """f(x) = a_0 + a_1 x + ... + a_{t-1} x^{t-1} over Z_d; a_0 is the secret."""

    coefficients: tuple[FieldElement, ...]

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) < 2:
            raise InvalidArgument("threshold t must be >= 2")
        if len({c.modulus for c in coeffs}) != 1:
            raise ModulusMismatch("coefficients live in different fields")

    @property
    def modulus(self) -> PrimeModulus:
        return self.coefficients[0].modulus

    @property
    def t(self) -> int:
        return len(self.coefficients)

    @property
    def secret(self) -> FieldElement:
        return self.coefficients[0]

    def __call__(self, x) -> FieldElement:
        return eval_polynomial(self, x)


def sample_polynomial(a0: FieldElement, t: int, rng: np.random.Generator) -> Polynomial:
    if t < 2:
        raise InvalidArgument(f"threshold t must be >= 2, got {t}")
    rest = rng.integers(0, a0.d, size=t - 1)
    return Polynomial((a0, *(a0.modulus(int(r)) for r in rest)))


def eval_polynomial(p: Polynomial, x: FieldElement | int) -> FieldElement:
    if isinstance(x, FieldElement):
        if x.modulus != p.modulus:
            raise ModulusMismatch(f"polynomial over Z_{p.modulus.d}, x in Z_{x.d}")
    else:
        x = p.modulus(x)
    acc = 0
    for c in reversed(p.coefficients):
        acc = (acc * x.value + c.value) % x.d
    return FieldElement(acc, p.modulus)


@dataclass(frozen=True)
class Share:
    x: FieldElement
    y: FieldElement

    def __post_init__(self):
        if self.x.value == 0:
            raise ShareError("share x-coordinate must be nonzero")
        if self.x.modulus != self.y.modulus:
            raise ModulusMismatch("share coordinates live in different fields")


@dataclass(frozen=True)
class Shadow:
    participant_index: int
    s: FieldElement


def _check_distinct_nonzero(xs: Sequence[FieldElement]) -> None:
    values = [x.value for x in xs]
    if any(v == 0 for v in values):
        raise ShareError("x-values must be nonzero")
    if len(set(values)) != len(values):
        raise ShareError(f"duplicate x-values in {values}")
    if len({x.modulus for x in xs}) > 1:
        raise ModulusMismatch("x-values live in different fields")


def default_xs(n: int, d: PrimeModulus) -> list[FieldElement]:
    return [d(i) for i in range(1, n + 1)]


def distribute_shares(p: Polynomial, xs: Sequence[FieldElement | int]) -> list[Share]:
    xs = [x if isinstance(x, FieldElement) else p.modulus(x) for x in xs]
    if len(xs) > p.modulus.d - 1:
        raise ShareError(f"{len(xs)} participants need more than {p.modulus.d - 1} nonzero x-values")
    _check_distinct_nonzero(xs)
    if xs and xs[0].modulus != p.modulus:
        raise ModulusMismatch("x-values and polynomial live in different fields")
    return [Share(x, eval_polynomial(p, x)) for x in xs]


def lagrange_coefficient(i: int, xs_subset: Sequence[FieldElement]) -> FieldElement:
    """prod_{j != i} x_j / (x_j - x_i), i.e. the basis polynomial L_i evaluated at 0."""
    if not 0 <= i < len(xs_subset):
        raise InvalidArgument(f"index {i} out of range for {len(xs_subset)} x-values")
    xi = xs_subset[i]
    lam = xi.modulus(1)
    for j, xj in enumerate(xs_subset):
        if j != i:
            lam = lam * xj * mod_inverse(xj - xi)
    return lam


def compute_shadow(share: Share, xs_subset: Sequence[FieldElement], participant_index: int | None = None) -> Shadow:
    values = [x.value for x in xs_subset]
    if share.x.value not in values:
        raise ShareError(f"share at x={share.x.value} is not in subset {values}")
    pos = values.index(share.x.value)
    s = share.y * lagrange_coefficient(pos, xs_subset)
    return Shadow(share.x.value if participant_index is None else participant_index, s)


def reconstruct_classical(shares_subset: Sequence[Share], t: int | None = None) -> FieldElement:
    if not shares_subset:
        raise CardinalityError("no shares given")
    if t is not None and len(shares_subset) != t:
        raise CardinalityError(f"need exactly {t} shares, got {len(shares_subset)}")
    xs = [sh.x for sh in shares_subset]
    _check_distinct_nonzero(xs)
    total = xs[0].modulus(0)
    for i, sh in enumerate(shares_subset):
        total = total + sh.y * lagrange_coefficient(i, xs)
    return total


def shadows_for_subset(shares: Iterable[Share]) -> list[Shadow]:
    shares = list(shares)
    xs = [sh.x for sh in shares]
    return [compute_shadow(sh, xs) for sh in shares]


def t_subsets(n: int, t: int) -> list[tuple[int, ...]]:
    """All t-subsets of participant indices 1..n, lexicographic."""
    return list(combinations(range(1, n + 1), t))
