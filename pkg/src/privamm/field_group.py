"""Prime-field arithmetic, a Schnorr-style commitment group, and Pedersen
commitments.

The group is the order-q subgroup of Z_p* with p = 2q + 1 a safe prime.
Committed values and blinding factors live in Z_q (exponents); commitments
live in the subgroup. `commitment_combine` multiplies commitments, which
adds the committed values and blinding factors — the homomorphism used to
check share deliveries against an on-chain commitment.

No floating point is used anywhere in this module.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

try:
    from gmpy2 import powmod as _powmod
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _powmod = pow

try:
    from gmpy2 import is_prime as _is_prime
except ImportError:  # pragma: no cover
    def _is_prime(n: int, _k: int = 40) -> bool:
        import random

        if n < 2:
            return False
        for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
            if n % small == 0:
                return n == small
        d, r = n - 1, 0
        while d % 2 == 0:
            d //= 2
            r += 1
        for _ in range(_k):
            a = random.randrange(2, n - 1)
            x = pow(a, d, n)
            if x in (1, n - 1):
                continue
            for _ in range(r - 1):
                x = x * x % n
                if x == n - 1:
                    break
            else:
                return False
        return True


class ParameterError(ValueError):
    """Unsupported or inconsistent group parameters."""


class RangeError(ValueError):
    """Field or exponent operand out of range."""


@dataclass(frozen=True, slots=True)
class FieldElement:
    """An integer modulo a prime, with exact modular arithmetic."""

    value: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            raise RangeError(f"value {self.value} not in [0, {self.modulus})")

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, int):
            return FieldElement(other % self.modulus, self.modulus)
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise RangeError("mixed moduli in field arithmetic")
            return other
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FieldElement((self.value + other.value) % self.modulus, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FieldElement((self.value - other.value) % self.modulus, self.modulus)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return FieldElement((self.value * other.value) % self.modulus, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.modulus, self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __pow__(self, exponent: int):
        return FieldElement(
            int(_powmod(self.value, exponent, self.modulus)), self.modulus
        )

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True, slots=True)
class GroupParams:
    """A prime-order subgroup of Z_p* with two independent generators.

    p = 2q + 1, both prime; g and h generate the order-q subgroup; h is
    derived from g by hashing, so nobody knows log_g(h).
    """

    p: int
    q: int
    g: int
    h: int

    def __post_init__(self):
        if (self.p - 1) % self.q != 0:
            raise ParameterError("q must divide p - 1")
        for name, gen in (("g", self.g), ("h", self.h)):
            if gen in (0, 1) or int(_powmod(gen, self.q, self.p)) != 1:
                raise ParameterError(f"{name} is not an order-q subgroup element")
        if self.g == self.h:
            raise ParameterError("g and h must be distinct")

    def to_json(self) -> dict:
        return {"p": str(self.p), "q": str(self.q), "g": str(self.g), "h": str(self.h)}

    @classmethod
    def from_json(cls, obj: dict) -> "GroupParams":
        return cls(int(obj["p"]), int(obj["q"]), int(obj["g"]), int(obj["h"]))


@dataclass(frozen=True, slots=True)
class Opening:
    """The (value, blinding) pair that opens a Pedersen commitment."""

    x: int
    r: int


# Fixed tiny group for statistical tests: p = 23 = 2*11 + 1.
TEST_GROUP = GroupParams(p=23, q=11, g=2, h=3)


def _hash_stream(label: bytes, seed: bytes, counter: int, nbytes: int) -> int:
    digest = b""
    block = 0
    while len(digest) < nbytes:
        digest += hashlib.sha256(
            label + seed + counter.to_bytes(8, "big") + block.to_bytes(4, "big")
        ).digest()
        block += 1
    return int.from_bytes(digest[:nbytes], "big")


def group_setup(security_bits: int, seed: bytes) -> GroupParams:
    """Deterministically derive commitment-group parameters from a seed.

    ``security_bits=16`` returns the fixed test group (23, 11, 2, 3);
    ``security_bits=256`` searches a seeded hash stream for a safe prime
    p = 2q + 1 with p of 256 bits, then picks generators by squaring hash
    outputs (squares generate the order-q subgroup).
    """
    if isinstance(seed, str):
        seed = seed.encode()
    if not seed:
        raise ParameterError("seed must be non-empty")
    if security_bits == 16:
        return TEST_GROUP
    if security_bits != 256:
        raise ParameterError(f"unsupported security_bits {security_bits}")

    qbits = security_bits - 1
    counter = 0
    while True:
        q = _hash_stream(b"group/q", seed, counter, qbits // 8 + 1)
        q |= 1 << (qbits - 1)  # pin the size
        q |= 1  # odd
        q &= (1 << qbits) - 1
        counter += 1
        if _is_prime(q) and _is_prime(2 * q + 1):
            break
    p = 2 * q + 1

    g_counter = 0
    while True:
        u = _hash_stream(b"group/g", seed, g_counter, 32) % p
        g = int(_powmod(u, 2, p))
        g_counter += 1
        if g != 1:
            break
    h_counter = 0
    g_bytes = g.to_bytes(32, "big")
    while True:
        u = _hash_stream(b"group/h", g_bytes, h_counter, 32) % p
        h = int(_powmod(u, 2, p))
        h_counter += 1
        if h not in (1, g):
            break
    return GroupParams(p=p, q=q, g=g, h=h)


def pedersen_commit(params: GroupParams, x: int, r: int) -> int:
    """Comm(x, r) = g^x * h^r mod p, with exponents in [0, q)."""
    x = int(x)
    r = int(r)
    if not 0 <= x < params.q:
        raise RangeError(f"committed value {x} not in [0, {params.q})")
    if not 0 <= r < params.q:
        raise RangeError(f"blinding factor {r} not in [0, {params.q})")
    return (
        int(_powmod(params.g, x, params.p)) * int(_powmod(params.h, r, params.p))
    ) % params.p


def pedersen_verify_opening(params: GroupParams, c: int, opening: Opening) -> bool:
    """True iff (opening.x, opening.r) recomputes exactly the commitment c."""
    try:
        return pedersen_commit(params, opening.x, opening.r) == c
    except RangeError:
        return False


def commitment_combine(params: GroupParams, c1: int, c2: int) -> int:
    """Homomorphic combine: commit(x1+x2, r1+r2) from the two commitments."""
    return (c1 * c2) % params.p


def commitment_combine_many(params: GroupParams, commitments) -> int:
    """Fold `commitment_combine` over a sequence (identity 1 when empty)."""
    acc = 1
    for c in commitments:
        acc = (acc * c) % params.p
    return acc
