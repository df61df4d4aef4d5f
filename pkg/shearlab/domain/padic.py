from __future__ import annotations
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import ValidationError


class PrimeMismatch(ValidationError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p ** 0.5) + 1))


'''
A PAdicInteger is a value object: the truncation of an element of Z_p to its
first K base-p digits, digit j being the coefficient of p^j. Arithmetic is
exact modulo p^K.
'''
@dataclass(frozen=True)
class PAdicInteger:
    p: int
    digits: Tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValidationError(f"p={self.p} is not a prime")
        if len(self.digits) < 1:
            raise ValidationError("a p-adic integer needs at least one digit")
        if any(not 0 <= digit < self.p for digit in self.digits):
            raise ValidationError(f"digits {self.digits} out of range for p={self.p}")
        object.__setattr__(self, "digits", tuple(int(digit) for digit in self.digits))

    @classmethod
    def from_int(cls, value: int, p: int, K: int) -> PAdicInteger:
        value %= p ** K
        digits = []
        for _ in range(K):
            value, digit = divmod(value, p)
            digits.append(digit)
        return cls(p, tuple(digits))

    @classmethod
    def zero(cls, p: int, K: int) -> PAdicInteger:
        return cls(p, (0,) * K)

    @property
    def K(self) -> int:
        return len(self.digits)

    def to_int(self) -> int:
        return sum(digit * self.p ** j for j, digit in enumerate(self.digits))

    def valuation(self) -> int:
        return next((j for j, digit in enumerate(self.digits) if digit), self.K)

    def __add__(self, other: PAdicInteger) -> PAdicInteger:
        return padic_add(self, other)


def padic_add(a: PAdicInteger, b: PAdicInteger) -> PAdicInteger:
    if a.p != b.p or a.K != b.K:
        raise PrimeMismatch(f"cannot add Z_{a.p}/{a.K} digits to Z_{b.p}/{b.K} digits")
    digits = []
    carry = 0
    for da, db in zip(a.digits, b.digits):
        carry, digit = divmod(da + db + carry, a.p)
        digits.append(digit)
    # the carry out of digit K-1 is dropped: arithmetic is modulo p^K
    return PAdicInteger(a.p, tuple(digits))


def digit_table(values: Sequence[int], p: int, K: int) -> np.ndarray:
    return np.array(
        [PAdicInteger.from_int(int(value), p, K).digits for value in values],
        dtype=np.int64,
    ).reshape(len(values), K)


def add_digit_arrays(y: np.ndarray, v: np.ndarray, p: int) -> np.ndarray:
    """Vectorized padic_add over the last axis of two digit arrays."""
    out = np.empty(np.broadcast(y, v).shape, dtype=np.int64)
    carry = np.zeros(out.shape[:-1], dtype=np.int64)
    for j in range(out.shape[-1]):
        total = y[..., j] + v[..., j] + carry
        out[..., j] = total % p
        carry = total // p
    return out


def embed(digits: np.ndarray, p: int) -> np.ndarray:
    '''(y mod p^K) / p^K, the image of the truncated integer on the circle.'''
    K = digits.shape[-1]
    scale = float(p) ** (np.arange(K) - K)
    return digits @ scale
