"""Symmetric-group machinery for identical-particle configuration spaces.

A permutation sigma acts on a coordinate tuple by relabelling slots,

    (sigma x)_i = x_{sigma(i)},

so composition satisfies sigma (sigma' x) = (sigma sigma') x.  Signs are
computed from the cycle decomposition.  Enumeration is in lexicographic
order of the image tuples, which fixes the summation order of every
permutation sum built on top of it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded

#: Largest particle number enumerated by default (8! = 40320 elements).
DEFAULT_GROUP_CAP = 8


@dataclass(frozen=True)
class Permutation:
    """Element of S_n stored as the tuple sigma(0), ..., sigma(n-1) (0-based)."""

    images: tuple

    def __post_init__(self):
        n = len(self.images)
        if sorted(self.images) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {self.images}")

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def apply(self, x):
        """Relabel coordinates: (sigma x)_i = x_{sigma(i)}.

        Works on 1-d arrays and on batches shaped (..., n), acting on the
        last axis.
        """
        x = np.asarray(x)
        return x[..., list(self.images)]

    def compose(self, other: "Permutation") -> "Permutation":
        """Product sigma * other with sigma(other x) = (sigma * other) x."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        return Permutation(tuple(other.images[i] for i in self.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    @property
    def sign(self) -> int:
        """+1 for even permutations, -1 for odd ones."""
        return permutation_sign(self.images)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))


def identity(n: int) -> Permutation:
    return Permutation(tuple(range(n)))


def transposition(n: int, i: int, j: int) -> Permutation:
    """The swap of slots i and j (0-based)."""
    images = list(range(n))
    images[i], images[j] = images[j], images[i]
    return Permutation(tuple(images))


def adjacent_transposition(n: int, j: int) -> Permutation:
    """Swap of adjacent slots j and j+1 (0-based j in 0..n-2)."""
    return transposition(n, j, j + 1)


def permutation_sign(images) -> int:
    """Sign from cycle decomposition, O(n)."""
    n = len(images)
    seen = [False] * n
    sign = 1
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = images[i]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def enumerate_group(n: int, parity: str = "all", cap: int = DEFAULT_GROUP_CAP):
    """List S_n (parity='all') or its even subgroup (parity='even').

    The order is lexicographic in the image tuples and therefore
    deterministic; permutation sums rely on this for bit-reproducible
    results.  Raises CapExceeded above the configured cap since the cost
    of everything downstream is n! kernel evaluations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapExceeded(
            f"n = {n} exceeds the enumeration cap {cap} ({math.factorial(n)} elements)"
        )
    if parity not in ("all", "even"):
        raise ValueError(f"parity must be 'all' or 'even', got {parity!r}")
    elements = [Permutation(images) for images in itertools.permutations(range(n))]
    if parity == "even":
        elements = [p for p in elements if p.sign == 1]
    return elements


def group_order(n: int, parity: str = "all") -> int:
    return math.factorial(n) if parity == "all" else math.factorial(n) // 2


def permutation_matrix(p: Permutation) -> np.ndarray:
    """Matrix P with (P x)_i = x_{sigma(i)}."""
    mat = np.zeros((p.n, p.n))
    for i, j in enumerate(p.images):
        mat[i, j] = 1.0
    return mat
