"""Sign variations of real vectors and the cones they define.

All functions take plain sequences or numpy arrays. Entries with
``|x_i| <= eps`` are treated as exact zeros before any sign logic.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

ZERO_EPS = 1e-9


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def signs(x, eps: float = ZERO_EPS) -> np.ndarray:
    """Return the entrywise sign (-1, 0, +1) after snapping small entries to zero."""
    v = _as_vector(x)
    s = np.sign(v).astype(int)
    s[np.abs(v) <= eps] = 0
    return s


def _changes(s: np.ndarray) -> int:
    return int(np.count_nonzero(s[:-1] != s[1:]))


def sigma(x, eps: float = ZERO_EPS) -> int:
    """Number of sign changes of a vector with no zero entries."""
    s = signs(x, eps)
    if np.any(s == 0):
        raise ValueError("sigma is only defined for vectors without zero entries")
    return _changes(s)


def s_minus(x, eps: float = ZERO_EPS) -> int:
    """Minimal number of sign variations (zero entries deleted)."""
    s = signs(x, eps)
    s = s[s != 0]
    if s.size == 0:
        return 0
    return _changes(s)


def s_plus(x, eps: float = ZERO_EPS) -> int:
    """Maximal number of sign variations over all +-1 fillings of the zero entries.

    Single left-to-right scan: ``best[s]`` is the largest number of changes
    achievable in the prefix when the current entry is given sign ``s``.
    """
    s = signs(x, eps)
    neg_inf = -1 << 30
    best_pos = 0 if s[0] >= 0 else neg_inf
    best_neg = 0 if s[0] <= 0 else neg_inf
    for si in s[1:]:
        pos = max(best_pos, best_neg + 1) if si >= 0 else neg_inf
        neg = max(best_neg, best_pos + 1) if si <= 0 else neg_inf
        best_pos, best_neg = pos, neg
    return int(max(best_pos, best_neg))


def alternate(x) -> np.ndarray:
    """Multiply by diag(1, -1, 1, ...). The map is its own inverse."""
    v = _as_vector(x)
    d = np.where(np.arange(v.size) % 2 == 0, 1.0, -1.0)
    return d * v


def in_V(x, eps: float = ZERO_EPS) -> bool:
    """True iff ``x`` is nonzero and its minimal and maximal variation counts agree."""
    s = signs(x, eps)
    if not np.any(s):
        return False
    return s_minus(x, eps) == s_plus(x, eps)


def in_Pk(x, k: int, variant: str = "minus", eps: float = ZERO_EPS) -> bool:
    """Membership in the set of vectors with at most ``k - 1`` sign variations.

    ``variant="minus"`` counts with ``s_minus`` (a closed set), ``"plus"`` with
    ``s_plus`` (an open set that never contains the origin unless ``k == n``).
    """
    v = _as_vector(x)
    if not 1 <= k <= v.size:
        raise ValueError(f"k must lie in [1, {v.size}], got {k}")
    if variant == "minus":
        return s_minus(v, eps) <= k - 1
    if variant == "plus":
        return s_plus(v, eps) <= k - 1
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class SignStats:
    s_minus: int
    s_plus: int
    in_V: bool


def sign_stats(x, eps: float = ZERO_EPS) -> SignStats:
    return SignStats(s_minus(x, eps), s_plus(x, eps), in_V(x, eps))


@dataclass(frozen=True)
class ConeLabel:
    """An orthant ``sign * C(v)`` made of ``order`` consecutive sign blocks.

    ``breakpoints`` holds the 1-based index of the last entry of every block,
    so it is strictly increasing and ends with ``n``.
    """

    order: int
    breakpoints: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        bp = tuple(int(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        if self.order != len(bp) or self.order < 1:
            raise ValueError("order must equal the number of breakpoints")
        if bp[0] < 1 or any(a >= b for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing and >= 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def n(self) -> int:
        return self.breakpoints[-1]

    def __str__(self) -> str:
        v = ",".join(str(b) for b in self.breakpoints)
        return f"Q{self.order}: v=({v}), sign={'+' if self.sign > 0 else '-'}"

    def compact(self) -> str:
        v = ",".join(str(b) for b in self.breakpoints)
        return f"{'+' if self.sign > 0 else '-'}C{self.order}({v})"

    def contains(self, x, eps: float = ZERO_EPS) -> bool:
        """Check the defining sign inequalities of the orthant."""
        s = signs(x, eps) * self.sign
        if s.size != self.n:
            return False
        start = 0
        for block, end in enumerate(self.breakpoints):
            want = 1 if block % 2 == 0 else -1
            seg = s[start:end]
            if np.any(seg == -want):
                return False
            if block == 0:
                if not np.any(seg == want):
                    return False
            elif seg[0] != want:
                return False
            start = end
        return True


def classify_cone(x, eps: float = ZERO_EPS) -> ConeLabel | None:
    """Locate the orthant of the cone decomposition that contains ``x``.

    Blocks are cut right before each sign change, so zeros trailing a block
    stay with that block and leading zeros join the first one. Returns
    ``None`` for the zero vector.

    >>> classify_cone([0, 1, 2, 0, -2, 0, 1, 2])
    ConeLabel(order=3, breakpoints=(4, 6, 8), sign=1)
    """
    s = signs(x, eps)
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return None
    cuts = [int(j) for i, j in zip(nz[:-1], nz[1:]) if s[i] != s[j]]
    breakpoints = tuple(cuts) + (s.size,)
    return ConeLabel(len(breakpoints), breakpoints, int(s[nz[0]]))


def enumerate_cones(n: int, k: int) -> list[tuple[int, ...]]:
    """All C(n-1, k-1) breakpoint vectors of order ``k`` in dimension ``n``."""
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    out = [tuple(c) + (n,) for c in combinations(range(1, n), k - 1)]
    assert len(out) == comb(n - 1, k - 1)
    return out
