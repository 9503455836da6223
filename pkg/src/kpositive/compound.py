"""Lexicographic index sets, minors, and multiplicative/additive compounds.

Index sets are tuples of 1-based, strictly increasing integers. Compound
matrices list rows and columns in lexicographic order of these sets.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

MAX_DIM = 20
MAX_COMPOUND_SIZE = 20000


class ComplexityError(ValueError):
    """Raised when a request exceeds the desk-scale size limits."""


def check_size(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if n > MAX_DIM:
        raise ComplexityError(f"dimension {n} exceeds the limit of {MAX_DIM}")
    if comb(n, k) > MAX_COMPOUND_SIZE:
        raise ComplexityError(
            f"C({n},{k}) = {comb(n, k)} exceeds the limit of {MAX_COMPOUND_SIZE}"
        )


@lru_cache(maxsize=256)
def index_sets(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All k-subsets of {1..n} in lexicographic order."""
    check_size(n, k)
    return tuple(combinations(range(1, n + 1), k))


def rank_subset(alpha, n: int) -> int:
    """Position (0-based) of ``alpha`` in the lexicographic list of k-subsets of {1..n}."""
    alpha = tuple(alpha)
    k = len(alpha)
    _check_index_set(alpha, n)
    # count subsets that sort before alpha: for each position, those with a
    # smaller element there and the same prefix
    r = 0
    prev = 0
    for pos, a in enumerate(alpha):
        for smaller in range(prev + 1, a):
            r += comb(n - smaller, k - pos - 1)
        prev = a
    return r


def unrank_subset(r: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`rank_subset`."""
    if not 0 <= r < comb(n, k):
        raise ValueError(f"rank {r} out of range for C({n},{k})")
    out = []
    x = 1
    for pos in range(k):
        while True:
            c = comb(n - x, k - pos - 1)
            if r < c:
                break
            r -= c
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def label(alpha) -> str:
    return "{" + ",".join(str(i) for i in alpha) + "}"


def _check_index_set(alpha, n: int) -> None:
    if any(a >= b for a, b in zip(alpha, alpha[1:])):
        raise ValueError(f"index set {alpha} is not strictly increasing")
    if alpha and (alpha[0] < 1 or alpha[-1] > n):
        raise ValueError(f"index set {alpha} out of bounds for size {n}")


def _as_matrix(A, square: bool = True) -> np.ndarray:
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    if square and M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _det_batch(S: np.ndarray) -> np.ndarray:
    """Determinants of a stack of k x k matrices, closed form for k <= 3."""
    k = S.shape[-1]
    if k == 1:
        return S[..., 0, 0].copy()
    if k == 2:
        return S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    if k == 3:
        return (
            S[..., 0, 0] * (S[..., 1, 1] * S[..., 2, 2] - S[..., 1, 2] * S[..., 2, 1])
            - S[..., 0, 1] * (S[..., 1, 0] * S[..., 2, 2] - S[..., 1, 2] * S[..., 2, 0])
            + S[..., 0, 2] * (S[..., 1, 0] * S[..., 2, 1] - S[..., 1, 1] * S[..., 2, 0])
        )
    # LAPACK getrf: LU with partial pivoting
    return np.linalg.det(S)


def minor(A, alpha, beta) -> float:
    """Determinant of the submatrix of ``A`` with rows ``alpha`` and columns ``beta``."""
    M = _as_matrix(A, square=False)
    alpha, beta = tuple(alpha), tuple(beta)
    if len(alpha) != len(beta) or not alpha:
        raise ValueError("row and column index sets must have the same positive size")
    _check_index_set(alpha, M.shape[0])
    _check_index_set(beta, M.shape[1])
    sub = M[np.ix_(np.array(alpha) - 1, np.array(beta) - 1)]
    return float(_det_batch(sub))


def _submatrices(M: np.ndarray, k: int) -> np.ndarray:
    """Stack of all k x k submatrices, shape (C(m,k), C(n,k), k, k)."""
    rows = np.array(index_sets(M.shape[0], k)) - 1
    cols = np.array(index_sets(M.shape[1], k)) - 1
    return M[rows[:, None, :, None], cols[None, :, None, :]]


def mult_compound(A, k: int) -> np.ndarray:
    """k-th multiplicative compound: all order-k minors in lexicographic order.

    Rectangular input is accepted; the result is C(m,k) x C(n,k).
    """
    M = _as_matrix(A, square=False)
    m, n = M.shape
    check_size(m, k)
    check_size(n, k)
    if k == 1:
        return M.copy()
    return _det_batch(_submatrices(M, k))


def submatrix_scales(A, k: int) -> np.ndarray:
    """For every order-k minor, the product over its rows of the row max-abs entry.

    Used as the magnitude reference when deciding the sign of a minor.
    """
    S = np.abs(_submatrices(_as_matrix(A, square=False), k))
    return np.prod(S.max(axis=-1), axis=-1)


@lru_cache(maxsize=256)
def _stencil(n: int, k: int):
    """Sparsity structure of the k-th additive compound.

    Returns ``(diag_sets, rows, cols, src_i, src_j, sign)``: off-diagonal entry
    ``(rows[t], cols[t])`` equals ``sign[t] * a[src_i[t], src_j[t]]`` (0-based).
    """
    sets = index_sets(n, k)
    where = {s: r for r, s in enumerate(sets)}
    rows, cols, src_i, src_j, sign = [], [], [], [], []
    for r, alpha in enumerate(sets):
        members = set(alpha)
        for ell, i in enumerate(alpha, start=1):
            for j in range(1, n + 1):
                if j in members:
                    continue
                beta = tuple(sorted(members - {i} | {j}))
                m = beta.index(j) + 1
                rows.append(r)
                cols.append(where[beta])
                src_i.append(i - 1)
                src_j.append(j - 1)
                sign.append(-1.0 if (ell + m) % 2 else 1.0)
    diag_sets = np.array(sets, dtype=int) - 1
    return (
        diag_sets,
        np.array(rows, dtype=int),
        np.array(cols, dtype=int),
        np.array(src_i, dtype=int),
        np.array(src_j, dtype=int),
        np.array(sign),
    )


def add_compound(A, k: int) -> np.ndarray:
    """k-th additive compound, assembled entry by entry from ``A``.

    Diagonal entry ``(alpha|alpha)`` is the sum of ``a_ii`` over ``alpha``. When
    ``alpha`` and ``beta`` share all but one index, ``i`` at position ``l`` of
    ``alpha`` and ``j`` at position ``m`` of ``beta``, the entry is
    ``(-1)**(l+m) * a_ij``. Every other entry is zero.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    check_size(n, k)
    diag_sets, rows, cols, src_i, src_j, sign = _stencil(n, k)
    N = diag_sets.shape[0]
    out = np.zeros((N, N))
    out[rows, cols] = sign * M[src_i, src_j]
    out[np.arange(N), np.arange(N)] = np.diag(M)[diag_sets].sum(axis=1)
    return out


def add_compound_fd(A, k: int, eps: float = 1e-6) -> np.ndarray:
    """Forward-difference estimate ``((I + eps*A)^(k) - I) / eps`` of the additive compound."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    M = _as_matrix(A)
    n = M.shape[0]
    C = mult_compound(np.eye(n) + eps * M, k)
    return (C - np.eye(C.shape[0])) / eps
