"""Static certificates: Metzler and sign-pattern classes, sign regularity,
total positivity, oscillatory spectra, irreducibility and per-k verdicts.

Matrix positions reported to the user (witnesses) are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .compound import _as_matrix, add_compound, check_size, mult_compound, submatrix_scales
from .signvar import ZERO_EPS, s_minus, s_plus

K_POSITIVE = "k_positive"
STRONG_CANDIDATE = "strongly_k_positive_candidate"
NOT_K_POSITIVE = "not_k_positive"


@dataclass(frozen=True)
class Witness:
    row: int
    col: int
    value: float
    rule: str = ""

    def __str__(self) -> str:
        return f"a{self.row}{self.col}={self.value:g}"

    def to_dict(self) -> dict:
        return {"row": self.row, "col": self.col, "value": self.value, "rule": self.rule}


@dataclass(frozen=True)
class Check:
    """Boolean verdict with an optional witness entry; truthy iff ``ok``."""

    ok: bool
    witness: Witness | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_metzler(A, eps: float = ZERO_EPS) -> Check:
    """All off-diagonal entries >= -eps. On failure the witness is the most negative one."""
    M = _as_matrix(A)
    off = M.copy()
    np.fill_diagonal(off, np.inf)
    i, j = np.unravel_index(np.argmin(off), off.shape)
    if M.shape[0] == 1 or off[i, j] >= -eps:
        return Check(True)
    return Check(False, Witness(int(i) + 1, int(j) + 1, float(M[i, j]), "off-diagonal >= 0"))


def pattern_rules(n: int, k: int) -> dict[tuple[int, int], str]:
    """Required sign of each constrained off-diagonal entry for class ``M^k_n``.

    Maps 0-based ``(i, j)`` to ``">=0"``, ``"<=0"`` or ``"=0"``; unlisted entries
    are unconstrained.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    rules = {}
    if k == n:
        return rules
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = abs(i - j)
            if k == 1:
                rules[i, j] = ">=0"
            elif k == n - 1:
                rules[i, j] = ">=0" if d % 2 == 1 else "<=0"
            elif d == 1:
                rules[i, j] = ">=0"
            elif d == n - 1:
                rules[i, j] = ">=0" if k % 2 == 1 else "<=0"
            else:
                rules[i, j] = "=0"
    return rules


def in_class_M(A, k: int, eps: float = ZERO_EPS) -> Check:
    """Membership in the sign-pattern class whose k-th additive compound is Metzler.

    k = 1 is the Metzler test, k = n always holds, k = n-1 alternates signs
    with the distance from the diagonal, and 2 <= k <= n-2 requires a
    tridiagonal matrix with nonnegative off-diagonals whose corner entries
    carry the sign ``(-1)**(k-1)``. The witness is the first violation in
    row-major order.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    for (i, j), rule in sorted(pattern_rules(n, k).items()):
        a = M[i, j]
        bad = (
            (rule == ">=0" and a < -eps)
            or (rule == "<=0" and a > eps)
            or (rule == "=0" and abs(a) > eps)
        )
        if bad:
            return Check(False, Witness(i + 1, j + 1, float(a), rule))
    return Check(True)


def metzler_equiv_check(A, k: int, eps: float = ZERO_EPS) -> bool:
    """Self-test: Metzler-ness of the additive compound agrees with the sign-pattern class."""
    return bool(is_metzler(add_compound(A, k), eps)) == bool(in_class_M(A, k, eps))


def minor_signs(A, k: int, eps: float = ZERO_EPS) -> np.ndarray:
    """Sign (-1/0/+1) of every order-k minor, with a scale-aware zero band.

    A minor counts as zero when ``|m| <= eps * scale``; ``scale`` is the
    product of the row max-abs values of its submatrix.
    """
    M = _as_matrix(A, square=False)
    C = mult_compound(M, k)
    scale = submatrix_scales(M, k)
    s = np.sign(C).astype(int)
    s[np.abs(C) <= eps * scale] = 0
    return s


def is_SR(A, k: int, strict: bool = False, eps: float = ZERO_EPS) -> bool:
    """Sign regularity of order k: all order-k minors weakly (or, if strict, strictly) share a sign."""
    M = _as_matrix(A, square=False)
    if not 1 <= k <= min(M.shape):
        raise ValueError(f"k must lie in [1, {min(M.shape)}], got {k}")
    s = minor_signs(M, k, eps)
    if strict:
        return bool(np.all(s == 1) or np.all(s == -1))
    return bool(np.all(s >= 0) or np.all(s <= 0))


def is_TN(A, eps: float = ZERO_EPS) -> bool:
    M = _as_matrix(A, square=False)
    return all(np.all(minor_signs(M, k, eps) >= 0) for k in range(1, min(M.shape) + 1))


def is_TP(A, eps: float = ZERO_EPS) -> bool:
    M = _as_matrix(A, square=False)
    return all(np.all(minor_signs(M, k, eps) > 0) for k in range(1, min(M.shape) + 1))


def is_oscillatory(A, eps: float = ZERO_EPS) -> bool:
    """TN and the (n-1)-th power is TP; n-1 bounds the exponent needed for any oscillatory matrix."""
    M = _as_matrix(A)
    n = M.shape[0]
    if not is_TN(M, eps):
        return False
    return is_TP(np.linalg.matrix_power(M, max(n - 1, 1)), eps)


def gaussian_tp(n: int, y: float) -> np.ndarray:
    """Gaussian kernel matrix with entries exp(-(i-j)^2 y); totally positive for y > 0."""
    if y <= 0:
        raise ValueError("y must be positive")
    d = np.subtract.outer(np.arange(n), np.arange(n))
    return np.exp(-(d**2) * y)


class StructureError(ValueError):
    """The spectrum contradicts the oscillatory hypothesis."""


@dataclass
class EigenStructure:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    signvar_per_vector: list[tuple[int, int]]
    combination_violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        n = len(self.eigenvalues)
        ordered = all(sv == (i, i) for i, sv in enumerate(self.signvar_per_vector))
        return (
            ordered
            and not self.combination_violations
            and bool(np.all(self.eigenvalues > 0))
            and bool(np.all(np.diff(self.eigenvalues) < 0) or n == 1)
        )


def eigen_structure(
    A,
    eps: float = ZERO_EPS,
    n_samples: int = 100,
    seed: int = 0,
    rel_gap: float = 1e-9,
) -> EigenStructure:
    """Eigen-decomposition of an oscillatory matrix, sorted by decreasing eigenvalue.

    Eigenvectors are unit-norm with a positive first nonzero entry. For
    ``n_samples`` random coefficient draws over a random index window
    ``[i, j]`` the combination ``sum c_l u^l`` is checked to have between
    ``i - 1`` and ``j - 1`` sign variations; failures are recorded, not raised.

    Raises
    ------
    StructureError
        If the eigenvalues are complex or not distinct.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    w, V = np.linalg.eig(M)
    scale = max(np.abs(w).max(), 1.0)
    if np.any(np.abs(w.imag) > 1e-9 * scale):
        raise StructureError("complex eigenvalues: input is not oscillatory")
    w, V = w.real, V.real
    order = np.argsort(-w)
    w, V = w[order], V[:, order]
    if n > 1 and np.any(np.abs(np.diff(w)) <= rel_gap * scale):
        raise StructureError("repeated eigenvalues: input is not oscillatory")
    V = V / np.linalg.norm(V, axis=0)
    for c in range(n):
        col = V[:, c]
        lead = col[np.abs(col) > eps]
        if lead.size and lead[0] < 0:
            V[:, c] = -col
    stats = [(s_minus(V[:, c], eps), s_plus(V[:, c], eps)) for c in range(n)]

    rng = np.random.default_rng(seed)
    violations = []
    for _ in range(n_samples):
        i, j = sorted(rng.integers(1, n + 1, size=2))
        coef = rng.standard_normal(j - i + 1)
        z = V[:, i - 1 : j] @ coef
        z = z / np.linalg.norm(z)
        lo, hi = s_minus(z, eps), s_plus(z, eps)
        if not (i - 1 <= lo <= hi <= j - 1):
            violations.append({"i": int(i), "j": int(j), "s_minus": lo, "s_plus": hi})
    return EigenStructure(w, V, stats, violations)


def is_irreducible(A, eps: float = ZERO_EPS) -> bool:
    """Strong connectivity of the digraph with an edge j -> k whenever |a_jk| > eps (j != k).

    A 1 x 1 matrix counts as irreducible only when its entry is nonzero.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    if n == 1:
        return bool(abs(M[0, 0]) > eps)
    adj = np.abs(M) > eps
    np.fill_diagonal(adj, False)
    ncomp, _ = connected_components(adj.astype(int), directed=True, connection="strong")
    return ncomp == 1


@dataclass
class CertReport:
    """Per-k positivity verdicts for a (sampled) system matrix."""

    n: int
    verdicts: dict[int, str]
    witnesses: dict[int, dict]
    consistency_flags: dict[str, bool]
    route_agreement: bool
    notes: list[str] = field(default_factory=list)

    def k_positive(self, k: int) -> bool:
        return self.verdicts[k] != NOT_K_POSITIVE

    def strong_candidate(self, k: int) -> bool:
        return self.verdicts[k] == STRONG_CANDIDATE

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "verdicts": {str(k): v for k, v in sorted(self.verdicts.items())},
            "witnesses": {str(k): w for k, w in sorted(self.witnesses.items())},
            "consistency_flags": dict(self.consistency_flags),
            "route_agreement": self.route_agreement,
            "notes": list(self.notes),
        }


def _as_samples(A) -> list[np.ndarray]:
    arr = np.asarray(A, dtype=float)
    if arr.ndim == 2:
        return [_as_matrix(arr)]
    if arr.ndim == 3:
        return [_as_matrix(a) for a in arr]
    raise ValueError("expected a matrix or a stack of matrix samples of common dimension")


def certify_system(
    A,
    eps: float = ZERO_EPS,
    subintervals: Sequence[Sequence[int]] | None = None,
) -> CertReport:
    """Per-k positivity verdicts for a constant matrix or a list of time samples.

    A k is k-positive when every sample lies in ``M^k_n``. It is reported as
    a strong candidate when, in addition, each subinterval (a group of
    sample indices; default: every pair of consecutive samples) contains a
    sample whose k-th additive compound is irreducible. This sampled test
    stands in for irreducibility on sets of positive measure.
    """
    samples = _as_samples(A)
    n = samples[0].shape[0]
    if subintervals is None:
        if len(samples) == 1:
            subintervals = [[0]]
        else:
            subintervals = [[i, i + 1] for i in range(len(samples) - 1)]
    verdicts, witnesses = {}, {}
    agree = True
    for k in range(1, n + 1):
        check_size(n, k)
        ok = True
        for idx, S in enumerate(samples):
            c = in_class_M(S, k, eps)
            if bool(is_metzler(add_compound(S, k), eps)) != c.ok:
                agree = False
            if not c.ok and ok:
                ok = False
                witnesses[k] = {"sample": idx, **c.witness.to_dict()}
        if not ok:
            verdicts[k] = NOT_K_POSITIVE
            continue
        irreducible = [is_irreducible(add_compound(S, k), eps) for S in samples]
        strong = all(any(irreducible[i] for i in group) for group in subintervals)
        verdicts[k] = STRONG_CANDIDATE if strong else K_POSITIVE

    pos = {k: verdicts[k] != NOT_K_POSITIVE for k in verdicts}
    all_pos = all(pos.values())
    flags = {"all_k_positive": all_pos}
    if n >= 2:
        flags["one_and_two_positive"] = pos[1] and pos[2]
        if flags["one_and_two_positive"] and not all_pos:
            agree = False
    odd = [i for i in range(1, n - 1) if i % 2 == 1 and pos[i]]
    even = [j for j in range(1, n - 1) if j % 2 == 0 and pos[j]]
    flags["odd_and_even_positive"] = bool(odd and even)
    if flags["odd_and_even_positive"] and not all_pos:
        agree = False
    notes = [
        "strong verdicts are candidates: irreducibility is tested only at the given samples"
    ]
    return CertReport(n, verdicts, witnesses, flags, agree, notes)
