"""Builtin systems with fixed, documented parameters.

``THREE_POSITIVE_A`` is not Metzler, yet its third additive compound is, so
the flow keeps ``s_minus <= 2`` invariant in dimension 4.
"""
from __future__ import annotations

import numpy as np

from .dynamics import LinearSystem, NonlinearSystem

THREE_POSITIVE_A = np.array(
    [
        [-1.0, 2.0, -2.0, 1.0],
        [3.0, 0.0, 1.0, -1.0],
        [-4.0, 1.5, 2.0, 4.0],
        [1.0, -1.0, 2.0, 5.0],
    ]
)
THREE_POSITIVE_X0 = np.array([0.34, -0.54, -1.06, 0.49])

# symmetric, negative definite, and in the class M^2_3 (corner entries <= 0)
STABLE_LINEAR_A = np.array(
    [
        [-2.0, 1.0, -0.5],
        [1.0, -2.0, 1.0],
        [-0.5, 1.0, -2.0],
    ]
)

CYCLIC_DEFAULTS = {"n": 3, "delta": -1, "gain": 10.0, "hill": 10.0, "floor": 1e-3}
SCALAR_DEFAULTS = {"n": 4}


def three_positive() -> LinearSystem:
    return LinearSystem.constant(THREE_POSITIVE_A)


def stable_linear() -> LinearSystem:
    return LinearSystem.constant(STABLE_LINEAR_A)


def cyclic_feedback(n: int = 3, delta: int = -1, gain: float = 10.0, hill: float = 10.0,
                    floor: float = 1e-3) -> NonlinearSystem:
    """Cyclic feedback chain with Hill-type coupling from the last state to the first.

    ``x1' = gain * h(x_n) - x1`` for ``delta = +1`` (activation,
    ``h(u) = u^m / (1 + u^m)``) and ``x1' = gain / (1 + x_n^m) - x1`` for
    ``delta = -1`` (repression). The remaining states follow
    ``x_i' = x_{i-1} - x_i``. Every state stays in ``[0, gain]``; the box's
    lower bound is ``floor`` so the coupling derivative is strictly nonzero.
    With the defaults the repressive loop oscillates.
    """
    if delta not in (1, -1):
        raise ValueError("delta must be +1 or -1")
    if n < 2:
        raise ValueError("need at least two states")
    m = float(hill)

    def coupling(u):
        um = u**m
        if delta == 1:
            return gain * um / (1 + um)
        return gain / (1 + um)

    def coupling_slope(u):
        um = u**m
        s = gain * m * u ** (m - 1) / (1 + um) ** 2
        return s if delta == 1 else -s

    def f(t, x):
        x = np.asarray(x, dtype=float)
        dx = np.empty_like(x)
        dx[0] = coupling(max(x[-1], 0.0)) - x[0]
        dx[1:] = x[:-1] - x[1:]
        return dx

    def J(t, x):
        x = np.asarray(x, dtype=float)
        M = -np.eye(n)
        M[np.arange(1, n), np.arange(n - 1)] = 1.0
        M[0, n - 1] += coupling_slope(max(x[-1], 0.0))
        return M

    return NonlinearSystem(f, J, np.full(n, floor), np.full(n, gain), name=f"cyclic_feedback(delta={delta})")


def scalar_nonlinear(C=None, n: int = 4, bound: float = 3.0) -> NonlinearSystem:
    """``x' = C tanh(x)`` with a constant coupling matrix ``C``.

    The default ``C`` is tridiagonal with positive off-diagonals and a
    negative diagonal, so the system is k-cooperative for every k.
    """
    if C is None:
        C = -2.0 * np.eye(n) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    C = np.asarray(C, dtype=float)
    n = C.shape[0]

    def f(t, x):
        return C @ np.tanh(x)

    def J(t, x):
        return C * (1.0 / np.cosh(x) ** 2)[None, :]

    return NonlinearSystem(f, J, np.full(n, -bound), np.full(n, bound), name="scalar_nonlinear")


def builtin(name: str, **params):
    """Look up a builtin system by name."""
    if name == "cyclic_feedback":
        return cyclic_feedback(**{**CYCLIC_DEFAULTS, **params})
    if name == "scalar_nonlinear":
        return scalar_nonlinear(**{**SCALAR_DEFAULTS, **params})
    if name == "stable_linear":
        return stable_linear()
    if name == "three_positive":
        return three_positive()
    raise KeyError(f"unknown builtin system {name!r}")


# name -> (system factory, x0, t1, step); t0 is always 0
PRESETS = {
    "three_positive": (three_positive, THREE_POSITIVE_X0, 2.5, 0.01),
    "stable_linear": (stable_linear, np.array([1.0, -2.0, 3.0]), 40.0, 0.01),
    "oscillator": (lambda: cyclic_feedback(**CYCLIC_DEFAULTS), np.array([1.0, 1.5, 2.0]), 400.0, 0.01),
    "zero": (lambda: LinearSystem.constant(np.zeros((3, 3))), np.array([1.0, -1.0, 2.0]), 1.0, 0.01),
}
