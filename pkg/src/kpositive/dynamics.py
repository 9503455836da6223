"""Integration of linear, compound and nonlinear systems, sign-variation
traces along trajectories, and omega-limit classification.

Everything integrates with fixed-step classical Runge-Kutta (RK4). When the
horizon is not a multiple of ``step`` the step is shrunk slightly so the last
sample lands on ``t1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .certify import CertReport, K_POSITIVE, NOT_K_POSITIVE, STRONG_CANDIDATE, in_class_M, is_irreducible
from .compound import add_compound
from .signvar import ZERO_EPS, ConeLabel, classify_cone, in_Pk, in_V, s_minus, s_plus

DEFAULT_STEP = 0.01


class BlowUpError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


@dataclass
class LinearSystem:
    """``x' = A(t) x`` on the open interval ``interval``."""

    matrix_fn: Callable[[float], np.ndarray]
    n: int
    interval: tuple[float, float] = (-np.inf, np.inf)
    # times where A(t) may jump; integration restarts there
    breakpoints: tuple[float, ...] = ()

    @classmethod
    def constant(cls, A, interval=(-np.inf, np.inf)) -> "LinearSystem":
        M = np.array(A, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("system matrix must be square")
        return cls(lambda t: M, M.shape[0], interval)

    @classmethod
    def piecewise(cls, times: Sequence[float], matrices, interval=None) -> "LinearSystem":
        """Piecewise-constant ``A(t)``: ``matrices[i]`` holds on ``[times[i], times[i+1])``."""
        times = np.asarray(times, dtype=float)
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or len(mats) != len(times):
            raise ValueError("need one square matrix of common size per breakpoint")
        if np.any(np.diff(times) <= 0):
            raise ValueError("breakpoint times must be strictly increasing")

        def A(t):
            i = int(np.searchsorted(times, t, side="right")) - 1
            return mats[min(max(i, 0), len(mats) - 1)]

        return cls(A, mats.shape[1], interval or (-np.inf, np.inf), tuple(times[1:]))

    def pieces(self, t0: float, t1: float):
        """Split ``[t0, t1]`` at the breakpoints; each piece carries a matrix function
        that is continuous on its closed interval."""
        cuts = [b for b in self.breakpoints if t0 < b < t1]
        edges = [t0, *cuts, t1]
        out = []
        for a, b in zip(edges, edges[1:]):
            if cuts:
                M = self.matrix_fn((a + b) / 2)
                out.append((a, b, lambda t, M=M: M))
            else:
                out.append((a, b, self.matrix_fn))
        return out

    def jacobian(self, t, x):
        return self.matrix_fn(t)

    def vector_field(self, t, x):
        return self.matrix_fn(t) @ x


@dataclass
class NonlinearSystem:
    """``x' = f(t, x)`` with Jacobian ``J(t, x)`` on the box ``[lower, upper]``."""

    vector_field: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Callable[[float, np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ValueError("state box must satisfy lower <= upper")

    @property
    def n(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    integrator: str = "rk4"
    step: float = DEFAULT_STEP

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or len(self.states) != len(self.times):
            raise ValueError("states must be a (samples, n) array matching times")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)


def _grid(t0: float, t1: float, step: float) -> tuple[int, float]:
    if step <= 0:
        raise ValueError("step must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    span = t1 - t0
    nsteps = max(int(ceil(span / step - 1e-9)), 0)
    return nsteps, (span / nsteps if nsteps else 0.0)


def _rk4(fun, y0: np.ndarray, t0: float, t1: float, step: float, keep: bool):
    nsteps, h = _grid(t0, t1, step)
    y = np.array(y0, dtype=float)
    times = [t0]
    states = [y.copy()] if keep else None
    for i in range(nsteps):
        t = t0 + i * h
        # overflow shows up as a non-finite state and is reported below
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = fun(t, y)
            k2 = fun(t + h / 2, y + h / 2 * k1)
            k3 = fun(t + h / 2, y + h / 2 * k2)
            k4 = fun(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state after t={t:.6g}", t)
        if keep:
            times.append(t0 + (i + 1) * h if i + 1 < nsteps else t1)
            states.append(y.copy())
    return (np.array(times), np.array(states)) if keep else y


def _check_window(sys: LinearSystem, t0: float, t1: float) -> None:
    a, b = sys.interval
    if not a < t0 <= t1 < b:
        raise ValueError(f"[{t0}, {t1}] must lie inside the system interval ({a}, {b})")


def _rk4_pieces(sys: LinearSystem, rhs, y0, t0: float, t1: float, step: float, keep: bool):
    """RK4 restarted at each breakpoint of a linear system; ``rhs(A, y)`` gives ``y'``."""
    if step <= 0:
        raise ValueError("step must be positive")
    y = np.array(y0, dtype=float)
    times, states = [np.array([t0])], [y[None].copy()]
    for a, b, A in sys.pieces(t0, t1):
        res = _rk4(lambda t, v: rhs(A(t), v), y, a, b, step, keep)
        if keep:
            times.append(res[0][1:])
            states.append(res[1][1:])
            y = res[1][-1]
        else:
            y = res
    if keep:
        return np.concatenate(times), np.concatenate(states)
    return y


def transition_matrix(sys: LinearSystem, t0: float, t1: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """Transition matrix from ``t0`` to ``t1``, from ``Phi' = A(t) Phi`` with ``Phi(t0) = I``."""
    _check_window(sys, t0, t1)
    return _rk4_pieces(sys, lambda A, P: A @ P, np.eye(sys.n), t0, t1, step, keep=False)


def compound_flow(sys: LinearSystem, k: int, t0: float, t1: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """Integrate ``Y' = A^[k](t) Y``, ``Y(t0) = I``: the k-th compound of the transition matrix."""
    _check_window(sys, t0, t1)
    if not 1 <= k <= sys.n:
        raise ValueError(f"k must lie in [1, {sys.n}], got {k}")
    size = add_compound(np.zeros((sys.n, sys.n)), k).shape[0]
    return _rk4_pieces(sys, lambda A, Y: add_compound(A, k) @ Y, np.eye(size), t0, t1, step, keep=False)


def simulate(sys, x0, t0: float, t1: float, step: float = DEFAULT_STEP) -> Trajectory:
    """Fixed-step RK4 trajectory of a linear or nonlinear system, sampled every step."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"initial state must have length {sys.n}")
    if isinstance(sys, NonlinearSystem) and not sys.contains(x0):
        raise ValueError("initial state lies outside the state box")
    if isinstance(sys, LinearSystem):
        times, states = _rk4_pieces(sys, lambda A, x: A @ x, x0, t0, t1, step, keep=True)
    else:
        times, states = _rk4(sys.vector_field, x0, t0, t1, step, keep=True)
    return Trajectory(times, states, "rk4", step)


@dataclass
class SignTrace:
    times: np.ndarray
    s_minus: np.ndarray
    s_plus: np.ndarray
    labels: list[ConeLabel | None]

    def rows(self):
        return list(zip(self.times, self.s_minus, self.s_plus, self.labels))

    def cone_sequence(self) -> list[ConeLabel | None]:
        """Visited cones with consecutive repeats merged."""
        seq = []
        for lab in self.labels:
            if not seq or seq[-1] != lab:
                seq.append(lab)
        return seq


def signvar_trace(traj: Trajectory, eps: float = ZERO_EPS) -> SignTrace:
    sm = np.array([s_minus(x, eps) for x in traj.states])
    sp = np.array([s_plus(x, eps) for x in traj.states])
    labels = [classify_cone(x, eps) for x in traj.states]
    return SignTrace(traj.times.copy(), sm, sp, labels)


@dataclass
class ChainReport:
    ok: bool
    strict_drops: int
    terminal_in_V: bool
    violations: list[str] = field(default_factory=list)


def monotone_chain_check(traj: Trajectory, k: int, eps: float = ZERO_EPS) -> ChainReport:
    """Check the interleaved chain s-(x0) >= s+(x1) >= s-(x1) >= s+(x2) >= ... along samples.

    Also checks that ``x0`` has at most ``k - 1`` variations, that at most
    ``k - 1`` links of the chain are strict, and that the final sample lies
    in the set where both variation counts agree. Violations are returned,
    not raised.
    """
    sm = [s_minus(x, eps) for x in traj.states]
    sp = [s_plus(x, eps) for x in traj.states]
    violations = []
    if sm[0] > k - 1:
        violations.append(f"initial state has s_minus={sm[0]} > {k - 1}")
    strict = 0
    for i in range(1, len(sm)):
        t = traj.times[i]
        if sp[i] > sm[i - 1]:
            violations.append(f"t={t:.6g}: s_plus={sp[i]} > previous s_minus={sm[i - 1]}")
        elif sp[i] < sm[i - 1]:
            strict += 1
        if sm[i] < sp[i]:
            strict += 1
    if strict > k - 1:
        violations.append(f"{strict} strict inequalities exceed k-1={k - 1}")
    terminal = in_V(traj.states[-1], eps)
    if not terminal:
        violations.append("final sample is not in V")
    return ChainReport(not violations, strict, terminal, violations)


def variational_matrix(sys, xp, xq, t: float = 0.0, nodes: int = 8) -> np.ndarray:
    """Average of the Jacobian along the segment from ``xq`` to ``xp`` (Gauss-Legendre)."""
    if nodes < 2:
        raise ValueError("need at least 2 quadrature nodes")
    xp, xq = np.asarray(xp, dtype=float), np.asarray(xq, dtype=float)
    r, w = np.polynomial.legendre.leggauss(nodes)
    r, w = (r + 1) / 2, w / 2
    return sum(wi * np.asarray(sys.jacobian(t, ri * xp + (1 - ri) * xq), dtype=float) for ri, wi in zip(r, w))


def secant_gain(f, fprime, p: float, q: float, switch: float = 1e-9) -> float:
    """Slope of ``f`` between ``q`` and ``p``; falls back to ``fprime`` when they (nearly) coincide.

    Below ``|p - q| <= switch`` the derivative at the midpoint is used, which
    agrees with the secant to O((p - q)^2) and avoids cancellation.
    """
    if abs(p - q) <= switch:
        return float(fprime((p + q) / 2))
    return float((f(p) - f(q)) / (p - q))


def box_grid(lower, upper, per_axis: int) -> np.ndarray:
    """Tensor grid with ``per_axis`` points per coordinate, shape (per_axis**n, n)."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class CoopReport:
    k: int
    cooperative: bool
    strong_candidate: bool
    n_points: int
    witness: dict | None = None
    note: str = "sampling-based evidence at grid points, not a proof"

    def to_cert_report(self, n: int) -> CertReport:
        verdict = NOT_K_POSITIVE
        if self.cooperative:
            verdict = STRONG_CANDIDATE if self.strong_candidate else K_POSITIVE
        wit = {self.k: self.witness} if self.witness else {}
        return CertReport(n, {self.k: verdict}, wit, {}, True, [self.note])


def certify_k_cooperative(
    sys: NonlinearSystem,
    k: int,
    grid=None,
    times: Sequence[float] = (0.0,),
    eps: float = ZERO_EPS,
    per_axis: int = 10,
) -> CoopReport:
    """Check that the Jacobian lies in ``M^k_n`` at every grid point and sample time.

    ``grid`` is an explicit (m, n) array of states; by default a tensor grid
    of the state box. The strong flag requires the k-th additive compound of
    the Jacobian to be irreducible at every grid point.
    """
    pts = box_grid(sys.lower, sys.upper, per_axis) if grid is None else np.atleast_2d(grid)
    if pts.size == 0 or len(times) == 0:
        raise ValueError("empty sampling grid")
    strong = True
    for t in times:
        for z in pts:
            J = np.asarray(sys.jacobian(t, z), dtype=float)
            c = in_class_M(J, k, eps)
            if not c.ok:
                wit = {"t": float(t), "state": z.tolist(), **c.witness.to_dict()}
                return CoopReport(k, False, False, len(pts) * len(times), wit)
            if strong and not is_irreducible(add_compound(J, k), eps):
                strong = False
    return CoopReport(k, True, strong, len(pts) * len(times))


@dataclass
class InvarianceReport:
    ok: bool
    violations: list[dict] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)


def invariance_check(
    sys,
    k: int,
    pairs,
    horizon: float,
    step: float = DEFAULT_STEP,
    eps: float = ZERO_EPS,
    t0: float = 0.0,
) -> InvarianceReport:
    """Simulate pairs of initial states and check that their difference keeps s- <= k-1.

    Pairs whose initial difference already has more than ``k - 1`` variations
    are skipped and listed in ``skipped``.
    """
    violations, skipped = [], []
    for idx, (p, q) in enumerate(pairs):
        d0 = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
        if not in_Pk(d0, k, "minus", eps):
            skipped.append(idx)
            continue
        tp = simulate(sys, p, t0, t0 + horizon, step)
        tq = simulate(sys, q, t0, t0 + horizon, step)
        for t, a, b in zip(tp.times, tp.states, tq.states):
            sm = s_minus(a - b, eps)
            if sm > k - 1:
                violations.append({"pair": idx, "t": float(t), "s_minus": sm})
                break
    return InvarianceReport(not violations, violations, skipped)


EQUILIBRIUM = "Equilibrium"
CLOSED_ORBIT = "ClosedOrbit"
UNKNOWN = "Unknown"


@dataclass
class OmegaVerdict:
    kind: str
    period: float | None = None
    point: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.period is not None:
            out["period"] = self.period
        if self.point is not None:
            out["point"] = [float(v) for v in self.point]
        out["diagnostics"] = self.diagnostics
        return out


def _first_period_guess(signal: np.ndarray, dt: float) -> float | None:
    """Lag of the first autocorrelation peak after the first zero crossing."""
    s = signal - signal.mean()
    if not np.any(s):
        return None
    m = len(s)
    spec = np.fft.rfft(s, 2 * m)
    ac = np.fft.irfft(spec * np.conj(spec))[:m]
    ac /= ac[0]
    neg = np.flatnonzero(ac < 0)
    if neg.size == 0:
        return None
    start = neg[0]
    if start >= m // 2:
        return None
    lag = start + int(np.argmax(ac[start : m // 2 + 1]))
    if ac[lag] < 0.5:
        return None
    return lag * dt


def _refine_return(spline: CubicSpline, t_ref: float, guess: float, t_max: float) -> float | None:
    """Bisection on the derivative of the squared return distance near ``t_ref + guess``."""
    x_ref = spline(t_ref)
    d = spline.derivative()

    def g(tau):
        return float(np.dot(spline(t_ref + tau) - x_ref, d(t_ref + tau)))

    lo, hi = 0.8 * guess, 1.2 * guess
    if t_ref + hi > t_max:
        return None
    taus = np.linspace(lo, hi, 41)
    vals = [g(tau) for tau in taus]
    dist = [np.linalg.norm(spline(t_ref + tau) - x_ref) for tau in taus]
    best = None
    for i in range(len(taus) - 1):
        if vals[i] < 0 <= vals[i + 1]:
            if best is None or min(dist[i], dist[i + 1]) < best[0]:
                best = (min(dist[i], dist[i + 1]), taus[i], taus[i + 1])
    if best is None:
        return None
    _, a, b = best
    for _ in range(60):
        mid = (a + b) / 2
        if g(mid) < 0:
            a = mid
        else:
            b = mid
    return (a + b) / 2


def classify_omega_limit(
    traj: Trajectory,
    sys=None,
    eq_tol: float = 1e-6,
    orbit_tol: float = 1e-4,
    period_tol: float = 1e-3,
    discard: float = 0.5,
    eps: float = ZERO_EPS,
    n_refs: int = 5,
) -> OmegaVerdict:
    """Classify the omega-limit set of a sampled trajectory as an equilibrium or a closed orbit.

    The first ``discard`` fraction of samples is dropped as transient.

    * Equilibrium: at the last sample the vector field norm is below
      ``eq_tol * (1 + |x|)`` and the state moved less than that over the
      final tenth of the retained window.
    * ClosedOrbit: a period guess from the autocorrelation of the most
      variable coordinate is refined, at ``n_refs`` reference times, to the
      nearest return time. All returns must come within
      ``orbit_tol * diameter`` and all period estimates must agree within
      ``period_tol`` (relative).
    * Unknown otherwise, including too-short input.

    When ``sys`` is omitted, velocities come from a cubic spline of the
    samples. The diagnostics record whether some velocity sample had at most
    one sign variation (the hypothesis needed for the closed-orbit
    alternative) and the smallest velocity seen (nearest-equilibrium proxy).
    """
    m = len(traj)
    start = int(m * discard)
    if m - start < 8:
        return OmegaVerdict(UNKNOWN, diagnostics={"reason": "insufficient samples"})
    times, states = traj.times[start:], traj.states[start:]
    spline = CubicSpline(times, states, axis=0)
    if sys is not None:
        vel = np.array([np.asarray(sys.vector_field(t, x), dtype=float) for t, x in zip(times, states)])
    else:
        vel = spline(times, 1)
    speed = np.linalg.norm(vel, axis=1)
    hyp = bool(any(s_minus(v, eps) <= 1 for v in vel if np.any(np.abs(v) > eps)))
    diag = {
        "velocity_in_P2": hyp,
        "min_speed": float(speed.min()),
        "terminal_speed": float(speed[-1]),
    }

    x_end = states[-1]
    tol = eq_tol * (1 + np.linalg.norm(x_end))
    window = states[-max(len(states) // 10, 2):]
    drift = float(np.max(np.linalg.norm(window - x_end, axis=1)))
    diag["terminal_drift"] = drift
    if speed[-1] < tol and drift < tol:
        return OmegaVerdict(EQUILIBRIUM, point=x_end.copy(), diagnostics=diag)

    diameter = float(np.max(np.ptp(states, axis=0)))
    diag["diameter"] = diameter
    if diameter <= tol:
        diag["reason"] = "slow drift without convergence"
        return OmegaVerdict(UNKNOWN, diagnostics=diag)
    coord = int(np.argmax(np.var(states, axis=0)))
    dt = float(np.median(np.diff(times)))
    guess = _first_period_guess(states[:, coord], dt)
    if guess is None:
        diag["reason"] = "no recurrence in autocorrelation"
        return OmegaVerdict(UNKNOWN, diagnostics=diag)

    t_last = times[-1] - 1.25 * guess
    if t_last <= times[0]:
        diag["reason"] = "window shorter than the period guess"
        return OmegaVerdict(UNKNOWN, diagnostics=diag)
    periods, gaps = [], []
    for t_ref in np.linspace(times[0], t_last, n_refs):
        tau = _refine_return(spline, t_ref, guess, times[-1])
        if tau is None:
            continue
        periods.append(tau)
        gaps.append(float(np.linalg.norm(spline(t_ref + tau) - spline(t_ref))))
    diag["period_guess"] = guess
    diag["period_samples"] = periods
    diag["return_gaps"] = gaps
    if len(periods) < n_refs:
        diag["reason"] = "near-return not found at every reference time"
        return OmegaVerdict(UNKNOWN, diagnostics=diag)
    T = float(np.mean(periods))
    spread = (max(periods) - min(periods)) / T
    diag["period_spread"] = spread
    if max(gaps) < orbit_tol * diameter and spread < period_tol:
        return OmegaVerdict(CLOSED_ORBIT, period=T, diagnostics=diag)
    diag["reason"] = "returns not consistent with a closed orbit"
    return OmegaVerdict(UNKNOWN, diagnostics=diag)


def project_to_plane(traj: Trajectory, basis) -> np.ndarray:
    """Least-squares coordinates of each state in ``span(basis)``; shape (samples, 2)."""
    B = np.column_stack([np.asarray(b, dtype=float) for b in basis])
    if B.shape != (traj.states.shape[1], 2):
        raise ValueError("need two basis vectors of the state dimension")
    if np.linalg.matrix_rank(B) < 2:
        raise ValueError("basis vectors are linearly dependent")
    coords, *_ = np.linalg.lstsq(B, traj.states.T, rcond=None)
    return coords.T
