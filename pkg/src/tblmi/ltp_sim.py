"""Time-domain oracles: RK4 simulation, Floquet analysis, periodic Riccati ODE.

Nothing here uses Toeplitz matrices or the SDP layer; system matrices are
only ever evaluated pointwise in time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .fourier import HarmonicTrajectory, PeriodicMatrix, reconstruct, sliding_fourier
from .harmonic_control import LtpSystem
from .toeplitz import n_operator, toeplitz_truncate, trace_tb

__all__ = [
    "Trajectory",
    "FloquetReport",
    "RiccatiError",
    "RiccatiSolution",
    "LiftingCheck",
    "integrate_ltp",
    "monodromy",
    "solve_riccati_periodic",
    "gain_sup_error",
    "lifting_roundtrip_check",
    "write_trajectory_csv",
]

_BLOWUP = 1e150


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray | None = None
    diverged: bool = False


@dataclass
class FloquetReport:
    monodromy: np.ndarray
    multipliers: np.ndarray
    exponents: np.ndarray
    stable: bool
    liouville_residual: float

    @property
    def max_real_exponent(self) -> float:
        return float(self.exponents.real.max())


class RiccatiError(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


@dataclass
class RiccatiSolution:
    times: np.ndarray
    P: np.ndarray
    K: np.ndarray
    residual: float
    history: list[float] = field(default_factory=list)


@dataclass
class LiftingCheck:
    time_residual: float
    phasor_residual: float
    times: np.ndarray
    x: np.ndarray
    x_harmonic: np.ndarray


def _rk4(f, y0, t0, dt, steps, blowup=_BLOWUP):
    ys = [y0]
    y = y0
    for i in range(steps):
        t = t0 + i * dt
        k1 = f(2 * i, y)
        k2 = f(2 * i + 1, y + 0.5 * dt * k1)
        k3 = f(2 * i + 1, y + 0.5 * dt * k2)
        k4 = f(2 * i + 2, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.abs(y).max() > blowup:
            return ys, True
        ys.append(y)
    return ys, False


def _closed_loop_samples(sys: LtpSystem, K: PeriodicMatrix | None, times) -> np.ndarray:
    A = sys.A.evaluate(times)
    if K is None:
        return A
    return A - sys.B.evaluate(times) @ K.evaluate(times)


def integrate_ltp(sys: LtpSystem, K: PeriodicMatrix | None, x0, horizon: float,
                  dt: float) -> Trajectory:
    """Classical RK4 on ``x' = (A(t) - B(t) K(t)) x`` from ``t = 0``."""
    if dt > sys.period / 256 * (1 + 1e-12):
        raise ValueError("dt must not exceed T/256")
    if K is not None and K.shape != (sys.n_u, sys.n):
        raise ValueError(f"gain must be {sys.n_u}x{sys.n}")
    steps = int(round(horizon / dt))
    half = np.arange(2 * steps + 1) * (dt / 2)
    M = _closed_loop_samples(sys, K, half)
    x0 = np.asarray(x0, dtype=float).reshape(sys.n)
    ys, diverged = _rk4(lambda i, y: M[i] @ y, x0, 0.0, dt, steps)
    states = np.array(ys)
    times = np.arange(states.shape[0]) * dt
    controls = None
    if K is not None:
        controls = -np.einsum("tij,tj->ti", K.evaluate(times), states)
    return Trajectory(times, states, controls, diverged)


def monodromy(sys: LtpSystem, K: PeriodicMatrix | None = None,
              dt: float | None = None) -> FloquetReport:
    """State-transition matrix over one period and its Floquet data.

    Exponents use the principal logarithm, so their imaginary parts lie in
    the fundamental strip ``|Im| <= omega/2``.
    """
    T = sys.period
    if dt is None:
        dt = T / 2048
    if dt > T / 512 * (1 + 1e-12):
        raise ValueError("dt must not exceed T/512")
    steps = int(np.ceil(T / dt - 1e-9))
    dt = T / steps
    M = _closed_loop_samples(sys, K, np.arange(2 * steps + 1) * (dt / 2))
    ys, _ = _rk4(lambda i, Y: M[i] @ Y, np.eye(sys.n), 0.0, dt, steps, blowup=np.inf)
    Phi = ys[-1]
    mult = np.linalg.eigvals(Phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = np.log(mult.astype(complex)) / T
    tr0 = trace_tb(sys.closed_loop(K))
    expected = np.exp(T * np.real(tr0))
    liou = abs(np.linalg.det(Phi) - expected) / abs(expected)
    return FloquetReport(Phi, mult, expo, bool(expo.real.max() < 0), float(liou))


def solve_riccati_periodic(sys: LtpSystem, Q: PeriodicMatrix, R: PeriodicMatrix,
                           n_periods: int = 60, dt: float | None = None,
                           tol: float = 1e-8) -> RiccatiSolution:
    """Periodic solution of ``-P' = A'P + PA - P B R^{-1} B' P + Q``.

    Integrates backward from ``P = 0`` one period at a time until the period
    map contracts, then returns ``P`` and ``K = R^{-1} B' P`` on a grid of
    ``[0, T)``.
    """
    if n_periods < 5:
        raise ValueError("use at least 5 periods")
    T = sys.period
    if dt is None:
        dt = T / 2048
    steps = int(np.ceil(T / dt - 1e-9))
    dt = T / steps
    grid = np.arange(2 * steps + 1) * (dt / 2)
    A = sys.A.evaluate(grid)
    B = sys.B.evaluate(grid)
    Qs = Q.evaluate(grid)
    Rinv = np.linalg.inv(R.evaluate(grid))
    S = B @ Rinv @ B.transpose(0, 2, 1)

    def rhs(i, P):
        # dP/ds with s = T - t running backward; index i counts half steps from t = T
        j = 2 * steps - i
        AP = A[j].T @ P
        return AP + AP.T - P @ S[j] @ P + Qs[j]

    P = np.zeros((sys.n, sys.n))
    history: list[float] = []
    for _ in range(n_periods):
        ys, bad = _rk4(rhs, P, 0.0, dt, steps)
        if bad:
            raise RiccatiError("Riccati solution diverged (system not stabilizable?)", history)
        res = float(np.abs(ys[-1] - P).max())
        history.append(res)
        P = ys[-1]
        if res < tol * (1.0 + np.abs(P).max()):
            traj = np.array(ys[::-1])[:-1]      # t = 0, dt, ..., T - dt
            traj = 0.5 * (traj + traj.transpose(0, 2, 1))
            times = np.arange(steps) * dt
            K = Rinv[0:2 * steps:2] @ B[0:2 * steps:2].transpose(0, 2, 1) @ traj
            return RiccatiSolution(times, traj, K, res, history)
    raise RiccatiError(f"period map did not contract within {n_periods} periods", history)


def gain_sup_error(K: PeriodicMatrix, ric: RiccatiSolution) -> float:
    """``sup_t |K(t) - K_ric(t)|_2 / sup_t |K_ric(t)|_2`` on the Riccati grid."""
    diff = K.evaluate(ric.times) - ric.K
    num = np.linalg.norm(diff, ord=2, axis=(1, 2)).max()
    den = np.linalg.norm(ric.K, ord=2, axis=(1, 2)).max()
    return float(num / den) if den > 0 else float(num)


def lifting_roundtrip_check(sys: LtpSystem, x0, K_order: int, u: PeriodicMatrix | None = None,
                            gain: PeriodicMatrix | None = None, horizon_periods: int = 5,
                            dt_divisor: int = 1024) -> LiftingCheck:
    """Compare a time simulation with the truncated harmonic LTI model.

    The time system ``x' = (A - B K) x + B u`` is simulated from ``t = 0``;
    the harmonic system ``X' = (Pi(A - BK) - N) X + F(Bu)`` starts at
    ``t = T`` from the sliding Fourier transform of the first period and is
    mapped back with :func:`reconstruct`. Both the phasor-level and the
    time-domain residuals are returned.
    """
    T = sys.period
    dt = T / dt_divisor
    n, K = sys.n, K_order
    steps = dt_divisor * (1 + horizon_periods)
    half = np.arange(2 * steps + 1) * (dt / 2)
    M = _closed_loop_samples(sys, gain, half)
    drive = np.zeros((half.size, n))
    if u is not None:
        drive = (sys.B.evaluate(half) @ u.evaluate(half)).reshape(half.size, n)
    ys, _ = _rk4(lambda i, y: M[i] @ y + drive[i], np.asarray(x0, float).reshape(n),
                 0.0, dt, steps, blowup=np.inf)
    x = np.array(ys)
    times = np.arange(steps + 1) * dt
    X_true = sliding_fourier(x, times, T, K)

    Acl = sys.closed_loop(gain)
    H = toeplitz_truncate(Acl, K).data - n_operator(n, K, sys.omega)
    forcing = np.zeros(n * (2 * K + 1), dtype=complex)
    if u is not None:
        # phasors of the periodic input term B(t) u(t), orders |k| <= K
        forcing = (sys.B @ u).stack(K)[:, :, 0].T.reshape(-1)
    # TB layout: index i*(2K+1) + (k+K)
    Z0 = X_true.phasors[0].T.reshape(-1)
    zs, _ = _rk4(lambda i, z: H @ z + forcing, Z0, 0.0, dt, steps - dt_divisor, blowup=np.inf)
    Z = np.array(zs).reshape(-1, n, 2 * K + 1).transpose(0, 2, 1)
    X_sim = HarmonicTrajectory(X_true.times, Z, T, real=True)
    x_hat = reconstruct(X_sim)
    x_ref = x[dt_divisor:]
    return LiftingCheck(float(np.abs(x_hat - x_ref).max()),
                        float(np.abs(Z - X_true.phasors).max()),
                        X_true.times, x_ref, x_hat)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    n = traj.states.shape[1]
    nu = 0 if traj.controls is None else traj.controls.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(nu)])
        for i, t in enumerate(traj.times):
            row = [t, *traj.states[i]]
            if nu:
                row += list(traj.controls[i])
            w.writerow([f"{v:.17g}" for v in row])
