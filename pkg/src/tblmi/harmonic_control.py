"""Harmonic analysis and synthesis pipelines for linear time-periodic systems.

All pipelines follow the same recipe: band the system entries at ``p``,
band the unknown at ``q``, truncate every TB-LMI at ``m`` and solve the
resulting finite SDP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .fourier import PeriodicMatrix, phasors_from_samples
from .lmi import (UnknownSpec, assemble_truncated, lqr_block_expr, lyapunov_expr,
                  positivity_expr, statefb_expr)
from .sdp import SdpProblem, SdpSolution, solve
from .toeplitz import n_operator, toeplitz_truncate, trace_tb

__all__ = [
    "LtpSystem",
    "SynthesisError",
    "SynthesisResult",
    "SpectrumResult",
    "CertificateResult",
    "spectrum",
    "stability_certificate",
    "lqr_synthesize",
    "statefb_synthesize",
    "convergence_sweep",
    "gain_distance",
    "trace_monotone",
]


@dataclass(frozen=True)
class LtpSystem:
    """``x' = A(t) x + B(t) u`` with a shared period."""

    A: PeriodicMatrix
    B: PeriodicMatrix
    band_record: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.A.n_rows != self.A.n_cols:
            raise ValueError("A must be square")
        if self.B.n_rows != self.A.n_rows:
            raise ValueError("B must have as many rows as A")
        if abs(self.A.period - self.B.period) > 1e-12 * self.A.period:
            raise ValueError("A and B must share the period")
        if not (self.A.real and self.B.real):
            raise ValueError("A and B must be real-valued functions")

    @property
    def n(self) -> int:
        return self.A.n_rows

    @property
    def n_u(self) -> int:
        return self.B.n_cols

    @property
    def period(self) -> float:
        return self.A.period

    @property
    def omega(self) -> float:
        return self.A.omega

    def banded(self, p: int | None) -> LtpSystem:
        if p is None:
            return self
        record = dict(self.band_record)
        record["p"] = p if "p" not in record else min(p, record["p"])
        return LtpSystem(self.A.band(p), self.B.band(p), record)

    def closed_loop(self, K: PeriodicMatrix | None) -> PeriodicMatrix:
        if K is None:
            return self.A
        return self.A - self.B @ K


class SynthesisError(RuntimeError):
    """Raised when a synthesis SDP has no acceptable solution."""

    def __init__(self, message: str, status: str, orders: tuple, solution: SdpSolution | None = None):
        super().__init__(message)
        self.status = status
        self.orders = orders
        self.solution = solution


@dataclass
class SynthesisResult:
    P: PeriodicMatrix
    K: PeriodicMatrix
    trace_value: float
    orders: tuple[int, int, int]
    solution: SdpSolution
    certificate: np.ndarray
    approximate: bool = False
    solve_time: float = 0.0


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    pollution: np.ndarray
    strip: np.ndarray            # boolean mask over eigenvalues
    omega: float
    n: int

    @property
    def strip_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.strip]

    @property
    def fundamental(self) -> np.ndarray:
        """The ``n`` strip eigenvalues least affected by the truncation edges."""
        idx = np.flatnonzero(self.strip)
        idx = idx[np.argsort(self.pollution[idx], kind="stable")][:self.n]
        ev = self.eigenvalues[idx]
        return ev[np.lexsort((ev.imag, ev.real))]


@dataclass
class CertificateResult:
    verdict: str                 # certified-stable | no-certificate | solver-failure
    P: PeriodicMatrix | None
    solution: SdpSolution
    orders: tuple[int, int, int]
    pointwise_max_eig: float = float("nan")


def _as_periodic(W, period: float) -> PeriodicMatrix:
    if isinstance(W, PeriodicMatrix):
        return W
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return PeriodicMatrix.constant(W, period)


def _orders(m: int, p: int | None, q: int | None) -> tuple[int, int, int]:
    p = 2 * m if p is None else p
    q = 2 * m if q is None else q
    if min(p, q, m) < 0:
        raise ValueError("orders must be non-negative")
    return p, q, m


def spectrum(sys: LtpSystem, m: int, p: int | None = None) -> SpectrumResult:
    """Eigenvalues of ``Pi_m(A) - N`` with a fundamental-strip selection.

    ``pollution`` is the share of each eigenvector's mass carried by the
    harmonics ``|k| > m/2``; eigenvalues born at the truncation edges score
    close to 1.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    A = sys.A if p is None else sys.A.band(p)
    M = toeplitz_truncate(A, m).data - n_operator(sys.n, m, sys.omega)
    w, v = np.linalg.eig(M)
    ks = np.tile(np.arange(-m, m + 1), sys.n)
    mass = np.abs(v) ** 2
    edge = np.abs(ks) > m / 2
    pollution = mass[edge].sum(axis=0) / mass.sum(axis=0)
    strip = np.abs(w.imag) <= sys.omega / 2 + 1e-12
    return SpectrumResult(w, pollution, strip, sys.omega, sys.n)


def stability_certificate(sys: LtpSystem, p: int, q: int, m: int,
                          margin: float = 1e-6) -> CertificateResult:
    """Search for a truncated harmonic Lyapunov certificate.

    The verdict is one-sided: ``no-certificate`` does not mean unstable.
    """
    p, q, m = _orders(m, p, q)
    bs = sys.banded(p)
    P = UnknownSpec("P", sys.n, sys.n, q, sys.period)
    lyap = assemble_truncated(lyapunov_expr(bs.A), P, m, max_band=p, name="lyapunov")
    norm = assemble_truncated(positivity_expr(sys.n, sys.period, shift=1.0, strict=False),
                              P, m, name="normalization")
    sol = solve(SdpProblem(P.n_params, [lyap, norm], margin=margin))
    if sol.status == "feasible":
        verdict = "certified-stable"
    elif sol.status == "infeasible":
        verdict = "no-certificate"
    else:
        verdict = "solver-failure"
    Pf = P.to_function(sol.theta) if verdict == "certified-stable" else None
    worst = float("nan")
    if Pf is not None:
        L = Pf.derivative() + bs.A.transpose() @ Pf + Pf @ bs.A
        t = np.arange(512) * sys.period / 512
        vals = L.evaluate(t)
        worst = float(np.linalg.eigvalsh(0.5 * (vals + vals.transpose(0, 2, 1))).max())
    return CertificateResult(verdict, Pf, sol, (p, q, m), worst)


def _gain_from_riccati_term(sys: LtpSystem, P: PeriodicMatrix, R: PeriodicMatrix,
                            band: int) -> PeriodicMatrix:
    BtP = sys.B.adjoint() @ P
    if R.degree == 0:
        K = PeriodicMatrix.constant(np.linalg.inv(R.phasor(0).real), sys.period) @ BtP
        return K.band(band)
    # pointwise R(t) K(t) = B(t)^T P(t), re-projected to phasors
    top = BtP.degree + R.degree + band
    n_samples = max(8 * top + 64, 4 * band + 2)
    t = np.arange(n_samples) * sys.period / n_samples
    samples = np.linalg.solve(R.evaluate(t), BtP.evaluate(t))
    return phasors_from_samples(samples, sys.period, band)


def lqr_synthesize(sys: LtpSystem, Q: PeriodicMatrix, R: PeriodicMatrix, m: int,
                   p: int | None = None, q: int | None = None, margin: float = 1e-6,
                   gain_band: int | None = None) -> SynthesisResult:
    """Harmonic LQR: maximize tr(P) under the truncated LQR block LMI.

    ``p`` and ``q`` default to ``2m``; the gain ``K = R^{-1} B^* P`` is banded
    at ``2m`` unless ``gain_band`` says otherwise.
    """
    p, q, m = _orders(m, p, q)
    bs = sys.banded(p)
    Qb, Rb = _as_periodic(Q, sys.period).band(p), _as_periodic(R, sys.period).band(p)
    P = UnknownSpec("P", sys.n, sys.n, q, sys.period)
    t0 = time.perf_counter()
    block = assemble_truncated(lqr_block_expr(bs.A, bs.B, Qb, Rb), P, m, max_band=p,
                               name="lqr")
    pos = assemble_truncated(positivity_expr(sys.n, sys.period), P, m, name="positivity")
    problem = SdpProblem(P.n_params, [block, pos], objective=P.trace_vector(),
                         maximize=True, margin=margin)
    sol = solve(problem)
    elapsed = time.perf_counter() - t0
    if sol.status != "optimal":
        hint = " (try a larger m or a smaller q)" if sol.status == "infeasible" else ""
        raise SynthesisError(
            f"LQR synthesis {sol.status} at (p, q, m) = {(p, q, m)}{hint}",
            sol.status, (p, q, m), sol)
    Pf = P.to_function(sol.theta)
    band = 2 * m if gain_band is None else gain_band
    K = _gain_from_riccati_term(bs, Pf, Rb, band)
    return SynthesisResult(Pf, K, float(trace_tb(Pf)), (p, q, m), sol, sol.min_eigs,
                           solve_time=elapsed)


def statefb_synthesize(sys: LtpSystem, m: int, p: int | None = None, q: int | None = None,
                       margin: float = 1e-6) -> SynthesisResult:
    """Stabilizing feedback ``K = Y S^{-1}`` from the S/Y TB-LMI.

    Among the feasible points, the one with the smallest ``tr(S)`` subject to
    ``T_m(S) >= I`` is returned.

    The inverse of the TB operator S is replaced by the inverse of its
    truncation; the gain phasors are read from the central columns. The
    result is flagged approximate.
    """
    p, q, m = _orders(m, p, q)
    bs = sys.banded(p)
    S = UnknownSpec("S", sys.n, sys.n, q, sys.period)
    Y = UnknownSpec("Y", sys.n_u, sys.n, q, sys.period, structure="general")
    t0 = time.perf_counter()
    main = assemble_truncated(statefb_expr(bs.A, bs.B), [S, Y], m, max_band=p, name="statefb")
    norm = assemble_truncated(positivity_expr(sys.n, sys.period, "S", 1.0, strict=False),
                              [S, Y], m, name="normalization")
    # the LMI is homogeneous in (S, Y); the least-trace S above the
    # normalization avoids huge, edge-dominated harmonics in S
    obj = np.concatenate([S.trace_vector(), np.zeros(Y.n_params)])
    sol = solve(SdpProblem(S.n_params + Y.n_params, [main, norm], objective=obj,
                           maximize=False, margin=margin))
    elapsed = time.perf_counter() - t0
    if sol.status != "optimal":
        raise SynthesisError(f"state-feedback synthesis {sol.status} at (p, q, m) = {(p, q, m)}",
                             sol.status, (p, q, m), sol)
    Sf = S.to_function(sol.theta[:S.n_params])
    Yf = Y.to_function(sol.theta[S.n_params:])
    TS = toeplitz_truncate(Sf, m).data
    TY = toeplitz_truncate(Yf, m).data
    KT = np.linalg.solve(TS.T, TY.T).T
    size = 2 * m + 1
    blocks = KT.reshape(sys.n_u, size, sys.n, size)[:, :, :, m]   # central columns
    K = PeriodicMatrix.from_stack(blocks.transpose(1, 0, 2), sys.period, real=True,
                                  symmetric=False)
    return SynthesisResult(Sf, K, float(trace_tb(Sf)), (p, q, m), sol, sol.min_eigs,
                           approximate=True, solve_time=elapsed)


def gain_distance(K1: PeriodicMatrix, K2: PeriodicMatrix) -> float:
    """l2 norm of the stacked phasor difference (orders aligned, zero padded)."""
    d = max(K1.degree, K2.degree)
    return float(np.linalg.norm(K1.stack(d) - K2.stack(d)))


def convergence_sweep(sys: LtpSystem, Q: PeriodicMatrix, R: PeriodicMatrix,
                      orders: list[tuple[int, int, int]], margin: float = 1e-6) -> list[dict]:
    """Run ``lqr_synthesize`` for every ``(p, q, m)``; failures are recorded."""
    ms = [o[2] for o in orders]
    if ms != sorted(ms):
        raise ValueError("orders must be sorted by m")
    rows = []
    for p, q, m in orders:
        t0 = time.perf_counter()
        row = {"p": p, "q": q, "m": m}
        try:
            res = lqr_synthesize(sys, Q, R, m, p, q, margin=margin)
        except SynthesisError as exc:
            row.update(status=exc.status, trace=float("nan"), result=None, error=str(exc))
        else:
            row.update(status="optimal", trace=res.trace_value, result=res, error="")
        row["solve_time"] = time.perf_counter() - t0
        rows.append(row)
    done = [r for r in rows if r["result"] is not None]
    ref = done[-1]["result"].K if done else None
    ref_norm = gain_distance(ref, 0 * ref) if ref is not None else float("nan")
    for r in rows:
        if r["result"] is None or ref is None:
            r["gain_distance"] = r["gain_distance_rel"] = float("nan")
        else:
            dist = gain_distance(r["result"].K, ref)
            r["gain_distance"] = dist
            r["gain_distance_rel"] = dist / ref_norm if ref_norm > 0 else dist
    return rows


def trace_monotone(traces, maximize: bool = True, tol: float = 1e-6) -> bool:
    """Sense-adjusted monotonicity of optimal traces as the truncation grows.

    Raising ``m`` removes feasible points, so for a maximization the traces
    may only go down (and up for a minimization), up to ``tol * scale``.
    """
    tr = np.asarray([t for t in traces if np.isfinite(t)], dtype=float)
    if tr.size < 2:
        return True
    scale = 1.0 + np.abs(tr).max()
    steps = np.diff(tr) if maximize else -np.diff(tr)
    return bool(np.all(steps <= tol * scale))
