"""T-periodic matrix functions stored as finite sets of Fourier phasors.

A :class:`PeriodicMatrix` represents

    A(t) = sum_k A_k exp(j*omega*k*t),   omega = 2*pi/T,

with finitely many nonzero ``A_k``. Real-valued functions keep only the
phasors with ``k >= 0``; negative orders are synthesized as conjugates.

The sliding Fourier decomposition and its inverse live here as well:

    X_k(t) = (1/T) int_{t-T}^{t} x(tau) exp(-j*omega*k*tau) dtau
    x(t)   = sum_k X_k(t) exp(j*omega*k*t) + (T/2) dX_0/dt
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "AliasingError",
    "PeriodicMatrix",
    "HarmonicTrajectory",
    "eval_periodic",
    "band_project",
    "phasors_from_samples",
    "sliding_fourier",
    "reconstruct",
]

# tolerance used when validating conjugate/transpose symmetry of user input
_STRUCT_TOL = 1e-12


class AliasingError(ValueError):
    """Raised when a sample grid is too coarse for the requested order."""


class PeriodicMatrix:
    """A banded T-periodic matrix function given by its phasors.

    Parameters
    ----------
    phasors : mapping of int to array_like
        ``{k: A_k}``. For ``real=True`` negative orders may be omitted; if
        present they must be the conjugates of the positive ones.
    shape : (int, int)
        Matrix shape. Scalars and vectors given as phasors are reshaped.
    period : float
        The period ``T > 0``.
    real : bool
        Whether ``A(t)`` is real-valued.
    symmetric : bool
        Whether ``A(t) = A(t)^T`` for all t (square matrices only).
    """

    __slots__ = ("_ph", "shape", "period", "real", "symmetric")

    def __init__(self, phasors: Mapping[int, object], shape, period: float,
                 real: bool = True, symmetric: bool = False):
        if not period > 0:
            raise ValueError("period must be positive")
        shape = tuple(int(s) for s in shape)
        if len(shape) != 2:
            raise ValueError("shape must have two entries")
        if symmetric and shape[0] != shape[1]:
            raise ValueError("a symmetric function must be square")
        self.shape = shape
        self.period = float(period)
        self.real = bool(real)
        self.symmetric = bool(symmetric)

        full: dict[int, np.ndarray] = {}
        for k, value in phasors.items():
            arr = np.array(value, dtype=complex).reshape(shape)
            k = int(k)
            full[k] = full.get(k, 0) + arr

        ph: dict[int, np.ndarray] = {}
        scale = 1.0 + max((np.abs(v).max() for v in full.values()), default=0.0)
        tol = _STRUCT_TOL * scale
        for k, arr in full.items():
            if self.symmetric and np.abs(arr - arr.T).max() > tol:
                raise ValueError(f"phasor {k} is not symmetric")
            if self.real and k < 0:
                pos = full.get(-k)
                if pos is None:
                    ph[-k] = np.conj(arr)
                elif np.abs(pos - np.conj(arr)).max() > tol:
                    raise ValueError(
                        f"phasors {k} and {-k} violate conjugate symmetry")
                continue
            if self.real and k == 0:
                if np.abs(arr.imag).max() > tol:
                    raise ValueError("zeroth phasor of a real function must be real")
                arr = arr.real.astype(complex)
            ph[k] = arr
        if self.symmetric:
            ph = {k: 0.5 * (v + v.T) for k, v in ph.items()}
        self._ph = {k: v for k, v in ph.items() if np.any(v != 0)}

    # ---- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value, period: float, symmetric: bool | None = None):
        value = np.atleast_2d(np.asarray(value))
        real = bool(np.isrealobj(value) or not np.any(np.imag(value)))
        if symmetric is None:
            symmetric = value.shape[0] == value.shape[1] and np.array_equal(value, value.T)
        return cls({0: value}, value.shape, period, real=real, symmetric=symmetric)

    @classmethod
    def zeros(cls, shape, period: float, real: bool = True):
        symmetric = shape[0] == shape[1]
        return cls({}, shape, period, real=real, symmetric=symmetric)

    @classmethod
    def identity(cls, n: int, period: float, scale: float = 1.0):
        return cls({0: scale * np.eye(n)}, (n, n), period, real=True, symmetric=True)

    @classmethod
    def from_stack(cls, stack, period: float, real: bool | None = None,
                   symmetric: bool | None = None):
        """Build from an array of shape ``(2d+1, r, c)`` holding orders -d..d."""
        stack = np.asarray(stack, dtype=complex)
        if stack.ndim == 1:
            stack = stack[:, None, None]
        if stack.shape[0] % 2 != 1:
            raise ValueError("stack must hold an odd number of orders")
        d = (stack.shape[0] - 1) // 2
        scale = 1.0 + np.abs(stack).max(initial=0.0)
        tol = 1e-10 * scale
        if real is None:
            real = bool(np.abs(stack - np.conj(stack[::-1])).max(initial=0.0) <= tol)
        if symmetric is None:
            symmetric = (stack.shape[1] == stack.shape[2] and
                         np.abs(stack - stack.transpose(0, 2, 1)).max(initial=0.0) <= tol)
        if real:
            # average the conjugate pair so that small round-off never trips validation
            stack = 0.5 * (stack + np.conj(stack[::-1]))
        if symmetric:
            stack = 0.5 * (stack + stack.transpose(0, 2, 1))
        ks = range(0, d + 1) if real else range(-d, d + 1)
        return cls({k: stack[k + d] for k in ks}, stack.shape[1:], period,
                   real=real, symmetric=symmetric)

    # ---- basic properties ---------------------------------------------
    @property
    def n_rows(self) -> int:
        return self.shape[0]

    @property
    def n_cols(self) -> int:
        return self.shape[1]

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def degree(self) -> int:
        """Largest ``|k|`` carrying a nonzero phasor (0 for constants)."""
        return max((abs(k) for k in self._ph), default=0)

    def orders(self) -> list[int]:
        """Sorted list of all orders with a nonzero phasor (negatives included)."""
        ks = set(self._ph)
        if self.real:
            ks |= {-k for k in self._ph}
        return sorted(ks)

    def phasor(self, k: int) -> np.ndarray:
        k = int(k)
        if k in self._ph:
            return self._ph[k].copy()
        if self.real and -k in self._ph:
            return np.conj(self._ph[-k])
        return np.zeros(self.shape, dtype=complex)

    def stack(self, d: int | None = None) -> np.ndarray:
        """Dense array of phasors of orders ``-d..d``, shape ``(2d+1, r, c)``."""
        if d is None:
            d = self.degree
        out = np.zeros((2 * d + 1,) + self.shape, dtype=complex)
        for k in self.orders():
            if abs(k) <= d:
                out[k + d] = self.phasor(k)
        return out

    def entries(self) -> Iterator[tuple[int, int, int, complex]]:
        """Canonical nonzero ``(i, j, k, value)`` tuples (k >= 0 when real)."""
        for k in sorted(self._ph):
            arr = self._ph[k]
            for i, j in zip(*np.nonzero(arr)):
                yield int(i), int(j), k, complex(arr[i, j])

    def _compatible(self, other: PeriodicMatrix):
        if abs(self.period - other.period) > 1e-12 * self.period:
            raise ValueError("periods differ")

    def _with(self, phasors, shape=None, real=None, symmetric=None):
        return PeriodicMatrix(phasors, shape or self.shape, self.period,
                              real=self.real if real is None else real,
                              symmetric=self.symmetric if symmetric is None else symmetric)

    # ---- evaluation ---------------------------------------------------
    def evaluate(self, t) -> np.ndarray:
        """Evaluate at a scalar time (returns ``(r, c)``) or an array of times."""
        t_arr = np.asarray(t, dtype=float)
        times = np.atleast_1d(t_arr)
        ks = np.array(self.orders(), dtype=float)
        if ks.size == 0:
            out = np.zeros((times.size,) + self.shape)
        else:
            ph = np.stack([self.phasor(int(k)) for k in ks])
            expo = np.exp(1j * self.omega * np.outer(times, ks))
            out = np.einsum("tk,kij->tij", expo, ph)
            if self.real:
                out = out.real
        return out[0] if t_arr.ndim == 0 else out

    __call__ = evaluate

    # ---- algebra ------------------------------------------------------
    def band(self, p: int) -> PeriodicMatrix:
        return band_project(self, p)

    def adjoint(self) -> PeriodicMatrix:
        """The function ``t -> A(t)^H`` (phasors ``(A_{-k})^H``)."""
        ks = self.orders()
        ph = {k: self.phasor(-k).conj().T for k in ks}
        return PeriodicMatrix(ph, self.shape[::-1], self.period, real=self.real,
                              symmetric=self.symmetric)

    def transpose(self) -> PeriodicMatrix:
        ph = {k: self.phasor(k).T for k in self.orders()}
        return PeriodicMatrix(ph, self.shape[::-1], self.period, real=self.real,
                              symmetric=self.symmetric)

    def derivative(self) -> PeriodicMatrix:
        ph = {k: 1j * self.omega * k * self.phasor(k) for k in self.orders()}
        return self._with(ph)

    def conj_symmetric_part(self) -> PeriodicMatrix:
        """Return ``(A + A^H)/2``."""
        return 0.5 * (self + self.adjoint())

    def __add__(self, other):
        if not isinstance(other, PeriodicMatrix):
            return NotImplemented
        self._compatible(other)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        ks = set(self.orders()) | set(other.orders())
        ph = {k: self.phasor(k) + other.phasor(k) for k in ks}
        return self._with(ph, real=self.real and other.real,
                          symmetric=self.symmetric and other.symmetric)

    def __neg__(self):
        return self._with({k: -self.phasor(k) for k in self.orders()})

    def __sub__(self, other):
        if not isinstance(other, PeriodicMatrix):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, PeriodicMatrix):
            return NotImplemented
        scalar = complex(scalar)
        real = self.real and scalar.imag == 0
        return self._with({k: scalar * self.phasor(k) for k in self.orders()}, real=real)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, PeriodicMatrix):
            return NotImplemented
        from .toeplitz import product_phasors
        return product_phasors(self, other)

    def allclose(self, other: PeriodicMatrix, atol: float = 1e-12) -> bool:
        if self.shape != other.shape:
            return False
        ks = set(self.orders()) | set(other.orders())
        return all(np.abs(self.phasor(k) - other.phasor(k)).max() <= atol for k in ks)

    def __repr__(self):
        flags = ",".join(f for f, on in (("real", self.real), ("sym", self.symmetric)) if on)
        return (f"PeriodicMatrix(shape={self.shape}, T={self.period:g}, "
                f"degree={self.degree}, [{flags}])")


def eval_periodic(A: PeriodicMatrix, t) -> np.ndarray:
    """Finite Fourier synthesis ``sum_k A_k exp(j omega k t)``."""
    return A.evaluate(t)


def band_project(A: PeriodicMatrix, p: int) -> PeriodicMatrix:
    """Drop every phasor of order ``|k| > p``."""
    if p < 0:
        raise ValueError("band order must be non-negative")
    ph = {k: A.phasor(k) for k in A.orders() if abs(k) <= p}
    return PeriodicMatrix(ph, A.shape, A.period, real=A.real, symmetric=A.symmetric)


def phasors_from_samples(samples, period: float, K: int,
                         symmetric: bool = False) -> PeriodicMatrix:
    """Fourier analysis of one period of uniformly sampled data.

    ``samples[i]`` is the value at ``t_i = i*T/N``, ``i = 0..N-1``. Phasors of
    orders ``|k| <= K`` are returned; ``N >= 4K + 2`` is required so that the
    retained orders are far from the Nyquist fold.
    """
    samples = np.asarray(samples)
    n_samples = samples.shape[0]
    if K < 0:
        raise ValueError("K must be non-negative")
    if n_samples < 4 * K + 2:
        raise AliasingError(
            f"{n_samples} samples cannot resolve order {K}; need at least {4 * K + 2}")
    shape = samples.shape[1:]
    if len(shape) == 0:
        mat_shape = (1, 1)
    elif len(shape) == 1:
        mat_shape = (shape[0], 1)
    else:
        mat_shape = shape
    data = samples.reshape((n_samples,) + mat_shape)
    real = bool(np.isrealobj(samples))
    coeffs = np.fft.fft(data, axis=0) / n_samples
    ks = range(0, K + 1) if real else range(-K, K + 1)
    ph = {k: coeffs[k % n_samples] for k in ks}
    return PeriodicMatrix(ph, mat_shape, period, real=real, symmetric=symmetric)


@dataclass(frozen=True)
class HarmonicTrajectory:
    """Time-varying phasors ``X_k(t)`` for ``k = -K..K`` on a time grid.

    ``phasors`` has shape ``(len(times), 2K+1, *value_shape)``.
    """

    times: np.ndarray
    phasors: np.ndarray
    period: float
    real: bool = True

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        ph = np.asarray(self.phasors, dtype=complex)
        if times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if ph.ndim < 2 or ph.shape[0] != times.size:
            raise ValueError("phasor array does not match the time grid")
        if ph.shape[1] % 2 != 1:
            raise ValueError("phasor axis must hold orders -K..K")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "phasors", ph)

    @property
    def order(self) -> int:
        return (self.phasors.shape[1] - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    def phasor(self, k: int) -> np.ndarray:
        if abs(k) > self.order:
            raise IndexError(f"order {k} outside [-{self.order}, {self.order}]")
        return self.phasors[:, k + self.order]

    def energy(self) -> np.ndarray:
        """``sum_k |X_k(t)|^2`` at every grid time."""
        axes = tuple(range(1, self.phasors.ndim))
        return np.sum(np.abs(self.phasors) ** 2, axis=axes)

    def membership_residual(self) -> np.ndarray:
        """Grid residual of ``dX_k/dt = dX_0/dt exp(-j omega k t)``.

        Diagnostic only: returns ``max_k |dX_k - dX_0 e^{-j w k t}|`` per time.
        """
        d = np.gradient(self.phasors, self.times, axis=0, edge_order=2)
        rot = np.exp(-1j * self.omega * np.outer(self.times, self.ks))
        rot = rot.reshape(rot.shape + (1,) * (self.phasors.ndim - 2))
        res = d - d[:, self.order][:, None] * rot
        return np.abs(res).reshape(res.shape[0], -1).max(axis=1)

    @classmethod
    def constant(cls, A: PeriodicMatrix, times, K: int | None = None):
        """Time-constant phasors of a periodic function (e.g. a gain)."""
        times = np.asarray(times, dtype=float)
        st = A.stack(A.degree if K is None else K)
        ph = np.broadcast_to(st, (times.size,) + st.shape).copy()
        return cls(times, ph, A.period, real=A.real)


def sliding_fourier(x, times, period: float, K: int) -> HarmonicTrajectory:
    """Sliding Fourier decomposition over a trailing window of one period.

    ``x`` holds samples on the uniform grid ``times`` (first axis). Output
    phasors are given at every grid time at least one period after the
    first sample; the window integral uses the composite trapezoid rule.
    """
    x = np.asarray(x)
    times = np.asarray(times, dtype=float)
    if K < 0:
        raise ValueError("K must be non-negative")
    if x.shape[0] != times.size or times.size < 2:
        raise ValueError("samples do not match the time grid")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12 * abs(times).max(initial=1.0)):
        raise ValueError("time grid must be uniform")
    steps = int(round(period / dt))
    if steps < 1 or abs(steps * dt - period) > 1e-9 * period:
        raise ValueError("sample spacing must divide the period")
    if times.size <= steps:
        raise ValueError("window extends before the start of the data")

    omega = 2.0 * np.pi / period
    ks = np.arange(-K, K + 1)
    rot = np.exp(-1j * omega * np.outer(times, ks))
    rot = rot.reshape(rot.shape + (1,) * (x.ndim - 1))
    y = x[:, None] * rot
    # cumulative trapezoid: c[i] = int_{t_0}^{t_i}
    c = np.zeros_like(y)
    c[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]), axis=0)
    X = (c[steps:] - c[:-steps]) / period
    return HarmonicTrajectory(times[steps:], X, period, real=bool(np.isrealobj(x)))


def reconstruct(X: HarmonicTrajectory) -> np.ndarray:
    """Invert the sliding Fourier decomposition on the grid of ``X``.

    ``dX_0/dt`` is approximated with second-order central differences
    (one-sided second-order stencils at the ends).
    """
    ph = X.phasors
    rot = np.exp(1j * X.omega * np.outer(X.times, X.ks))
    rot = rot.reshape(rot.shape + (1,) * (ph.ndim - 2))
    x = np.sum(ph * rot, axis=1)
    if X.times.size >= 3:
        dx0 = np.gradient(ph[:, X.order], X.times, axis=0, edge_order=2)
    elif X.times.size == 2:
        dx0 = np.gradient(ph[:, X.order], X.times, axis=0)
    else:
        dx0 = np.zeros_like(ph[:, X.order])
    x = x + 0.5 * X.period * dx0
    return x.real if X.real else x
