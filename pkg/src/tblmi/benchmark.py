"""The two-state LTP benchmark with square-wave, triangle and sawtooth-like entries.

Its entries are infinite Fourier series, so they are always cut at an
explicit order ``p``. The open-loop system is unstable with Floquet
exponents of real part 1.
"""

from __future__ import annotations

import numpy as np

from .fourier import PeriodicMatrix
from .harmonic_control import LtpSystem

PERIOD = 1.0


def benchmark_entries(p: int) -> tuple[dict, dict]:
    """Nonnegative-order phasors ``{k: matrix}`` of A and B cut at order ``p``."""
    A = {k: np.zeros((2, 2), dtype=complex) for k in range(p + 1)}
    B = {k: np.zeros((2, 1), dtype=complex) for k in range(p + 1)}
    A[0][:] = [[1.0, 2.0], [-1.0, 1.0]]
    for k in range(1, p + 1, 2):
        # square wave (4/pi) sum sin((2i+1)wt)/(2i+1)
        A[k][0, 0] = -2j / (np.pi * k)
        # triangle (16/pi^2) sum cos((2i+1)wt)/(2i+1)^2
        A[k][0, 1] = 8.0 / (np.pi ** 2 * k ** 2)
    for k in range(1, p + 1):
        # (2/pi) sum (-1)^k/k sin(kwt + pi/4)
        A[k][1, 0] = (2.0 / np.pi) * (-1) ** k / k * np.exp(1j * np.pi / 4) / 2j
    # 1 - 2 sin wt - 2 sin 3wt + 2 cos 3wt + 2 cos 5wt
    for k, v in ((1, 1j), (3, 1j + 1.0), (5, 1.0)):
        if k <= p:
            A[k][1, 1] = v
    # 1 + 2 cos 2wt + 4 sin 3wt
    B[0][0, 0] = 1.0
    for k, v in ((2, 1.0), (3, -2j)):
        if k <= p:
            B[k][0, 0] = v
    return A, B


def benchmark_system(p: int = 40) -> LtpSystem:
    A, B = benchmark_entries(p)
    return LtpSystem(PeriodicMatrix(A, (2, 2), PERIOD), PeriodicMatrix(B, (2, 1), PERIOD),
                     {"p": p})


def benchmark_weights(n: int = 2, n_u: int = 1) -> tuple[PeriodicMatrix, PeriodicMatrix]:
    """``Q = 100 I``, ``R = I``."""
    return (PeriodicMatrix.identity(n, PERIOD, 100.0), PeriodicMatrix.identity(n_u, PERIOD))
