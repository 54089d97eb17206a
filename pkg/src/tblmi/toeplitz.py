"""Finite Toeplitz-block and Hankel-block matrices built from phasors.

Index convention: inside every ``(2m+1) x (2m+1)`` block the rows and
columns run over ``r, c = -m..m`` and entry ``(r, c)`` holds the phasor of
order ``r - c``. Blocks are laid out ``n_rows x n_cols`` following the
matrix entries of the periodic function.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import ceil
from typing import Union

import numpy as np

from .fourier import PeriodicMatrix

__all__ = [
    "TruncatedTB",
    "HankelBlock",
    "FlipIndexer",
    "toeplitz_truncate",
    "hankel_block",
    "product_phasors",
    "minimal_eta",
    "hankel_corrections",
    "tb_product_corrected",
    "pi_m",
    "n_operator",
    "trace_tb",
    "mean_square_norm",
    "operator_norm_estimate",
    "dump_csv",
]


@dataclass(frozen=True)
class TruncatedTB:
    n_rows: int
    n_cols: int
    m: int
    data: np.ndarray
    source_band: Union[int, str] = "dense"

    def __post_init__(self):
        size = 2 * self.m + 1
        if self.data.shape != (self.n_rows * size, self.n_cols * size):
            raise ValueError("data does not match the block layout")

    @property
    def block_size(self) -> int:
        return 2 * self.m + 1

    def block(self, i: int, j: int) -> np.ndarray:
        s = self.block_size
        return self.data[i * s:(i + 1) * s, j * s:(j + 1) * s]


@dataclass(frozen=True)
class HankelBlock:
    n_rows: int
    n_cols: int
    p: int
    q: int
    sign: str
    data: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        r, c = 2 * self.p + 1, 2 * self.q + 1
        return self.data[i * r:(i + 1) * r, j * c:(j + 1) * c]


class FlipIndexer:
    """The flip ``J_{n,m} = Id_n (x) J_m`` applied by index reversal."""

    def __init__(self, n: int, m: int):
        self.n = n
        self.m = m
        size = 2 * m + 1
        self.perm = (np.arange(n)[:, None] * size + np.arange(size)[::-1][None, :]).ravel()

    def left(self, M: np.ndarray) -> np.ndarray:
        return M[self.perm]

    def right(self, M: np.ndarray) -> np.ndarray:
        return M[:, self.perm]


def _layout(blocks: np.ndarray) -> np.ndarray:
    # (R, C, n_rows, n_cols) -> (n_rows*R, n_cols*C)
    R, C, nr, nc = blocks.shape
    return blocks.transpose(2, 0, 3, 1).reshape(nr * R, nc * C)


def toeplitz_truncate(A: PeriodicMatrix, m: int) -> TruncatedTB:
    """The ``m``-truncation ``T_m(A)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    st = A.stack(2 * m)
    idx = np.arange(-m, m + 1)
    diff = idx[:, None] - idx[None, :] + 2 * m
    return TruncatedTB(A.n_rows, A.n_cols, m, _layout(st[diff]), A.degree)


def hankel_block(A: PeriodicMatrix, p: int, q: int, sign: str) -> HankelBlock:
    """First ``2p+1`` rows and ``2q+1`` columns of ``H(A^+)`` or ``H(A^-)``.

    Entry ``(r, c)`` (counted from 1) is ``a_{r+c-1}`` for ``sign='plus'`` and
    ``a_{-(r+c-1)}`` for ``sign='minus'``.
    """
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    top = 2 * p + 2 * q + 1
    d = min(A.degree, top)
    st = A.stack(top) if d == top else np.pad(
        A.stack(d), ((top - d, top - d), (0, 0), (0, 0)))
    order = np.arange(2 * p + 1)[:, None] + np.arange(2 * q + 1)[None, :] + 1
    if sign == "minus":
        order = -order
    return HankelBlock(A.n_rows, A.n_cols, p, q, sign, _layout(st[order + top]))


def product_phasors(A: PeriodicMatrix, B: PeriodicMatrix) -> PeriodicMatrix:
    """Phasors of the pointwise product: ``C_k = sum_j A_j B_{k-j}``."""
    if A.n_cols != B.n_rows:
        raise ValueError(f"inner dimensions differ: {A.shape} @ {B.shape}")
    if abs(A.period - B.period) > 1e-12 * A.period:
        raise ValueError("periods differ")
    da, db = A.degree, B.degree
    sa, sb = A.stack(da), B.stack(db)
    out = np.zeros((2 * (da + db) + 1, A.n_rows, B.n_cols), dtype=complex)
    if sa.shape[0] <= sb.shape[0]:
        for i in range(sa.shape[0]):
            out[i:i + sb.shape[0]] += np.einsum("ij,kjl->kil", sa[i], sb)
    else:
        for i in range(sb.shape[0]):
            out[i:i + sa.shape[0]] += np.einsum("kij,jl->kil", sa, sb[i])
    real = A.real and B.real
    d = da + db
    ks = range(0, d + 1) if real else range(-d, d + 1)
    return PeriodicMatrix({k: out[k + d] for k in ks}, (A.n_rows, B.n_cols), A.period,
                          real=real, symmetric=False)


def minimal_eta(A: PeriodicMatrix, B: PeriodicMatrix) -> int:
    """Smallest ``eta`` with ``2*eta >= min(deg A, deg B)``."""
    return int(ceil(min(A.degree, B.degree) / 2))


def hankel_corrections(A: PeriodicMatrix, B: PeriodicMatrix, m: int,
                       eta: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The two corner terms completing ``T_m(A) T_m(B)`` to ``T_m(AB)``.

    Returns ``(upper, lower)`` with
    ``upper = H_(m,eta)(A^+) H_(eta,m)(B^-)`` and
    ``lower = J H_(m,eta)(A^-) H_(eta,m)(B^+) J``.
    """
    if eta is None:
        eta = minimal_eta(A, B)
    upper = hankel_block(A, m, eta, "plus").data @ hankel_block(B, eta, m, "minus").data
    lower = hankel_block(A, m, eta, "minus").data @ hankel_block(B, eta, m, "plus").data
    lower = FlipIndexer(B.n_cols, m).right(FlipIndexer(A.n_rows, m).left(lower))
    return upper, lower


def tb_product_corrected(A: PeriodicMatrix, B: PeriodicMatrix, m: int) -> TruncatedTB:
    """``T_m(AB)`` obtained from ``T_m(A) T_m(B)`` plus both Hankel corrections."""
    if A.n_cols != B.n_rows:
        raise ValueError(f"inner dimensions differ: {A.shape} @ {B.shape}")
    upper, lower = hankel_corrections(A, B, m)
    data = toeplitz_truncate(A, m).data @ toeplitz_truncate(B, m).data + upper + lower
    return TruncatedTB(A.n_rows, B.n_cols, m, data, A.degree + B.degree)


def pi_m(*factors: PeriodicMatrix | None, m: int) -> np.ndarray:
    """Truncation operator applied to a product of TB operators.

    Products are left-factored, ``Pi_m(U R) = T_m(U) Pi_m(R) + corrections``,
    where ``R`` is the product of the remaining factors. ``None`` factors
    stand for the identity and are skipped.
    """
    fs = [f for f in factors if f is not None]
    if not fs:
        raise ValueError("pi_m needs at least one factor")
    if len(fs) == 1:
        return toeplitz_truncate(fs[0], m).data
    rest = fs[1:]
    rest_prod = rest[0]
    for f in rest[1:]:
        rest_prod = product_phasors(rest_prod, f)
    upper, lower = hankel_corrections(fs[0], rest_prod, m)
    return toeplitz_truncate(fs[0], m).data @ pi_m(*rest, m=m) + upper + lower


def n_operator(n: int, m: int, omega: float) -> np.ndarray:
    """Truncated modulation operator ``Id_n (x) diag(j*omega*k, |k| <= m)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return np.kron(np.eye(n), np.diag(1j * omega * np.arange(-m, m + 1)))


def trace_tb(A: PeriodicMatrix) -> float | complex:
    """Harmonic trace: sum of the zeroth phasors of the diagonal entries."""
    if A.n_rows != A.n_cols:
        raise ValueError("trace needs a square operator")
    tr = complex(np.trace(A.phasor(0)))
    return tr.real if A.real else tr


def mean_square_norm(A: PeriodicMatrix) -> float:
    """``tr(M^* M)^{1/2}``, the time-averaged Frobenius norm of ``M(t)``."""
    return float(np.sqrt(abs(trace_tb(product_phasors(A.adjoint(), A)))))


def operator_norm_estimate(A: PeriodicMatrix, grid_points: int = 512) -> float:
    """Largest spectral norm of ``A(t)`` over a uniform grid of one period.

    This is a lower bound for the l2 operator norm of ``T(A)`` that tightens
    as the grid is refined.
    """
    if grid_points < 64:
        raise ValueError("use at least 64 grid points")
    t = np.arange(grid_points) * A.period / grid_points
    vals = np.atleast_3d(A.evaluate(t))
    return float(np.linalg.norm(vals, ord=2, axis=(1, 2)).max())


def dump_csv(matrix, path) -> None:
    """Write the nonzero entries of a matrix as ``row,col,re,im`` lines."""
    data = matrix.data if isinstance(matrix, (TruncatedTB, HankelBlock)) else np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for r, c in zip(*np.nonzero(data)):
            v = complex(data[r, c])
            w.writerow([int(r), int(c), f"{v.real:.17g}", f"{v.imag:.17g}"])
