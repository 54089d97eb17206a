"""Toeplitz-block LMIs as affine expressions and their finite truncations.

An :class:`AffineOperatorExpr` is a (block) matrix whose entries are affine
in one or more banded TB unknowns. :func:`assemble_truncated` applies the
truncation operator entrywise and returns the real-symmetric affine map
``theta -> G0 + sum_e theta_e G_e`` consumed by the SDP layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fourier import PeriodicMatrix
from .toeplitz import n_operator, pi_m, toeplitz_truncate

__all__ = [
    "UnknownSpec",
    "Term",
    "ExprBlock",
    "AffineOperatorExpr",
    "TruncatedLMI",
    "hermitian_embed",
    "assemble_truncated",
    "evaluate_truncated",
    "expression_function",
    "lyapunov_expr",
    "statefb_expr",
    "lqr_block_expr",
    "positivity_expr",
    "SENSES",
]

SENSES = ("<0", "<=0", ">0", ">=0")


@dataclass(frozen=True)
class UnknownSpec:
    """A banded TB unknown parametrized by real numbers.

    ``structure='hermitian'`` describes ``T(P)`` with ``P(t)`` real symmetric:
    the zeroth phasor is real symmetric and each ``P_k`` (``1 <= k <= q``) is
    complex symmetric with ``P_{-k} = conj(P_k)``. ``structure='general'``
    describes ``T(Y)`` with ``Y(t)`` real but otherwise unconstrained.
    """

    name: str
    n_rows: int
    n_cols: int
    q: int
    period: float = 1.0
    structure: str = "hermitian"

    def __post_init__(self):
        if self.structure not in ("hermitian", "general"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.structure == "hermitian" and self.n_rows != self.n_cols:
            raise ValueError("a hermitian unknown must be square")
        if self.q < 0:
            raise ValueError("q must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def _positions(self) -> list[tuple[int, int]]:
        if self.structure == "hermitian":
            return [(i, j) for i in range(self.n_rows) for j in range(i, self.n_cols)]
        return [(i, j) for i in range(self.n_rows) for j in range(self.n_cols)]

    def labels(self) -> list[tuple[int, int, int, str]]:
        """``(k, i, j, part)`` for every real parameter, in vector order."""
        out = []
        pos = self._positions()
        for k in range(self.q + 1):
            for part in (("re",) if k == 0 else ("re", "im")):
                out.extend((k, i, j, part) for i, j in pos)
        return out

    @property
    def n_params(self) -> int:
        return len(self._positions()) * (2 * self.q + 1)

    def to_function(self, theta) -> PeriodicMatrix:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape}")
        ph = {k: np.zeros(self.shape, dtype=complex) for k in range(self.q + 1)}
        sym = self.structure == "hermitian"
        for value, (k, i, j, part) in zip(theta, self.labels()):
            v = value if part == "re" else 1j * value
            ph[k][i, j] += v
            if sym and i != j:
                ph[k][j, i] += v
        return PeriodicMatrix(ph, self.shape, self.period, real=True, symmetric=sym)

    def unit(self, e: int) -> PeriodicMatrix:
        theta = np.zeros(self.n_params)
        theta[e] = 1.0
        return self.to_function(theta)

    def trace_vector(self) -> np.ndarray:
        """Coefficients of the harmonic trace as a linear form in theta."""
        if self.n_rows != self.n_cols:
            raise ValueError("trace needs a square unknown")
        return np.array([1.0 if (k == 0 and i == j) else 0.0
                         for k, i, j, _ in self.labels()])


@dataclass(frozen=True)
class Term:
    """``left . X . right`` where X is the named unknown (or its adjoint)."""

    unknown: str
    left: PeriodicMatrix | None = None
    right: PeriodicMatrix | None = None
    adjoint: bool = False


@dataclass
class ExprBlock:
    terms: list[Term] = field(default_factory=list)
    constant: PeriodicMatrix | None = None
    # c -> c * (N^* X + X N); only this pattern of N is accepted
    modulation: dict[str, float] = field(default_factory=dict)


@dataclass
class AffineOperatorExpr:
    """A Hermitian block expression; only blocks with ``i <= j`` are stored.

    ``dims[b]`` is the row/column count (of the periodic matrix function) of
    block row/column ``b``; the strictly lower blocks are the adjoints of the
    upper ones.
    """

    dims: list[int]
    blocks: dict[tuple[int, int], ExprBlock]
    sense: str
    period: float
    unknown_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        for (bi, bj), blk in self.blocks.items():
            if bi > bj:
                raise ValueError("store only blocks on or above the diagonal")
            for name in blk.modulation:
                if bi != bj:
                    raise ValueError("N may only enter diagonal blocks as N*X + XN")

    def entries(self) -> Iterable[PeriodicMatrix]:
        for blk in self.blocks.values():
            if blk.constant is not None:
                yield blk.constant
            for t in blk.terms:
                for f in (t.left, t.right):
                    if f is not None:
                        yield f


@dataclass
class TruncatedLMI:
    """``G(theta) = G0 + sum_e theta_e basis[e]`` (real symmetric) with a sense."""

    G0: np.ndarray
    basis: np.ndarray
    sense: str
    name: str = ""
    m: int | None = None

    @property
    def size(self) -> int:
        return self.G0.shape[0]

    @property
    def n_params(self) -> int:
        return self.basis.shape[0]

    def evaluate(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.basis.shape[0] == 0:
            return self.G0.copy()
        return self.G0 + np.tensordot(theta, self.basis, axes=1)


def hermitian_embed(H, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    H = np.asarray(H)
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    if np.abs(H - H.conj().T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    H = 0.5 * (H + H.conj().T)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def _block_value(blk: ExprBlock, values: dict, m: int, omega: float,
                 with_constant: bool, shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros((shape[0] * (2 * m + 1), shape[1] * (2 * m + 1)), dtype=complex)
    for t in blk.terms:
        X = values.get(t.unknown)
        if X is None:
            continue
        if t.adjoint:
            X = X.adjoint()
        out += pi_m(t.left, X, t.right, m=m)
    for name, c in blk.modulation.items():
        X = values.get(name)
        if X is None or c == 0:
            continue
        N = n_operator(X.n_rows, m, omega)
        TX = toeplitz_truncate(X, m).data
        out += c * (N.conj().T @ TX + TX @ N)
    if with_constant and blk.constant is not None:
        out += toeplitz_truncate(blk.constant, m).data
    return out


def evaluate_truncated(expr: AffineOperatorExpr, values: dict, m: int,
                       with_constant: bool = True) -> np.ndarray:
    """Complex Hermitian matrix ``Pi_m(L(values))`` of the whole block expression."""
    omega = 2.0 * np.pi / expr.period
    s = 2 * m + 1
    offs = np.concatenate([[0], np.cumsum(expr.dims)]) * s
    out = np.zeros((offs[-1], offs[-1]), dtype=complex)
    for (bi, bj), blk in expr.blocks.items():
        val = _block_value(blk, values, m, omega, with_constant,
                           (expr.dims[bi], expr.dims[bj]))
        out[offs[bi]:offs[bi + 1], offs[bj]:offs[bj + 1]] += val
        if bi != bj:
            out[offs[bj]:offs[bj + 1], offs[bi]:offs[bi + 1]] += val.conj().T
    return out


def expression_function(expr: AffineOperatorExpr, values: dict) -> PeriodicMatrix:
    """The expression as a periodic matrix function (phasor convolution route).

    ``N^* X + X N`` is the TB image of ``-dX/dt``. Truncating the result with
    ``toeplitz_truncate`` gives an independent route to ``evaluate_truncated``.
    """
    size = sum(expr.dims)
    offs = np.concatenate([[0], np.cumsum(expr.dims)])
    total = PeriodicMatrix.zeros((size, size), expr.period)

    def place(f: PeriodicMatrix, bi, bj):
        ph = {}
        for k in f.orders():
            a = np.zeros((size, size), dtype=complex)
            a[offs[bi]:offs[bi + 1], offs[bj]:offs[bj + 1]] = f.phasor(k)
            ph[k] = a
        return PeriodicMatrix(ph, (size, size), expr.period, real=f.real)

    for (bi, bj), blk in expr.blocks.items():
        acc = PeriodicMatrix.zeros((expr.dims[bi], expr.dims[bj]), expr.period)
        for t in blk.terms:
            X = values.get(t.unknown)
            if X is None:
                continue
            if t.adjoint:
                X = X.adjoint()
            f = X
            if t.left is not None:
                f = t.left @ f
            if t.right is not None:
                f = f @ t.right
            acc = acc + f
        for name, c in blk.modulation.items():
            X = values.get(name)
            if X is not None and c:
                acc = acc + (-c) * X.derivative()
        if blk.constant is not None:
            acc = acc + blk.constant
        total = total + place(acc, bi, bj)
        if bi != bj:
            total = total + place(acc.adjoint(), bj, bi)
    return total


def assemble_truncated(expr: AffineOperatorExpr, unknowns: UnknownSpec | Sequence[UnknownSpec],
                       m: int, max_band: int | None = None, check_affinity: bool = True,
                       name: str = "") -> TruncatedLMI:
    """Apply the truncation operator at order ``m`` and embed into real form.

    The parameter vector is the concatenation of the unknowns' parameters in
    the given order. ``max_band`` rejects any entry whose degree exceeds it.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if isinstance(unknowns, UnknownSpec):
        unknowns = [unknowns]
    if max_band is not None:
        for f in expr.entries():
            if f.degree > max_band:
                raise ValueError(
                    f"entry of degree {f.degree} exceeds band {max_band}; "
                    "apply band_project first")
    known = {u.name for u in unknowns}
    for blk in expr.blocks.values():
        for t in blk.terms:
            if t.unknown not in known:
                raise ValueError(f"expression uses undeclared unknown {t.unknown!r}")

    G0 = hermitian_embed(evaluate_truncated(expr, {}, m))
    mats = []
    for u in unknowns:
        for e in range(u.n_params):
            H = evaluate_truncated(expr, {u.name: u.unit(e)}, m, with_constant=False)
            mats.append(hermitian_embed(H))
    basis = np.array(mats) if mats else np.zeros((0,) + G0.shape)
    lmi = TruncatedLMI(G0, basis, expr.sense, name=name, m=m)

    if check_affinity and basis.shape[0]:
        rng = np.random.default_rng(12345)
        theta = rng.standard_normal(basis.shape[0])
        values, start = {}, 0
        for u in unknowns:
            values[u.name] = u.to_function(theta[start:start + u.n_params])
            start += u.n_params
        direct = hermitian_embed(evaluate_truncated(expr, values, m))
        scale = 1.0 + np.abs(direct).max()
        if np.abs(direct - lmi.evaluate(theta)).max() > 1e-9 * scale:
            raise RuntimeError("assembled LMI failed the affinity check")
    return lmi


# ---- builders -----------------------------------------------------------

def lyapunov_expr(A: PeriodicMatrix, unknown: str = "P") -> AffineOperatorExpr:
    """``(A - N)^* P + P (A - N) < 0``."""
    if A.n_rows != A.n_cols:
        raise ValueError("A must be square")
    blk = ExprBlock(terms=[Term(unknown, left=A.adjoint()), Term(unknown, right=A)],
                    modulation={unknown: -1.0})
    return AffineOperatorExpr([A.n_rows], {(0, 0): blk}, "<0", A.period, (unknown,))


def statefb_expr(A: PeriodicMatrix, B: PeriodicMatrix, s_name: str = "S",
                 y_name: str = "Y") -> AffineOperatorExpr:
    """``(A - N) S + S (A - N)^* - B Y - Y^* B^* < 0``."""
    if A.n_rows != A.n_cols or B.n_rows != A.n_rows:
        raise ValueError("incompatible A, B")
    mB = -B
    blk = ExprBlock(terms=[Term(s_name, left=A), Term(s_name, right=A.adjoint()),
                           Term(y_name, left=mB),
                           Term(y_name, right=mB.adjoint(), adjoint=True)],
                    modulation={s_name: 1.0})
    return AffineOperatorExpr([A.n_rows], {(0, 0): blk}, "<0", A.period, (s_name, y_name))


def _check_definite(F: PeriodicMatrix, strict: bool, label: str, grid: int = 256):
    t = np.arange(grid) * F.period / grid
    vals = np.atleast_3d(F.evaluate(t))
    vals = 0.5 * (vals + np.conj(vals.transpose(0, 2, 1)))
    lo = np.linalg.eigvalsh(vals).min()
    if strict and lo <= 0:
        raise ValueError(f"{label} is not positive definite on the time grid (min eig {lo:.3g})")
    if not strict and lo < -1e-12 * (1 + np.abs(vals).max()):
        raise ValueError(f"{label} is not positive semidefinite on the time grid")


def lqr_block_expr(A: PeriodicMatrix, B: PeriodicMatrix, Q: PeriodicMatrix,
                   R: PeriodicMatrix, unknown: str = "P") -> AffineOperatorExpr:
    """``[[(A-N)^* P + P(A-N) + Q, P B], [B^* P, R]] >= 0``; maximize tr(P)."""
    n, nu = A.n_rows, B.n_cols
    if A.shape != (n, n) or B.n_rows != n or Q.shape != (n, n) or R.shape != (nu, nu):
        raise ValueError("incompatible A, B, Q, R")
    _check_definite(Q, strict=False, label="Q")
    _check_definite(R, strict=True, label="R")
    blocks = {
        (0, 0): ExprBlock(terms=[Term(unknown, left=A.adjoint()), Term(unknown, right=A)],
                          constant=Q, modulation={unknown: -1.0}),
        (0, 1): ExprBlock(terms=[Term(unknown, right=B)]),
        (1, 1): ExprBlock(constant=R),
    }
    return AffineOperatorExpr([n, nu], blocks, ">=0", A.period, (unknown,))


def positivity_expr(n: int, period: float, unknown: str = "P", shift: float = 0.0,
                    strict: bool = True) -> AffineOperatorExpr:
    """``P - shift*I > 0`` (or ``>= 0``)."""
    const = PeriodicMatrix.identity(n, period, -shift) if shift else None
    blk = ExprBlock(terms=[Term(unknown)], constant=const)
    return AffineOperatorExpr([n], {(0, 0): blk}, ">0" if strict else ">=0", period, (unknown,))
