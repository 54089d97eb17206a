"""JSON system documents: strict schema, conversion to LtpSystem and back.

Matrix entries are listed phasor by phasor with 0-based row/column
indices. For real-valued functions only orders ``k >= 0`` are listed; the
negative orders are the conjugates.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .fourier import PeriodicMatrix
from .harmonic_control import LtpSystem

SCHEMA_VERSION = 1

__all__ = [
    "DocumentError",
    "SystemDocument",
    "load_document",
    "parse_document",
    "matrix_to_model",
    "dump_document",
    "bundled_benchmark_path",
]


class DocumentError(ValueError):
    """Unreadable or inconsistent system document (CLI exit code 2)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Entry(_Strict):
    i: int = Field(ge=0)
    j: int = Field(ge=0)
    k: int
    re: float
    im: float = 0.0


class MatrixModel(_Strict):
    entries: list[Entry] = Field(default_factory=list)
    real: bool = True
    symmetric: bool = False

    def build(self, shape, period: float, label: str) -> PeriodicMatrix:
        ph: dict[int, np.ndarray] = {}
        for e in self.entries:
            if e.i >= shape[0] or e.j >= shape[1]:
                raise DocumentError(f"{label}: entry ({e.i}, {e.j}) outside shape {shape}")
            if self.real and e.k < 0:
                raise DocumentError(
                    f"{label}: real functions list only k >= 0 (got k = {e.k})")
            blk = ph.setdefault(e.k, np.zeros(shape, dtype=complex))
            if blk[e.i, e.j] != 0:
                raise DocumentError(f"{label}: duplicate entry ({e.i}, {e.j}, k={e.k})")
            blk[e.i, e.j] = complex(e.re, e.im)
        if self.symmetric:
            # listing the upper triangle is enough
            for k, blk in ph.items():
                lower = np.tril(blk, -1)
                upper = np.triu(blk, 1)
                if np.any(lower != 0) and np.any(upper != 0):
                    continue
                ph[k] = blk + (lower + upper).T
        try:
            return PeriodicMatrix(ph, shape, period, real=self.real, symmetric=self.symmetric)
        except ValueError as exc:
            raise DocumentError(f"{label}: {exc}") from None


class Orders(_Strict):
    p: Optional[int] = Field(default=None, ge=0)
    q: Optional[int] = Field(default=None, ge=0)
    m: Union[int, list[int]] = 10

    @field_validator("m")
    @classmethod
    def _positive(cls, v):
        ms = [v] if isinstance(v, int) else v
        if not ms or min(ms) < 1:
            raise ValueError("m must be a positive integer or a non-empty list of them")
        if ms != sorted(set(ms)):
            raise ValueError("m list must be strictly increasing")
        return v

    @property
    def m_list(self) -> list[int]:
        return [self.m] if isinstance(self.m, int) else list(self.m)


class Simulation(_Strict):
    x0: Optional[list[float]] = None
    horizon_periods: float = Field(default=10.0, gt=0)
    dt_divisor: int = Field(default=1024, ge=512)


class Tolerances(_Strict):
    margin: float = Field(default=1e-6, gt=0)
    riccati_rel: float = Field(default=2e-2, gt=0)
    riccati_periods: int = Field(default=60, ge=5)
    decay_ratio: float = Field(default=1e-3, gt=0)


class SystemDocument(_Strict):
    schema_version: int = SCHEMA_VERSION
    name: str = ""
    period_T: float = Field(gt=0)
    n: int = Field(ge=1)
    n_u: int = Field(ge=1)
    A: MatrixModel
    B: MatrixModel
    Q: Optional[MatrixModel] = None
    R: Optional[MatrixModel] = None
    orders: Orders = Field(default_factory=Orders)
    simulation: Simulation = Field(default_factory=Simulation)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v} (expected {SCHEMA_VERSION})")
        return v

    def system(self) -> LtpSystem:
        A = self.A.build((self.n, self.n), self.period_T, "A")
        B = self.B.build((self.n, self.n_u), self.period_T, "B")
        try:
            return LtpSystem(A, B, {"degree_A": A.degree, "degree_B": B.degree})
        except ValueError as exc:
            raise DocumentError(str(exc)) from None

    def weights(self) -> tuple[PeriodicMatrix, PeriodicMatrix]:
        if self.Q is None or self.R is None:
            raise DocumentError("this command needs the weights Q and R")
        Q = self.Q.build((self.n, self.n), self.period_T, "Q")
        R = self.R.build((self.n_u, self.n_u), self.period_T, "R")
        return Q, R

    def x0(self) -> np.ndarray:
        x0 = self.simulation.x0
        if x0 is None:
            return np.ones(self.n)
        if len(x0) != self.n:
            raise DocumentError(f"simulation.x0 has {len(x0)} entries, expected {self.n}")
        return np.asarray(x0, dtype=float)


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            lines.append(f"unknown key '{loc}'")
        else:
            lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_document(text: str, source: str = "<string>") -> SystemDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        doc = SystemDocument.model_validate(raw)
    except ValidationError as exc:
        raise DocumentError(f"{source}: {_format_validation(exc)}") from None
    doc.system()    # shape and symmetry checks
    return doc


def load_document(path) -> SystemDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    return parse_document(text, str(path))


def matrix_to_model(A: PeriodicMatrix) -> MatrixModel:
    entries = []
    for k in sorted(A.orders()):
        if A.real and k < 0:
            continue
        blk = A.phasor(k)
        for i in range(A.n_rows):
            for j in range(A.n_cols):
                v = blk[i, j]
                if v != 0:
                    entries.append(Entry(i=i, j=j, k=k, re=float(v.real), im=float(v.imag)))
    return MatrixModel(entries=entries, real=A.real, symmetric=A.symmetric)


def dump_document(sys: LtpSystem, Q=None, R=None, **extra) -> str:
    """Serialize a system (and optional weights) as a document string."""
    doc = SystemDocument(
        period_T=sys.period, n=sys.n, n_u=sys.n_u,
        A=matrix_to_model(sys.A), B=matrix_to_model(sys.B),
        Q=None if Q is None else matrix_to_model(Q),
        R=None if R is None else matrix_to_model(R),
        **extra)
    return json.dumps(doc.model_dump(exclude_none=False), indent=1) + "\n"


def bundled_benchmark_path() -> Path:
    return Path(__file__).with_name("data") / "benchmark_ltp.json"
