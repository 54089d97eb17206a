"""Small dense semidefinite programs over affine real-symmetric LMIs.

Optimization is delegated to the primal-dual path-following cone solver of
``cvxopt``; verification (:func:`check_solution`) is a plain eigenvalue
computation that shares nothing with the solver.
"""

from __future__ import annotations

import contextlib
import io
import re
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from cvxopt import matrix, solvers

from .lmi import TruncatedLMI

__all__ = ["SdpProblem", "SdpSolution", "solve", "check_solution", "constraint_scale"]

FEAS_TOL = 1e-8
GAP_TOL = 1e-8
UNBOUNDED_FACTOR = 1e8

_ITER_LINE = re.compile(
    r"^\s*(\d+):\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s*$")


@dataclass
class SdpProblem:
    """Optimize ``c^T theta`` (or find a feasible theta) under LMI constraints.

    ``margin`` is the relative strictness used for ``<0``/``>0`` constraints:
    a strict constraint is enforced as ``F(theta) >= margin * scale * I`` with
    ``scale = ||G0||_2 + 1``.
    """

    n_params: int
    constraints: Sequence[TruncatedLMI]
    objective: np.ndarray | None = None
    maximize: bool = True
    margin: float = 1e-6

    def __post_init__(self):
        for c in self.constraints:
            if c.n_params != self.n_params:
                raise ValueError(
                    f"constraint {c.name!r} has {c.n_params} parameters, expected {self.n_params}")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float)
            if self.objective.shape != (self.n_params,):
                raise ValueError("objective has the wrong length")


@dataclass
class SdpSolution:
    theta: np.ndarray
    objective_value: float
    min_eigs: np.ndarray
    status: str
    iterations: int
    history: list = field(default_factory=list)
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    certificate: float | None = None
    message: str = ""
    scale: float = 1.0
    margins: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")


def constraint_scale(c: TruncatedLMI) -> float:
    return float(np.linalg.norm(c.G0, 2)) + 1.0 if c.G0.size else 1.0


def _oriented(c: TruncatedLMI, margin: float):
    """Return ``(F0, Fbasis, eps)`` with the constraint read as ``F >= eps*I``."""
    sign = -1.0 if c.sense.startswith("<") else 1.0
    eps = margin * constraint_scale(c) if c.sense in ("<0", ">0") else 0.0
    return sign * c.G0, sign * c.basis, eps


def check_solution(problem: SdpProblem, theta) -> np.ndarray:
    """Minimum eigenvalue of every sign-adjusted constraint at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.n_params,):
        raise ValueError("theta has the wrong length")
    out = []
    for c in problem.constraints:
        F = c.evaluate(theta)
        if c.sense.startswith("<"):
            F = -F
        F = 0.5 * (F + F.T)
        out.append(np.linalg.eigvalsh(F)[0] if F.size else np.inf)
    return np.array(out)


def _parse_history(text: str) -> list[dict]:
    rows = []
    for line in text.splitlines():
        mt = _ITER_LINE.match(line)
        if mt:
            it, pcost, dcost, gap, pres, dres, kt = mt.groups()
            try:
                rows.append(dict(iteration=int(it), pcost=float(pcost), dcost=float(dcost),
                                 gap=float(gap), pres=float(pres), dres=float(dres)))
            except ValueError:
                continue
    return rows


def solve(problem: SdpProblem, log: TextIO | None = None, maxiters: int = 100,
          feastol: float = FEAS_TOL, reltol: float = GAP_TOL) -> SdpSolution:
    """Solve the SDP; a ``None`` objective means a feasibility problem.

    Feasibility is posed as ``max t`` subject to ``F_i(theta) - eps_i I >= t I``
    and ``t <= 1``; the problem is declared feasible when ``t* >= 0`` up to the
    feasibility tolerance.
    """
    n_all = problem.n_params
    feas = problem.objective is None
    # parameters absent from every constraint are pinned to zero
    active = np.zeros(n_all, dtype=bool)
    for c in problem.constraints:
        if c.n_params:
            active |= np.abs(c.basis).reshape(n_all, -1).max(axis=1) > 0
    idle_obj = (not feas and np.any(problem.objective[~active] != 0))
    n = int(active.sum())
    nv = n + 1 if feas else n
    Gs, hs, eps_list = [], [], []
    for c in problem.constraints:
        F0, Fb, eps = _oriented(c, problem.margin)
        Fb = Fb[active]
        size = F0.shape[0]
        cols = -Fb.reshape(n, -1).T if n else np.zeros((size * size, 0))
        if feas:
            cols = np.hstack([cols, np.eye(size).reshape(-1, 1)])
        Gs.append(matrix(np.ascontiguousarray(cols, dtype=float)))
        hs.append(matrix(F0 - eps * np.eye(size)))
        eps_list.append(eps)
    if feas:
        cap = np.zeros((1, nv))
        cap[0, -1] = 1.0
        Gs.append(matrix(cap))
        hs.append(matrix(np.ones((1, 1))))
        cvec = np.zeros(nv)
        cvec[-1] = -1.0
    else:
        obj = problem.objective[active]
        cvec = -obj if problem.maximize else obj.copy()
    scale = max((constraint_scale(c) for c in problem.constraints), default=1.0)

    opts = {"show_progress": True, "maxiters": maxiters, "feastol": feastol,
            "reltol": reltol, "abstol": 1e-12 * scale, "refinement": 1}
    buf = io.StringIO()
    failure = None
    with contextlib.redirect_stdout(buf):
        try:
            res = solvers.sdp(matrix(cvec), Gs=Gs, hs=hs, options=opts)
        except (ValueError, ArithmeticError) as exc:
            failure = str(exc) or type(exc).__name__
            res = {"status": "unknown", "x": None, "iterations": 0}
    text = buf.getvalue()
    if log is not None:
        log.write(text)
        if failure:
            log.write(f"solver failure: {failure}\n")
    history = _parse_history(text)

    x = np.array(res["x"]).ravel() if res["x"] is not None else np.zeros(nv)
    theta = np.zeros(n_all)
    theta[active] = x[:n]
    raw = res["status"]
    min_eigs = check_solution(problem, theta)
    margins = np.array(eps_list)
    obj = float(problem.objective @ theta) if not feas else float(x[-1])
    sol = SdpSolution(theta=theta, objective_value=obj, min_eigs=min_eigs,
                      status="", iterations=int(res.get("iterations", len(history))),
                      history=history,
                      primal_residual=float(res.get("primal infeasibility") or np.nan),
                      dual_residual=float(res.get("dual infeasibility") or np.nan),
                      gap=float(res.get("relative gap") or np.nan),
                      scale=scale, margins=margins, message=failure or "")

    tol = 1e-7 * scale
    if idle_obj and raw in ("optimal", "dual infeasible"):
        sol.status = "unbounded"
    elif raw == "primal infeasible":
        sol.status = "infeasible"
        sol.certificate = float(res.get("residual as primal infeasibility certificate") or 0.0)
    elif raw == "dual infeasible":
        sol.status = "unbounded"
    elif feas:
        t = float(x[-1])
        if raw == "optimal" and t >= -feastol * scale and np.all(min_eigs >= margins - tol):
            sol.status = "feasible"
        elif raw == "optimal":
            sol.status = "infeasible"
            sol.certificate = -t
        else:
            sol.status = "max_iter"
    elif raw == "optimal":
        sol.status = "optimal" if np.all(min_eigs >= -tol) else "max_iter"
    else:
        sol.status = "max_iter"
    if not feas and np.isfinite(obj) and abs(obj) > UNBOUNDED_FACTOR * scale:
        sol.status = "unbounded"
    return sol
