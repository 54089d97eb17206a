"""Batch driver: ``tblmi <command> system.json [--out-dir DIR] ...``.

Exit codes: 0 success, 2 unreadable document, 3 numerical failure,
4 synthesis infeasible.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .harmonic_control import (SynthesisError, convergence_sweep, lqr_synthesize, spectrum,
                               stability_certificate, statefb_synthesize, trace_monotone)
from .io import DocumentError, Tolerances, load_document
from .ltp_sim import (RiccatiError, gain_sup_error, integrate_ltp, monodromy,
                      solve_riccati_periodic, write_trajectory_csv)

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4

COMMANDS = ("spectrum", "lqr", "certify", "statefb", "sweep", "simulate")


class CommandFailure(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _num(v):
    """JSON-safe float (NaN/inf become null)."""
    v = float(v)
    return v if math.isfinite(v) else None


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _phasor_rows(label, F):
    d = F.degree
    st = F.stack(d)
    for idx, k in enumerate(range(-d, d + 1)):
        for i in range(F.n_rows):
            for j in range(F.n_cols):
                v = st[idx, i, j]
                yield [label, i, j, k, float(v.real), float(v.imag), float(abs(v))]


class Runner:
    def __init__(self, args):
        self.args = args
        self.doc = load_document(args.system)
        self.sys = self.doc.system()
        self.tol = self._tolerances(args.tol)
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.ms = self._m_list(args.m)

    def _tolerances(self, pairs) -> Tolerances:
        values = self.doc.tolerances.model_dump()
        for item in pairs or []:
            key, sep, val = item.partition("=")
            if not sep or key not in values:
                raise DocumentError(
                    f"--tol expects KEY=VALUE with KEY in {sorted(values)} (got {item!r})")
            try:
                values[key] = type(values[key])(float(val))
            except ValueError:
                raise DocumentError(f"--tol {key}: not a number: {val!r}") from None
        try:
            return Tolerances(**values)
        except Exception as exc:
            raise DocumentError(f"--tol: {exc}") from None

    def _m_list(self, override):
        if override is None:
            return self.doc.orders.m_list
        try:
            ms = [int(s) for s in override.split(",")]
        except ValueError:
            raise DocumentError(f"--m expects a comma-separated list of integers: {override!r}") from None
        if not ms or min(ms) < 1 or ms != sorted(set(ms)):
            raise DocumentError("--m must list strictly increasing positive orders")
        return ms

    def orders(self, m):
        o = self.doc.orders
        return (2 * m if o.p is None else o.p, 2 * m if o.q is None else o.q, m)

    def say(self, msg):
        if not self.args.quiet:
            print(msg)

    @property
    def dt(self):
        return self.sys.period / self.doc.simulation.dt_divisor

    @property
    def horizon(self):
        return self.doc.simulation.horizon_periods * self.sys.period

    def _base(self, command):
        return {"command": command, "name": self.doc.name,
                "period_T": self.sys.period, "n": self.sys.n, "n_u": self.sys.n_u}

    # ---- commands -----------------------------------------------------
    def cmd_spectrum(self):
        from .plotting import spectrum_figure
        m = self.ms[-1]
        p = self.doc.orders.p
        res = spectrum(self.sys, m, p)
        idx = np.flatnonzero(res.strip)
        idx = idx[np.lexsort((res.eigenvalues[idx].imag, res.pollution[idx]))]
        write_csv(self.out / "spectrum.csv", ["re", "im", "pollution"],
                  [[res.eigenvalues[i].real, res.eigenvalues[i].imag, res.pollution[i]]
                   for i in idx])
        spectrum_figure(res.eigenvalues, res.strip, self.sys.omega, self.out / "spectrum.svg")
        for lam in res.fundamental:
            self.say(f"fundamental eigenvalue {lam.real:+.6f} {lam.imag:+.6f}j  (m={m})")
        return EXIT_OK

    def _closed_loop_report(self, K):
        flo = monodromy(self.sys, K)
        x0 = self.doc.x0()
        traj = integrate_ltp(self.sys, K, x0, self.horizon, self.dt)
        ratio = float(np.linalg.norm(traj.states[-1]) / np.linalg.norm(x0))
        rep = {"max_real_exponent": _num(flo.max_real_exponent),
               "exponents": [[_num(e.real), _num(e.imag)] for e in
                             sorted(flo.exponents, key=lambda z: (z.real, z.imag))],
               "stable": flo.stable,
               "liouville_residual": _num(flo.liouville_residual),
               "final_norm_ratio": _num(ratio),
               "decayed": bool(ratio <= self.tol.decay_ratio)}
        return rep, traj

    def _synthesis_failure(self, exc: SynthesisError):
        if exc.status in ("infeasible", "unbounded"):
            return CommandFailure(f"synthesis infeasible: {exc}", EXIT_INFEASIBLE)
        return CommandFailure(f"numerical failure: {exc}", EXIT_NUMERIC)

    def _synthesis(self, command, synth):
        from .plotting import gain_stem_figure, trajectory_figure
        report = self._base(command)
        runs, gains, trajs, rows = [], {}, {}, []
        ric = None
        if command == "lqr" and self.args.oracle:
            Q, R = self.doc.weights()
            ric = solve_riccati_periodic(self.sys, Q, R, n_periods=self.tol.riccati_periods)
        for m in self.ms:
            p, q, _ = self.orders(m)
            try:
                res = synth(m, p, q)
            except SynthesisError as exc:
                raise self._synthesis_failure(exc) from None
            cl, traj = self._closed_loop_report(res.K)
            run = {"m": m, "p": p, "q": q, "status": res.solution.status,
                   "trace": _num(res.trace_value), "approximate": res.approximate,
                   "gain_degree": res.K.degree, **cl}
            if ric is not None:
                err = gain_sup_error(res.K, ric)
                run["riccati_rel_error"] = _num(err)
                run["riccati_ok"] = bool(err <= self.tol.riccati_rel)
            runs.append(run)
            label = f"m={m}"
            gains[label] = res.K
            trajs[label] = traj
            rows.extend(_phasor_rows(m, res.K))
            self.say(f"{command} m={m} (p={p}, q={q}): trace={res.trace_value:.10g} "
                     f"max Re exponent={cl['max_real_exponent']:.6g} "
                     f"|x(end)|/|x0|={cl['final_norm_ratio']:.3e}"
                     + (f" riccati err={run['riccati_rel_error']:.3e}" if ric else ""))
        report["runs"] = runs
        report["trace_monotone"] = trace_monotone([np.nan if r["trace"] is None else r["trace"]
                                                   for r in runs],
                                                  maximize=command == "lqr")
        if ric is not None:
            report["riccati"] = {"periodicity_residual": _num(ric.residual),
                                 "periods": len(ric.history),
                                 "mean_trace": _num(np.trace(ric.P, axis1=1, axis2=2).mean())}
        write_json(self.out / "results.json", report)
        write_csv(self.out / "phasors.csv", ["m", "i", "j", "k", "re", "im", "abs"], rows)
        gain_stem_figure(gains, self.out / "gain_stem.svg")
        trajectory_figure(trajs, self.sys.period, self.out / "traj.svg")
        return EXIT_OK

    def cmd_lqr(self):
        Q, R = self.doc.weights()
        margin = self.tol.margin
        return self._synthesis(
            "lqr", lambda m, p, q: lqr_synthesize(self.sys, Q, R, m, p, q, margin=margin))

    def cmd_statefb(self):
        margin = self.tol.margin
        return self._synthesis(
            "statefb", lambda m, p, q: statefb_synthesize(self.sys, m, p, q, margin=margin))

    def cmd_certify(self):
        p, q, m = self.orders(self.ms[-1])
        res = stability_certificate(self.sys, p, q, m, margin=self.tol.margin)
        report = self._base("certify")
        report.update(verdict=res.verdict, p=p, q=q, m=m,
                      solver_status=res.solution.status,
                      pointwise_max_eig=_num(res.pointwise_max_eig))
        write_json(self.out / "results.json", report)
        if res.P is not None:
            write_csv(self.out / "phasors.csv", ["m", "i", "j", "k", "re", "im", "abs"],
                      _phasor_rows(m, res.P))
        self.say(f"certify (p={p}, q={q}, m={m}): {res.verdict}")
        if res.verdict == "solver-failure":
            raise CommandFailure(f"numerical failure: solver status {res.solution.status}",
                                 EXIT_NUMERIC)
        return EXIT_OK

    def cmd_sweep(self):
        from .plotting import sweep_figure
        Q, R = self.doc.weights()
        orders = [self.orders(m) for m in self.ms]
        rows = convergence_sweep(self.sys, Q, R, orders, margin=self.tol.margin)
        cols = ["p", "q", "m", "status", "trace", "gain_distance", "gain_distance_rel"]
        write_csv(self.out / "sweep.csv", cols, [[r[c] for c in cols] for r in rows])
        # wall-clock times are kept apart so sweep.csv stays reproducible
        write_csv(self.out / "sweep_timing.csv", ["p", "q", "m", "solve_time"],
                  [[r["p"], r["q"], r["m"], r["solve_time"]] for r in rows])
        sweep_figure(rows, self.out / "sweep.svg")
        report = self._base("sweep")
        report["rows"] = [{c: (_num(r[c]) if isinstance(r[c], float) else r[c]) for c in cols}
                          | {"error": r["error"]} for r in rows]
        report["trace_monotone"] = trace_monotone([r["trace"] for r in rows])
        write_json(self.out / "results.json", report)
        for r in rows:
            self.say(f"sweep m={r['m']} (p={r['p']}, q={r['q']}): {r['status']} "
                     f"trace={r['trace']:.10g} rel. gain distance={r['gain_distance_rel']:.3e}")
        if all(r["result"] is None for r in rows):
            codes = {r["status"] for r in rows}
            code = EXIT_INFEASIBLE if codes <= {"infeasible", "unbounded"} else EXIT_NUMERIC
            raise CommandFailure("every sweep row failed", code)
        return EXIT_OK

    def cmd_simulate(self):
        from .plotting import trajectory_figure
        x0 = self.doc.x0()
        traj = integrate_ltp(self.sys, None, x0, self.horizon, self.dt)
        flo = monodromy(self.sys)
        ratio = float(np.linalg.norm(traj.states[-1]) / np.linalg.norm(x0))
        diverging = bool(traj.diverged or flo.max_real_exponent > 0)
        write_trajectory_csv(traj, self.out / "trajectory.csv")
        trajectory_figure({"open loop": traj}, self.sys.period, self.out / "trajectory.svg",
                          logscale=diverging)
        report = self._base("simulate")
        report.update(horizon_periods=self.doc.simulation.horizon_periods,
                      final_norm_ratio=_num(ratio),
                      max_real_exponent=_num(flo.max_real_exponent),
                      diverging=diverging, blowup=traj.diverged)
        write_json(self.out / "results.json", report)
        self.say(f"simulate: |x(end)|/|x0|={ratio:.3e}, max Re exponent="
                 f"{flo.max_real_exponent:.6g}" + ("  DIVERGING" if diverging else ""))
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tblmi",
        description="Harmonic (Toeplitz-block LMI) analysis and synthesis for "
                    "linear time-periodic systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "truncated harmonic spectrum and its fundamental strip",
        "lqr": "harmonic LQR synthesis for each m, with closed-loop checks",
        "certify": "harmonic Lyapunov stability certificate",
        "statefb": "stabilizing state feedback K = Y S^-1",
        "sweep": "LQR convergence table over the m list",
        "simulate": "open-loop RK4 simulation",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("system", help="system document (JSON)")
        sp.add_argument("--out-dir", default=".", help="output directory (default: cwd)")
        sp.add_argument("--tol", action="append", metavar="KEY=VALUE",
                        help="override a tolerance, e.g. margin=1e-7 (repeatable)")
        sp.add_argument("--oracle", action="store_true",
                        help="compare LQR gains with the periodic Riccati ODE")
        sp.add_argument("--m", help="comma-separated truncation orders (overrides the document)")
        sp.add_argument("--quiet", action="store_true", help="no progress output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        runner = Runner(args)
        return getattr(runner, f"cmd_{args.command}")()
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CommandFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if exc.status in ("infeasible", "unbounded") else EXIT_NUMERIC
    except (RiccatiError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
