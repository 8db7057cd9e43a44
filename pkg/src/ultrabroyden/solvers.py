"""Fixed-precision Newton, Broyden and secant iterations.

Every iterate is lifted with zero digits back to the working precision, so
divisions only ever destroy padding. These runs serve as references for the
precision engine and as experiment drivers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .errors import (AdmissibilityError, BasinViolation, NonConvergence, PrecisionError,
                     SingularResidueError)
from .field import INF, AtLeast, UltraScalar, lower_bound
from .ledger import CostLedger, recording
from .linalg import (UltraVec, choose_update_vector, lift_inverse, mat_vec, residue_inverse,
                     sherman_morrison_update, vec_val, vector)
from .systems import EvalCounter, divided_difference_matrix, evaluate, jacobian

METHODS = ("newton", "broyden", "secant")
INIT_MODES = ("jacobian", "divided-difference")


@dataclass
class SolverConfig:
    target: int
    max_iter: int = 200
    working_prec: int | None = None
    method: str = "broyden"
    init_mode: str = "jacobian"
    check_monotone: bool = True

    def __post_init__(self):
        if self.target < 1:
            raise ValueError("target valuation must be at least 1")
        if self.working_prec is None:
            self.working_prec = 2 * self.target + 16
        if self.working_prec < self.target:
            raise ValueError("working precision below target")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init_mode!r}")


@dataclass
class IterRecord:
    n: int
    x: UltraVec
    f: UltraVec
    v: object
    val_step: object = None
    val_err: object = None
    mults: int = 0

    @property
    def v_known(self):
        return not isinstance(self.v, AtLeast) and self.v != INF

    @property
    def v_int(self):
        return lower_bound(self.v)


@dataclass
class SolverTrace:
    method: str
    records: list = field(default_factory=list)
    termination: str = ""
    ledger: CostLedger | None = None
    diagnostics: list = field(default_factory=list)
    working_prec: int | None = None

    @property
    def root(self):
        return self.records[-1].x

    @property
    def vs(self):
        """Valuations of ``f_n``; apparent zeros contribute their bound."""
        return [r.v_int for r in self.records]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "v_fn", "val_step", "val_err", "mults"])
        for r in self.records:
            w.writerow([r.n, _cell(r.v), _cell(r.val_step), _cell(r.val_err), r.mults])
        return buf.getvalue()

    def to_json(self, verbose=False):
        rows = []
        for r in self.records:
            row = {"n": r.n, "v_fn": _cell(r.v), "val_step": _cell(r.val_step),
                   "val_err": _cell(r.val_err), "mults": r.mults}
            if verbose:
                row["x"] = r.x.to_json()
                row["f"] = r.f.to_json()
            rows.append(row)
        return {"method": self.method, "termination": self.termination,
                "working_prec": self.working_prec, "diagnostics": self.diagnostics,
                "records": rows}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, AtLeast):
        return f">={v.bound}"
    if v == INF:
        return "inf"
    return str(v)


def as_point(ctx, x0, prec):
    if isinstance(x0, UltraVec):
        return x0.change_prec(prec)
    if isinstance(x0, UltraScalar):
        return UltraVec([x0.change_prec(prec)])
    if isinstance(x0, int):
        x0 = [x0]
    return vector(ctx, x0, prec)


def _done(v, target):
    return lower_bound(v) >= target


def _reached(v, target, prec):
    if isinstance(v, AtLeast):
        return "exact-at-precision" if v.bound >= prec else ("converged" if v.bound >= target else "")
    return "converged" if v >= target else ""


class _Run:
    """Bookkeeping shared by the three drivers."""

    def __init__(self, method, config, reference_root):
        self.config = config
        self.ref = reference_root
        self.ledger = CostLedger()
        self.counter = EvalCounter()
        self.trace = SolverTrace(method, ledger=self.ledger, working_prec=config.working_prec)
        self._mark = 0

    def record(self, n, x, f, step=None):
        v = vec_val(f)
        err = None
        if self.ref is not None:
            err = vec_val(x - self.ref.change_prec(min(self.ref[0].hi, x[0].hi)))
        total = self.ledger.total("mul") + self.ledger.total("div")
        rec = IterRecord(n, x, f, v, None if step is None else vec_val(step), err, total - self._mark)
        self._mark = total
        if self.config.check_monotone and self.trace.records:
            prev = self.trace.records[-1]
            if prev.v_known and rec.v_known and rec.v < prev.v:
                self.trace.records.append(rec)
                raise BasinViolation(
                    f"val(f) dropped from {prev.v} to {rec.v} at iteration {n}; start outside the basin")
        self.trace.records.append(rec)
        return rec

    def finish(self, reason):
        self.trace.termination = reason
        return self.trace

    def fail(self):
        self.trace.termination = "max-iterations"
        raise NonConvergence(f"no convergence within {self.config.max_iter} iterations", self.trace)


def initial_inverse(sys, t, x, mode="jacobian"):
    """``B_0^{-1}``: residue inverse of the Jacobian or of a divided-difference
    matrix with step ``pi``."""
    try:
        if mode == "jacobian":
            a = jacobian(sys, t, x)
        else:
            a = divided_difference_matrix(sys, t, x, 1)
        return residue_inverse(a)
    except (SingularResidueError, PrecisionError) as exc:
        raise AdmissibilityError(f"initial matrix is not unimodular: {exc}") from exc


def broyden_solve(sys, t, x0, config, reference_root=None, binv0=None):
    """Broyden iteration maintaining only ``B_n^{-1}`` (Sherman-Morrison)."""
    W = config.working_prec
    N = config.target
    run = _Run("broyden", config, reference_root)
    ctx = t.ctx
    with recording(run.ledger) as led:
        x = as_point(ctx, x0, W)
        f = evaluate(sys, t, x, run.counter)
        binv = binv0 if binv0 is not None else initial_inverse(sys, t, x, config.init_mode)
        binv = binv.change_prec(W)
        run.record(0, x, f)
        reason = _reached(vec_val(f), N, W)
        n = 0
        while not reason:
            if n >= config.max_iter:
                run.fail()
            n += 1
            led.iteration = n
            s = -mat_vec(binv, f)
            x_new = (x + s).change_prec(W)
            f_new = evaluate(sys, t, x_new, run.counter)
            rec = run.record(n, x_new, f_new, s)
            reason = _reached(rec.v, N, W)
            if not reason:
                y = f_new - f
                u, _ = choose_update_vector(s, mat_vec(binv, y), run.trace.diagnostics)
                binv = sherman_morrison_update(binv, f_new, u, y).change_prec(W)
            x, f = x_new, f_new
    return run.finish(reason)


def newton_solve(sys, t, x0, config, reference_root=None):
    """Newton iteration; the Jacobian inverse is rebuilt every step from its
    residue inverse by quadratic lifting."""
    W = config.working_prec
    N = config.target
    run = _Run("newton", config, reference_root)
    ctx = t.ctx
    with recording(run.ledger) as led:
        x = as_point(ctx, x0, W)
        f = evaluate(sys, t, x, run.counter)
        run.record(0, x, f)
        reason = _reached(vec_val(f), N, W)
        n = 0
        while not reason:
            if n >= config.max_iter:
                run.fail()
            n += 1
            led.iteration = n
            jac = jacobian(sys, t, x, run.counter)
            try:
                x0inv = residue_inverse(jac)
            except SingularResidueError as exc:
                raise AdmissibilityError(f"Jacobian singular modulo pi at iteration {n - 1}") from exc
            jinv = lift_inverse(jac, x0inv, W)
            s = -mat_vec(jinv, f)
            x = (x + s).change_prec(W)
            f = evaluate(sys, t, x, run.counter)
            rec = run.record(n, x, f, s)
            reason = _reached(rec.v, N, W)
    return run.finish(reason)


def secant_solve(sys, t, x0, x1, config, reference_root=None):
    """One-dimensional secant iteration
    ``x_{n+1} = x_n - f_n (x_n - x_{n-1}) / (f_n - f_{n-1})``."""
    if sys.m != 1:
        raise ValueError("the secant method needs a one-variable system")
    W = config.working_prec
    N = config.target
    run = _Run("secant", config, reference_root)
    ctx = t.ctx
    with recording(run.ledger) as led:
        xp = as_point(ctx, x0, W)
        xc = as_point(ctx, x1, W)
        fp = evaluate(sys, t, xp, run.counter)
        fc = evaluate(sys, t, xc, run.counter)
        if (xc - xp)[0].is_apparent_zero:
            raise ValueError("x0 and x1 coincide at working precision")
        if fp[0].is_apparent_zero or fc[0].is_apparent_zero or (fc - fp)[0].is_apparent_zero:
            raise ValueError("f(x0), f(x1) must be distinct and nonzero")
        run.record(0, xp, fp)
        led.iteration = 1
        rec = run.record(1, xc, fc, xc - xp)
        reason = _reached(rec.v, N, W)
        n = 1
        while not reason:
            if n >= config.max_iter:
                run.fail()
            n += 1
            led.iteration = n
            den = fc[0] - fp[0]
            if den.is_apparent_zero:
                raise PrecisionError("f_n - f_(n-1) vanishes at working precision", den.hi)
            step = -(fc[0] * (xc[0] - xp[0]) / den)
            xn = UltraVec([(xc[0] + step).change_prec(W)])
            fn = evaluate(sys, t, xn, run.counter)
            rec = run.record(n, xn, fn, UltraVec([step]))
            reason = _reached(rec.v, N, W)
            xp, fp, xc, fc = xc, fc, xn, fn
    return run.finish(reason)


def reference_root(sys, t, x0, target, working_prec=None):
    """Root to absolute precision ``target`` from a Newton run."""
    cfg = SolverConfig(target, working_prec=working_prec or target + 8, method="newton")
    return newton_solve(sys, t, x0, cfg).root.change_prec(target)


# --------------------------------------------------------------------------
# convergence orders


@dataclass
class OrderReport:
    q_ratios: list
    tail_window: int
    tail_q: float
    tail_q_last: float
    r_order: float
    doubling_defect: float | None
    doubling_constant: float | None
    m: int

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def estimate_orders(trace, m=None):
    """Q-ratios, a least-squares R-order and the ``2m``-step doubling defect.

    ``trace`` is a :class:`SolverTrace` or a plain sequence of valuations.
    Apparent-zero endpoints (lower bounds only) are excluded.
    """
    if isinstance(trace, SolverTrace):
        vs = [r.v for r in trace.records if r.v_known]
        if m is None:
            m = len(trace.records[0].x)
    else:
        vs = list(trace)
    m = m or 1
    if len(vs) < 2 * m + 3:
        raise ValueError(f"trace too short: {len(vs)} valuations, need {2 * m + 3}")
    ratios = [b / a for a, b in zip(vs, vs[1:]) if a > 0]
    window = max(3, math.ceil(len(ratios) / 3))
    tail = ratios[-window:]
    pts = [(n, math.log(v)) for n, v in enumerate(vs) if v > 0]
    nbar = sum(n for n, _ in pts) / len(pts)
    lbar = sum(y for _, y in pts) / len(pts)
    sxx = sum((n - nbar) ** 2 for n, _ in pts)
    sxy = sum((n - nbar) * (y - lbar) for n, y in pts)
    r_order = math.exp(sxy / sxx) if sxx else float("nan")
    gaps = [vs[w + 2 * m] - 2 * vs[w] for w in range(len(vs) - 2 * m)]
    defect = min(gaps) if gaps else None
    return OrderReport(
        q_ratios=ratios,
        tail_window=window,
        tail_q=sum(tail) / len(tail),
        tail_q_last=ratios[-1],
        r_order=r_order,
        doubling_defect=defect,
        doubling_constant=None if defect is None else max(0, -defect),
        m=m,
    )


def trace_from_json(obj):
    """Valuation list from a serialized trace (for offline order estimates)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    out = []
    for row in obj["records"]:
        cell = row["v_fn"]
        if cell and not cell.startswith(">=") and cell != "inf":
            out.append(int(cell))
    return out
