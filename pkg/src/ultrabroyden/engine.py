"""Dynamically precise Broyden iteration.

Each quantity is stored exactly on the interval it is known on, so the
zealous precision rules drive the whole computation. In ideal mode the
valuations ``v_{n+1}, v_{n+2}`` come from an oracle (a reference trace); in
reality mode they are predicted as ``ceil(alpha v_n)`` and
``ceil(alpha^2 v_n)`` and corrected once ``f_{n+1}`` is known.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

from .errors import (AdmissibilityError, IntervalMismatch, NonConvergence, PrecisionError,
                     SingularResidueError, UnderPrediction)
from .field import INF, AtLeast, lower_bound
from .ledger import CostLedger, m_model, recording
from .linalg import (UltraVec, choose_update_vector, dot, is_unimodular, mat_vec,
                     rank_one, residue_inverse, vec_mat, vec_val)
from .solvers import IterRecord, SolverTrace, _cell, as_point
from .systems import EvalCounter, evaluate, jacobian, predicted_mults

log = logging.getLogger(__name__)

MODES = ("ideal", "reality")


@dataclass
class PrecisionState:
    n: int
    x: UltraVec
    binv: object
    f: UltraVec
    v_history: list = field(default_factory=list)
    exact: bool = False

    @property
    def v(self):
        return self.v_history[-1]


def tune_alpha(plan, v_n, v_next):
    """Step (5.3). Records the ratio ``v_next / v_n`` and retunes ``alpha``.

    ``alpha`` follows an EWMA (weight 1/2) of the observed ratios plus a
    margin ``1/(2 m n)``, is clamped below by ``1 + 1/(4m)`` and never drops
    under a ratio seen in the last ``2m`` iterations.
    """
    if v_n < 1:
        raise ValueError("v_n must be positive")
    ratio = v_next / v_n
    first = not plan.ratio_history
    plan.ratio_history.append(ratio)
    plan.ewma = ratio if plan.ewma is None else (plan.ewma + ratio) / 2
    if not plan.tune:
        return plan
    m = plan.m
    n = len(plan.ratio_history)
    margin = 1 / (2 * m * n)
    if first and ratio <= plan.alpha:
        return plan
    recent = max(plan.ratio_history[-2 * m:])
    alpha = max(plan.ewma + margin, 1 + 1 / (4 * m), recent)
    if ratio > plan.alpha:
        alpha = max(alpha, ratio + margin)
    plan.alpha = alpha
    return plan


@dataclass
class PrecisionPlan:
    m: int
    alpha: float | None = None
    tune: bool = True
    max_recoveries: int = 1
    gap_history: list = field(default_factory=list)
    ratio_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    ewma: float | None = None

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = 2 ** (1 / self.m)
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")

    def predict(self, v):
        """``(ceil(alpha v), ceil(alpha^2 v))``."""
        return math.ceil(self.alpha * v), math.ceil(self.alpha * self.alpha * v)

    def to_json(self):
        return {"alpha": self.alpha, "tune": self.tune, "gap_history": self.gap_history,
                "ratio_history": self.ratio_history, "alpha_history": self.alpha_history}


# --------------------------------------------------------------------------
# interval bookkeeping


@dataclass
class IntervalCheck:
    n: int
    step: str
    expected: tuple
    got: tuple

    @property
    def ok(self):
        return self.expected == self.got


class _Checker:
    def __init__(self, strict):
        self.strict = strict
        self.checks = []

    def __call__(self, n, step, obj, lo, hi):
        chk = IntervalCheck(n, step, (lo, hi), tuple(obj.interval))
        self.checks.append(chk)
        if not chk.ok:
            msg = f"iteration {n}, {step}: interval {chk.got} != expected {chk.expected}"
            if self.strict:
                raise IntervalMismatch(msg)
            log.debug(msg)

    @property
    def failures(self):
        return [c for c in self.checks if not c.ok]


# --------------------------------------------------------------------------
# one iteration


def _steps_1_to_5(state, p1, p2, sys, t, counter, led):
    """Steps (1)-(5) with next valuations ``p1`` and ``p2`` (true or predicted)."""
    with led.phase("linalg"):
        binv = state.binv.change_prec(p1)                       # (1)
        s = -mat_vec(binv, state.f)                             # (2)
        x1 = state.x + s                                        # (3)
        x1 = x1.change_prec(p1 + p2)                            # (4)
    f1 = evaluate(sys, t, x1, counter)                          # (5)
    return binv, s, x1, f1


def _steps_6_to_15(state, binv, s, f1, v1, check, led, diagnostics):
    n, v = state.n, state.v
    with led.phase("linalg"):
        fbar = f1.change_prec(v + v1)                           # (6)
        check(n, "(6) fbar", fbar, v1, v + v1)
        h = mat_vec(binv, fbar)                                 # (7)
        check(n, "(7) h", h, v1, v + v1)
        u, l = choose_update_vector(s, h + s, diagnostics)      # (8)
        check(n, "(8) u", u, -v, v1 - v)
        r = vec_mat(u, binv.change_prec(v))                     # (9)
        check(n, "(9) r", r, -v, 0)
        fbar = fbar.change_prec(2 * v)                          # (10)
        den = state.f.ctx.one() + dot(r, fbar)                  # (11)
        check(n, "(11) den", den, 0, v)
        num = rank_one(h, r)                                    # (12)
        check(n, "(12) Num", num, v1 - v, v1)
        if den.is_apparent_zero:
            raise PrecisionError("Sherman-Morrison denominator vanished", den.hi)
        nn = num.map(lambda e: e / den)                         # (13)
        check(n, "(13) N", nn, v1 - v, v1)
        binv1 = binv - nn                                       # (14)
        check(n, "(14) Binv", binv1, 0, v1)
    return binv1, l


def ideal_iteration(state, v_next, v_next2, sys, t, *, check=None, counter=None,
                    ledger=None, diagnostics=None):
    """Steps (1)-(15) with oracle valuations ``v_next`` and ``v_next2``."""
    if state.exact:
        return state
    check = check or _Checker(True)
    led = ledger or CostLedger()
    n, v = state.n, state.v
    with recording(led):
        binv, s, x1, f1 = _steps_1_to_5(state, v_next, v_next2, sys, t, counter, led)
        check(n, "(1) Binv", binv, 0, v_next)
        check(n, "(2) s", s, v, v + v_next)
        check(n, "(4) x", x1, 0, v_next + v_next2)
        vf = vec_val(f1)
        if isinstance(vf, AtLeast) or vf == INF:
            return PrecisionState(n + 1, x1, binv, f1, state.v_history + [lower_bound(vf)], True)
        check(n, "(5) f", f1, v_next, v_next + v_next2)
        binv1, _ = _steps_6_to_15(state, binv, s, f1, v_next, check, led, diagnostics)
    return PrecisionState(n + 1, x1, binv1, f1, state.v_history + [vf])


def reality_iteration(state, plan, sys, t, *, check=None, counter=None, ledger=None,
                      diagnostics=None):
    """Steps (1)-(5) on predicted precisions, corrections (5.1)-(5.5), then
    steps (6)-(15) on the observed ``v_{n+1}``."""
    if state.exact:
        return state, plan
    check = check or _Checker(True)
    led = ledger or CostLedger()
    diagnostics = diagnostics if diagnostics is not None else []
    n, v = state.n, state.v
    with recording(led):
        attempts = 0
        while True:
            p1, p2 = plan.predict(v)
            binv, s, x1, f1 = _steps_1_to_5(state, p1, p2, sys, t, counter, led)
            vf = vec_val(f1)
            exact = isinstance(vf, AtLeast) or vf == INF
            if not exact and vf <= p1:
                break
            if attempts >= plan.max_recoveries:
                if exact:
                    return PrecisionState(n + 1, x1, binv, f1,
                                          state.v_history + [lower_bound(vf)], True), plan
                raise UnderPrediction(
                    f"iteration {n}: v_(n+1) = {vf} exceeds predicted {p1} after {attempts} retries")
            attempts += 1
            observed = lower_bound(vf) / v
            old = plan.alpha
            plan.alpha = max(2 * plan.alpha, observed + 1 / (2 * plan.m)) if exact else \
                observed + 1 / (2 * plan.m * (len(plan.ratio_history) + 1))
            msg = (f"iteration {n}: under-prediction (v_(n+1) {_cell(vf)} > {p1}); "
                   f"alpha {old:.4f} -> {plan.alpha:.4f}, redoing steps (1)-(5)")
            log.info(msg)
            diagnostics.append(msg)
        v1 = vf
        plan.gap_history.append(abs(p1 - v1))
        plan.alpha_history.append(plan.alpha)
        binv = binv.change_prec(v1)                             # (5.1)
        s = s.change_prec(v + v1)                               # (5.2)
        tune_alpha(plan, v, v1)                                 # (5.3)
        q = v1 + math.ceil(plan.alpha * v1)
        if q > p1 + p2:
            # f_{n+1} is only known to p1 + p2: lifting it with zeros would
            # break its contract, so x_{n+1} is lifted and f re-evaluated.
            diagnostics.append(f"iteration {n}: f known to {p1 + p2} only, re-evaluating at {q}")
            x1 = x1.change_prec(q)                              # (5.4)
            f1 = evaluate(sys, t, x1, counter)                  # (5.5)
        else:
            x1 = x1.change_prec(q)                              # (5.4)
            f1 = f1.change_prec(q)                              # (5.5)
        check(n, "(5.5) f", f1, v1, q)
        binv1, _ = _steps_6_to_15(state, binv, s, f1, v1, check, led, diagnostics)
    return PrecisionState(n + 1, x1, binv1, f1, state.v_history + [v1]), plan


# --------------------------------------------------------------------------
# driver


@dataclass
class EngineRecord(IterRecord):
    interval: tuple = (None, None)
    alpha: float | None = None
    gap: int | None = None
    ledger_mults: int = 0


@dataclass
class EngineTrace(SolverTrace):
    mode: str = "ideal"
    checks: list = field(default_factory=list)
    plan: PrecisionPlan | None = None
    predicted_cost: float | None = None
    eval_mults: int = 0

    @property
    def interval_failures(self):
        return [c for c in self.checks if not c.ok]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "v_fn", "val_step", "val_err", "mults",
                    "interval_lo", "interval_hi", "alpha", "gap", "ledger_mults"])
        for r in self.records:
            w.writerow([r.n, _cell(r.v), _cell(r.val_step), _cell(r.val_err), r.mults,
                        _cell(r.interval[0]), _cell(r.interval[1]),
                        "" if r.alpha is None else f"{r.alpha:.6f}",
                        "" if r.gap is None else r.gap, r.ledger_mults])
        return buf.getvalue()

    def to_json(self, verbose=False):
        out = super().to_json(verbose)
        out["mode"] = self.mode
        out["interval_checks"] = len(self.checks)
        out["interval_failures"] = [f"{c.n} {c.step}: {c.got} != {c.expected}"
                                    for c in self.interval_failures]
        for row, r in zip(out["records"], self.records):
            row.update(interval_lo=_cell(r.interval[0]), interval_hi=_cell(r.interval[1]),
                       alpha=r.alpha, gap=r.gap, ledger_mults=r.ledger_mults)
        if self.plan is not None:
            out["plan"] = self.plan.to_json()
        return out


def check_admissible(sys, t, x0):
    """``x0`` integral, ``f(x0) = 0 mod pi`` and residue Jacobian unimodular.

    Returns ``B_0^{-1}`` (the residue Jacobian inverse on ``[0, 1)``).
    """
    x = as_point(t.ctx, x0, 1)
    if any(e.lo < 0 for e in x):
        raise AdmissibilityError("x0 must be integral")
    f = evaluate(sys, t, x)
    if not all(e.is_apparent_zero for e in f):
        raise AdmissibilityError("x0 is not a root modulo pi")
    try:
        binv = residue_inverse(jacobian(sys, t, x))
    except SingularResidueError as exc:
        raise AdmissibilityError("residue Jacobian at x0 is singular") from exc
    return binv


def predicted_cost(m, L, alpha, N, model=m_model):
    """Closed form ``(5m^2 + (3m^2+m) a^2 + L (1+a)^2 a^2) M(N/(a-1))``."""
    a = alpha
    return (5 * m * m + (3 * m * m + m) * a * a + L * (1 + a) ** 2 * a * a) * model(
        math.ceil(N / (a - 1)))


def ideal_step_bound(m, v, v1, model=m_model):
    """Linear-algebra cost bound ``(3m^2+m) M(v_{n+1}) + 5m^2 M(v_n)`` of one ideal iteration."""
    return (3 * m * m + m) * model(v1) + 5 * m * m * model(v)


def overhead(m, L, alpha, v, v1, v2, model=m_model):
    """``ovh_n`` of a reality iteration relative to the ideal one."""
    return (m * m * (model(math.ceil(alpha * v)) - model(v1))
            + L * (model(math.ceil(v * alpha * (1 + alpha))) - model(v1 + v2)))


def _oracle_value(vs, k):
    if k < len(vs):
        return lower_bound(vs[k])
    return None


def run_engine(sys, t, x0, N, plan=None, mode="reality", *, oracle=None, assert_intervals=True,
               max_iter=200, reference_root=None, model=m_model):
    """Iterate until ``v_n >= N``; returns ``(root, trace, ledger)``.

    ``oracle`` (ideal mode) is the list of valuations ``v_0, v_1, ...`` of a
    reference run, or a :class:`SolverTrace`.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if N < 1:
        raise ValueError("N must be at least 1")
    m = sys.m
    plan = plan or PrecisionPlan(m)
    if mode == "ideal":
        if oracle is None:
            raise ValueError("ideal mode needs oracle valuations")
        vs = oracle.vs if isinstance(oracle, SolverTrace) else list(oracle)
    binv0 = check_admissible(sys, t, x0)
    ledger = CostLedger(model)
    counter = EvalCounter()
    check = _Checker(assert_intervals)
    trace = EngineTrace("broyden-engine", ledger=ledger, mode=mode, checks=check.checks, plan=plan)
    ctx = t.ctx

    with recording(ledger):
        x = as_point(ctx, x0, 1)
        f = evaluate(sys, t, x, counter)
    v0 = lower_bound(vec_val(f))
    if mode == "ideal":
        if v0 != lower_bound(vs[0]):
            raise AdmissibilityError(f"oracle v_0 = {vs[0]} but val(f(x0)) = {v0}")
        p1 = _oracle_value(vs, 1) or 2 * v0
    else:
        p1 = plan.predict(v0)[0]
    with recording(ledger):
        x = as_point(ctx, x0, v0 + p1)
        f = evaluate(sys, t, x, counter)
    vf = vec_val(f)
    state = PrecisionState(0, x, binv0.change_prec(v0), f, [lower_bound(vf)],
                           isinstance(vf, AtLeast) or vf == INF)
    if mode == "ideal" and not state.exact:
        check(0, "input f", f, v0, v0 + p1)
        check(0, "input x", x, 0, v0 + p1)

    def log_record(st, gap=None, step=None):
        rec = EngineRecord(st.n, st.x, st.f, vec_val(st.f),
                           None if step is None else vec_val(step))
        if reference_root is not None:
            prec = min(reference_root[0].hi, st.x[0].hi)
            rec.val_err = vec_val(st.x.change_prec(prec) - reference_root.change_prec(prec))
        tot = ledger.total("mul", iteration=st.n) + ledger.total("div", iteration=st.n)
        rec.mults = tot
        rec.ledger_mults = ledger.total("mul") + ledger.total("div")
        rec.interval = tuple(st.f.interval)
        rec.alpha = plan.alpha if mode == "reality" else None
        rec.gap = gap
        trace.records.append(rec)

    log_record(state)
    while not state.exact and state.v < N:
        if state.n >= max_iter:
            trace.termination = "max-iterations"
            raise NonConvergence(f"engine did not reach {N} in {max_iter} iterations", trace)
        if not is_unimodular(state.binv):
            raise AdmissibilityError(f"B_{state.n}^-1 lost unimodularity")
        ledger.iteration = state.n + 1
        prev = state
        if mode == "ideal":
            k = state.n
            v1 = _oracle_value(vs, k + 1)
            if v1 is None:
                raise NonConvergence(f"oracle trace ends at v_{k} = {vs[-1]}", trace)
            v2 = _oracle_value(vs, k + 2) or v1
            state = ideal_iteration(state, v1, v2, sys, t, check=check, counter=counter,
                                    ledger=ledger, diagnostics=trace.diagnostics)
            gap = None
        else:
            state, plan = reality_iteration(state, plan, sys, t, check=check, counter=counter,
                                            ledger=ledger, diagnostics=trace.diagnostics)
            gap = plan.gap_history[-1] if len(plan.gap_history) == state.n else None
        log_record(state, gap, state.x - prev.x)

    trace.termination = "exact-at-precision" if state.exact else "converged"
    trace.eval_mults = counter.total
    L = predicted_mults(sys.polys, m)
    trace.predicted_cost = predicted_cost(m, L, plan.alpha, N, model)
    return state.x, trace, ledger
