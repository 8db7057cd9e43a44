"""Invariant suite behind ``ub check``.

Each check returns ``(name, ok, detail)``. Instance counts are small enough
for an interactive run; the test suite runs the full-size versions.
"""

from __future__ import annotations

import random

from .engine import PrecisionPlan, run_engine
from .field import Fpt, Qp, exact_oracle, oracle_digits, sample_element
from .solvers import SolverConfig, broyden_solve, estimate_orders, newton_solve, secant_solve
from .systems import builtin_family, parse_system, random_linear_system


def zealous_laws(rng, pairs):
    bad = 0
    for ctx, oracle in ((Qp(17), exact_oracle(17)), (Fpt(17), exact_oracle(17, series=True))):
        for _ in range(pairs):
            a, c = rng.randrange(-5, 6), rng.randrange(-5, 6)
            x = sample_element(ctx, a, a + rng.randrange(1, 12), rng)
            y = sample_element(ctx, c, c + rng.randrange(1, 12), rng)
            X = oracle.from_digits(x.digits, x.lo)
            Y = oracle.from_digits(y.digits, y.lo)
            for z, Z, want in (
                (x * y, X * Y, (x.lo + y.lo, min(x.lo + y.hi, x.hi + y.lo))),
                (x / y, X / Y, (x.lo - y.lo, min(x.lo + y.hi - 2 * y.lo, x.hi - y.lo))),
            ):
                if z.interval != want or list(z.digits) != oracle_digits(Z, z.lo, z.hi):
                    bad += 1
    return bad == 0, f"{2 * pairs} pairs per field, {bad} mismatches"


def gay_termination(rng, count):
    t = Qp(17).from_int(17)
    fails = 0
    for k in range(count):
        m = (2, 3, 4)[k % 3]
        sysm, x0 = random_linear_system(17, m, rng)
        tr = broyden_solve(sysm, t, x0, SolverConfig(60, working_prec=60))
        steps = len(tr.records) - 1
        if tr.termination != "exact-at-precision" or steps > 2 * m:
            fails += 1
    return fails == 0, f"{count - fails}/{count} exact by iteration 2m"


def secant_phi():
    ctx = Qp(7)
    sysm = parse_system("x1^2 - 2", m=1)
    tr = secant_solve(sysm, ctx.from_int(7), 3, 10, SolverConfig(1500, working_prec=4096, max_iter=15))
    vs = tr.vs
    rep = estimate_orders(vs, 1)
    cs = {vs[n] + vs[n - 1] - vs[n + 1] for n in range(len(vs) - 9, len(vs) - 1)}
    ok = abs(rep.tail_q - 1.6180339887) <= 0.05 and len(cs) == 1
    return ok, f"tail Q {rep.tail_q:.4f}, c = {sorted(cs)}"


def broyden_families(fields):
    out = []
    for ctx in fields:
        t = ctx.uniformizer_power(1)
        for name, x0 in (("F1", [1, -1]), ("F2", [1, 0, -1]), ("F3", [1, 1, -1, -1])):
            sysm = builtin_family(name)
            tr = broyden_solve(sysm, t, x0, SolverConfig(128))
            rep = estimate_orders(tr, sysm.m)
            vs = tr.vs
            mono = all(b >= a for a, b in zip(vs[1:], vs[2:]))
            ok = mono and rep.r_order >= 2 ** (1 / (2 * sysm.m)) - 0.02 and tr.ledger.matmat_count() == 0
            out.append((f"broyden {name} over {ctx}", ok,
                        f"monotone={mono}, R-order {rep.r_order:.3f}, C={rep.doubling_constant}"))
    return out


def newton_doubling():
    t = Qp(17).from_int(17)
    tr = newton_solve(builtin_family("F1"), t, [1, -1], SolverConfig(128, method="newton"))
    vs = tr.vs
    ok = all(b >= 2 * a for a, b in zip(vs[1:], vs[2:]))
    return ok, f"v = {vs}"


def engine_fidelity():
    ctx = Qp(17)
    t = ctx.from_int(17)
    sysm = builtin_family("F1")
    ref = broyden_solve(sysm, t, [1, -1], SolverConfig(160, working_prec=400))
    _, ideal, led_i = run_engine(sysm, t, [1, -1], 128, mode="ideal", oracle=ref, assert_intervals=False)
    _, real, led_r = run_engine(sysm, t, [1, -1], 128, PrecisionPlan(2), "reality", assert_intervals=False)
    fails = len(ideal.interval_failures)
    ok = fails == 0 and ideal.vs == real.vs and led_i.matmat_count() == 0 == led_r.matmat_count()
    return ok, (f"{len(ideal.checks)} interval checks, {fails} failures; "
                f"ideal/reality v-sequences equal: {ideal.vs == real.vs}")


def run_checks(seed, quick=False):
    rng = random.Random(seed)
    results = []
    results.append(("zealous laws",) + zealous_laws(rng, 100 if quick else 500))
    results.append(("Gay 2m-step termination",) + gay_termination(rng, 12 if quick else 50))
    results.append(("secant golden ratio",) + secant_phi())
    results.extend(broyden_families([Qp(17)] if quick else [Qp(17), Fpt(17)]))
    results.append(("Newton doubling",) + newton_doubling())
    results.append(("engine interval fidelity",) + engine_fidelity())
    return results
