"""``ub``: command-line experiment driver.

    ub run   --field qp --prime 17 --system F1 --method broyden,newton --target-prec 64 --out out/
    ub lift  --system F1 --x0 "1,-1" --target-prec 32
    ub check

Exit codes: 0 success, 1 failed checks, 2 usage, 3 admissibility, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

from .engine import PrecisionPlan, check_admissible, predicted_cost, run_engine
from .errors import (AdmissibilityError, BasinViolation, NonConvergence, ParseError,
                     SingularResidueError, UnderPrediction)
from .field import FieldContext, lower_bound
from .ledger import m_model
from .linalg import vec_val
from .solvers import SolverConfig, broyden_solve, estimate_orders, newton_solve
from .systems import (FAMILY_NAMES, evaluate, initial_residue, load_system, parse_system,
                      predicted_mults)

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_ADMISSIBILITY, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4
DEFAULT_SEED = 20200401

log = logging.getLogger("ultrabroyden")


class UsageError(Exception):
    pass


@dataclass
class ExperimentSpec:
    field: str = "qp"
    prime: int = 17
    system: str = "F1"
    t_val: int = 1
    methods: tuple = ("broyden",)
    target: int = 64
    alpha: float | None = None
    mode: str = "reality"
    seed: int = DEFAULT_SEED
    x0: tuple | None = None
    working_prec: int | None = None
    init_mode: str = "jacobian"
    out: str | None = None
    tsv: bool = True
    extra: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.field not in ("qp", "fpt"):
            raise UsageError(f"unknown field {self.field!r}")
        if self.target < 1:
            raise UsageError("target precision must be at least 1")
        if self.t_val < 1:
            raise UsageError("t must have positive valuation")
        for meth in self.methods:
            if meth not in ("broyden", "newton"):
                raise UsageError(f"unknown method {meth!r}")
        if self.mode not in ("ideal", "reality", "fixed"):
            raise UsageError(f"unknown mode {self.mode!r}")
        try:
            self.ctx = FieldContext("padic" if self.field == "qp" else "series", self.prime)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    @property
    def label(self):
        return f"{self.system_name}_{self.field}{self.prime}_t{self.t_val}_N{self.target}"

    def load(self):
        ref = self.system
        try:
            if ref.upper() in FAMILY_NAMES or os.path.exists(ref):
                sysm = load_system(ref)
            else:
                sysm = parse_system(ref.replace(";", "\n"), name="inline")
        except (KeyError, ParseError, OSError) as exc:
            raise UsageError(f"cannot load system {ref!r}: {exc}") from None
        self.system_name = pathlib.Path(sysm.name).stem or "system"
        x0 = self.x0
        if x0 is None:
            x0 = initial_residue(self.system, self.prime) if ref.upper() in FAMILY_NAMES else None
        if x0 is None:
            raise UsageError("no baked-in residue root for this system/prime; pass --x0")
        if len(x0) != sysm.m:
            raise UsageError(f"x0 has {len(x0)} entries, system has m = {sysm.m}")
        return sysm, self.ctx.uniformizer_power(self.t_val), list(x0)


def _alpha_for(spec, m):
    return spec.alpha if spec.alpha is not None else 2 ** (1 / m)


def _run_method(spec, sysm, t, x0, method):
    """One solver run; returns (trace, root, ledger, alpha)."""
    if method == "newton":
        cfg = SolverConfig(spec.target, working_prec=spec.working_prec, method="newton")
        tr = newton_solve(sysm, t, x0, cfg)
        return tr, tr.root, tr.ledger, None
    cfg = SolverConfig(spec.target, working_prec=spec.working_prec, init_mode=spec.init_mode)
    if spec.mode == "fixed":
        tr = broyden_solve(sysm, t, x0, cfg)
        return tr, tr.root, tr.ledger, _alpha_for(spec, sysm.m)
    plan = PrecisionPlan(sysm.m, alpha=spec.alpha)
    alpha0 = plan.alpha
    oracle = None
    if spec.mode == "ideal":
        deep = SolverConfig(2 * spec.target, working_prec=4 * spec.target + 16,
                            init_mode=spec.init_mode)
        oracle = broyden_solve(sysm, t, x0, deep)
    root, tr, led = run_engine(sysm, t, x0, spec.target, plan, spec.mode, oracle=oracle,
                               assert_intervals=spec.extra.get("assert_intervals", False))
    return tr, root, led, alpha0


def _cost_block(spec, sysm, tr, led, alpha):
    m = sysm.m
    L = predicted_mults(sysm.polys, m)
    out = {
        "mul": led.total("mul"),
        "div": led.total("div"),
        "eval_mul": led.total("mul", phase="eval"),
        "matmat": led.matmat_count(),
        "model_cost": led.cost(),
        "model_cost_linalg": led.cost(phase="linalg"),
        "model_cost_eval": led.cost(phase="eval"),
        "iterations": len(tr.records) - 1,
        "L": L,
    }
    if alpha is not None and alpha > 1:
        out["alpha"] = alpha
        out["closed_form_prediction"] = predicted_cost(m, L, alpha, spec.target)
    if hasattr(tr, "checks") and tr.mode == "ideal":
        out["interval_checks"] = len(tr.checks)
        out["interval_mismatches"] = len(tr.interval_failures)
    # Newton shape (m^3 + m L) M(N) with classical matrix products
    out["newton_shape"] = (m ** 3 + m * L) * m_model(spec.target)
    return out


def run_experiment(spec):
    """Runs every method of ``spec`` and writes traces and reports under ``spec.out``.

    Returns the report dictionary.
    """
    sysm, t, x0 = spec.load()
    check_admissible(sysm, t, x0)
    with ThreadPoolExecutor(max_workers=max(1, len(spec.methods))) as pool:
        futures = {meth: pool.submit(_run_method, spec, sysm, t, x0, meth) for meth in spec.methods}
        results = {meth: fut.result() for meth, fut in futures.items()}

    report = {"spec": {"field": spec.field, "prime": spec.prime, "system": spec.system,
                       "t_val": spec.t_val, "target": spec.target, "mode": spec.mode,
                       "alpha": spec.alpha, "seed": spec.seed, "x0": list(x0)},
              "orders": {}, "cost": {}, "v": {}, "termination": {}}
    for meth, (tr, root, led, alpha) in results.items():
        report["v"][meth] = tr.vs
        report["termination"][meth] = tr.termination
        try:
            report["orders"][meth] = estimate_orders(tr, sysm.m).to_json()
        except ValueError as exc:
            report["orders"][meth] = {"error": str(exc)}
        report["cost"][meth] = _cost_block(spec, sysm, tr, led, alpha)
    if len(results) > 1:
        roots = [(r[1], min(r[0].vs[-1], r[1][0].hi)) for r in results.values()]
        k = min(p for _, p in roots)
        a, b = roots[0][0], roots[1][0]
        report["roots_agree_to"] = lower_bound(vec_val(a.change_prec(k) - b.change_prec(k)))
        report["shared_precision"] = k

    if spec.out:
        out = pathlib.Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        for meth, (tr, *_rest) in results.items():
            (out / f"{spec.label}_{meth}.csv").write_text(tr.to_csv())
            if spec.tsv:
                rows = "".join(f"{k}\t{v}\n" for k, v in enumerate(tr.vs))
                (out / f"{spec.label}_{meth}.tsv").write_text("# k\tv_k\n" + rows)
        (out / f"{spec.label}_orders.json").write_text(json.dumps(report["orders"], indent=2) + "\n")
        (out / f"{spec.label}_cost.json").write_text(
            json.dumps({"spec": report["spec"], "cost": report["cost"]}, indent=2) + "\n")
    return report


def root_lift(spec):
    """Lifts ``spec.x0`` to a root at precision ``spec.target``; returns (root, val f)."""
    sysm, t, x0 = spec.load()
    check_admissible(sysm, t, x0)
    method = spec.methods[0]
    spec.mode = "reality" if spec.mode == "fixed" and method == "broyden" else spec.mode
    tr, root, _led, _ = _run_method(spec, sysm, t, x0, method)
    root = root.change_prec(spec.target)
    return root, vec_val(evaluate(sysm, t, root))


# --------------------------------------------------------------------------


def _parse_x0(text):
    try:
        return tuple(int(s) for s in text.replace(";", ",").split(",") if s.strip())
    except ValueError:
        raise UsageError(f"bad --x0 {text!r}: expected comma-separated integers") from None


def _alpha_arg(text):
    if text in (None, "auto"):
        return None
    if text.lower() in ("phi", "golden"):
        return (1 + math.sqrt(5)) / 2
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("alpha must be a number, 'phi' or 'auto'") from None
    if not a > 1:
        raise argparse.ArgumentTypeError("alpha must exceed 1")
    return a


def _common(p):
    p.add_argument("--field", choices=("qp", "fpt"), default="qp")
    p.add_argument("--prime", type=int, default=17)
    p.add_argument("--system", default="F1", help="F1, F2, F3, a system file, or inline polys separated by ';'")
    p.add_argument("--t-val", type=int, default=1, help="t = pi^k")
    p.add_argument("--target-prec", "-N", type=int, default=64)
    p.add_argument("--working-prec", type=int, default=None)
    p.add_argument("--x0", default=None, help='residue root, e.g. "1,-1"')
    p.add_argument("--init-mode", choices=("jacobian", "divided-difference"), default="jacobian")
    p.add_argument("--alpha", type=_alpha_arg, default=None, help="number or 'auto' (2^(1/m))")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="ub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run methods on a system and write reports")
    _common(run)
    run.add_argument("--method", default="broyden,newton")
    run.add_argument("--mode", choices=("ideal", "reality", "fixed"), default="reality")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--no-tsv", action="store_true")
    run.add_argument("--assert-intervals", action="store_true")

    lift = sub.add_parser("lift", help="lift a residue root and print it")
    _common(lift)
    lift.add_argument("--method", choices=("broyden", "newton"), default="newton")
    lift.add_argument("--mode", choices=("ideal", "reality", "fixed"), default="reality")

    chk = sub.add_parser("check", help="run the invariant suite")
    chk.add_argument("--seed", type=int, default=None)
    chk.add_argument("--quick", action="store_true", help="smaller instance counts")
    chk.add_argument("-v", "--verbose", action="store_true")
    return parser


def _seed(args):
    env = os.environ.get("UB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"UB_SEED must be an integer, got {env!r}") from None
    return args.seed if args.seed is not None else DEFAULT_SEED


def _spec(args, methods):
    return ExperimentSpec(
        field=args.field, prime=args.prime, system=args.system, t_val=args.t_val,
        methods=tuple(methods), target=args.target_prec, alpha=args.alpha, mode=args.mode,
        seed=_seed(args), x0=_parse_x0(args.x0) if args.x0 else None,
        working_prec=args.working_prec, init_mode=args.init_mode,
        out=getattr(args, "out", None), tsv=not getattr(args, "no_tsv", False),
        extra={"assert_intervals": getattr(args, "assert_intervals", False)})


def _print_summary(report, stream):
    for meth, vs in report["v"].items():
        cost = report["cost"][meth]
        orders = report["orders"][meth]
        print(f"{meth}: {report['termination'][meth]} after {cost['iterations']} iterations", file=stream)
        print(f"  v = {' '.join(map(str, vs))}", file=stream)
        if "r_order" in orders:
            print(f"  R-order {orders['r_order']:.4f}  tail Q {orders['tail_q']:.4f}  "
                  f"2m-doubling defect {orders['doubling_defect']}", file=stream)
        line = f"  mults {cost['mul']}  divs {cost['div']}  matmat {cost['matmat']}  M-cost {cost['model_cost']}"
        if "closed_form_prediction" in cost:
            line += f"  closed form {cost['closed_form_prediction']:.0f}"
        print(line, file=stream)
        if "interval_checks" in cost:
            print(f"  interval checks {cost['interval_checks']}  mismatches {cost['interval_mismatches']}",
                  file=stream)
    if "roots_agree_to" in report:
        print(f"roots agree modulo pi^{report['roots_agree_to']} "
              f"(shared precision {report['shared_precision']})", file=stream)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=stderr)
    try:
        if args.command == "run":
            methods = [m.strip() for m in args.method.split(",") if m.strip()]
            report = run_experiment(_spec(args, methods))
            _print_summary(report, stdout)
        elif args.command == "lift":
            spec = _spec(args, [args.method])
            root, vf = root_lift(spec)
            for i, e in enumerate(root, 1):
                print(f"x{i} = {e.to_text()}", file=stdout)
            print(f"val(f(root)) >= {lower_bound(vf)}", file=stdout)
        else:
            from .checks import run_checks

            results = run_checks(_seed(args), quick=args.quick)
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=stdout)
            return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECKS
    except UsageError as exc:
        print(f"ub: error: {exc}", file=stderr)
        return EXIT_USAGE
    except (AdmissibilityError, SingularResidueError) as exc:
        print(f"ub: admissibility: {exc}", file=stderr)
        return EXIT_ADMISSIBILITY
    except (NonConvergence, UnderPrediction, BasinViolation) as exc:
        print(f"ub: no convergence: {exc}", file=stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
