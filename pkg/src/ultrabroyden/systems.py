"""Square polynomial systems ``f(t; x_1..x_m)`` with integer coefficients.

System files hold one statement per line::

    # comment
    m = 2
    poly: (x1 - 1)^2 + (x2 - 1)^2 - 4 - t*x1*x2 - t^2*x1
    poly: (x1 + 1)^2 + (x2 + 1)^2 - 4 - t*x1

Expressions may use ``+ - * ^`` (or ``**``), parentheses, integer
constants, the variables ``x1 .. xm`` and the parameter ``t``; they are
expanded into a sparse term list. The ``m =`` line is optional, in which
case ``m`` is the number of polynomials. Bare expression lines are accepted
as polynomials too.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

from .errors import ContextMismatch, ParseError
from .field import INF
from .linalg import UltraMat, UltraVec
from . import ledger


@dataclass(frozen=True)
class Term:
    coeff: int
    xexp: tuple
    texp: int = 0

    def __iter__(self):
        return iter((self.coeff, self.xexp, self.texp))


@dataclass(frozen=True)
class PolySystem:
    m: int
    polys: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.polys) != self.m:
            raise ValueError(f"system is not square: {len(self.polys)} polynomials in {self.m} variables")
        for poly in self.polys:
            for term in poly:
                if len(term.xexp) != self.m:
                    raise ValueError("exponent vector length differs from m")
                if not isinstance(term.coeff, int):
                    raise TypeError("coefficients must be integers")

    @cached_property
    def derivatives(self):
        """``derivatives[i][j]`` is the term list of ``d f_i / d x_j``."""
        out = []
        for poly in self.polys:
            row = []
            for j in range(self.m):
                terms = []
                for c, e, te in poly:
                    if e[j]:
                        ne = list(e)
                        ne[j] -= 1
                        terms.append(Term(c * e[j], tuple(ne), te))
                row.append(tuple(terms))
            out.append(tuple(row))
        return tuple(out)

    @property
    def term_count(self):
        return sum(len(p) for p in self.polys)

    def to_text(self):
        lines = [f"m = {self.m}"]
        lines += [f"poly: {poly_to_text(p)}" for p in self.polys]
        return "\n".join(lines) + "\n"


@dataclass
class EvalCounter:
    """Scalar multiplications performed by evaluations, keyed by precision."""

    evaluations: int = 0
    mults: Counter = field(default_factory=Counter)

    def add(self, prec, n=1):
        self.mults[int(prec) if prec != INF else 0] += n

    @property
    def total(self):
        return sum(self.mults.values())


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|(x\d+)|(t)|(\*\*|[-+*^()]))")
_SUPERSCRIPTS = str.maketrans({"²": "^2", "³": "^3", "−": "-", "·": "*"})


class _Parser:
    def __init__(self, text, line, m):
        self.src = text.translate(_SUPERSCRIPTS)
        self.line = line
        self.m = m
        self.tokens = []
        pos = 0
        src = self.src.rstrip()
        while pos < len(src):
            mt = _TOKEN.match(src, pos)
            if not mt or mt.end() == pos:
                pos += len(src[pos:]) - len(src[pos:].lstrip())
                raise ParseError(f"unexpected character {src[pos]!r}", line, pos + 1)
            kind = mt.lastindex
            self.tokens.append((kind, mt.group(kind), mt.start(kind) + 1))
            pos = mt.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.src) + 1)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, msg):
        _, _, col = self.peek()
        raise ParseError(msg, self.line, col)

    def parse(self):
        if not self.tokens:
            raise ParseError("empty polynomial", self.line, 1)
        poly = self.expr()
        if self.i != len(self.tokens):
            self.error(f"unexpected token {self.peek()[1]!r}")
        return poly

    # polynomials are dicts {(xexp, texp): coeff} with sparse xexp tuples

    def expr(self):
        acc = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            acc = _padd(acc, rhs if op == "+" else _pscale(rhs, -1))
        return acc

    def term(self):
        acc = self.unary()
        while True:
            kind, val, _ = self.peek()
            if val == "*":
                self.take()
                acc = _pmul(acc, self.unary())
            elif kind in (1, 2, 3) or val == "(":
                acc = _pmul(acc, self.unary())
            else:
                return acc

    def unary(self):
        val = self.peek()[1]
        if val == "-":
            self.take()
            return _pscale(self.unary(), -1)
        if val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            kind, val, _ = self.take()
            if kind != 1:
                self.i -= 1
                self.error("exponent must be a non-negative integer")
            out = {((), 0): 1}
            for _ in range(int(val)):
                out = _pmul(out, base)
            return out
        return base

    def atom(self):
        kind, val, col = self.take()
        if kind == 1:
            return {((), 0): int(val)} if int(val) else {}
        if kind == 2:
            idx = int(val[1:])
            if idx < 1 or (self.m is not None and idx > self.m):
                raise ParseError(f"undeclared variable {val}", self.line, col)
            return {(((idx, 1),), 0): 1}
        if kind == 3:
            return {((), 1): 1}
        if val == "(":
            inner = self.expr()
            if self.take()[1] != ")":
                self.i -= 1
                self.error("expected ')'")
            return inner
        self.i -= 1
        self.error("expected a number, variable or '('")


def _padd(a, b):
    out = dict(a)
    for k, c in b.items():
        s = out.get(k, 0) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _pscale(a, c):
    return {k: v * c for k, v in a.items()}


def _mono_mul(ka, kb):
    (xa, ta), (xb, tb) = ka, kb
    d = dict(xa)
    for v, e in xb:
        d[v] = d.get(v, 0) + e
    return (tuple(sorted(d.items())), ta + tb)


def _pmul(a, b):
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = _mono_mul(ka, kb)
            s = out.get(k, 0) + ca * cb
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def _term_key(term):
    return (-sum(term.xexp), tuple(-e for e in term.xexp), term.texp)


def _to_terms(poly, m):
    terms = []
    for (xs, te), c in poly.items():
        e = [0] * m
        for v, k in xs:
            e[v - 1] = k
        terms.append(Term(c, tuple(e), te))
    return tuple(sorted(terms, key=_term_key))


def parse_polynomial(text, m=None, line=None):
    """Expand one polynomial expression into a sorted term tuple."""
    poly = _Parser(text, line, m).parse()
    if m is None:
        m = max((v for (xs, _) in poly for v, _ in xs), default=1)
    return _to_terms(poly, m)


def parse_system(text, m=None, name=""):
    """Parse the system-file grammar (see module docstring)."""
    declared = m
    bodies = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        mm = re.match(r"^m\s*=\s*(\S+)\s*$", line)
        if mm:
            try:
                declared = int(mm.group(1))
            except ValueError:
                raise ParseError(f"bad dimension {mm.group(1)!r}", lineno, raw.index(mm.group(1)) + 1) from None
            if declared < 1:
                raise ParseError("dimension must be positive", lineno, 1)
            continue
        offset = 0
        if line.startswith("poly:"):
            offset = raw.index("poly:") + 5
            line = raw.split("#", 1)[0][offset:]
        bodies.append((lineno, line))
    if not bodies:
        raise ParseError("no polynomials", None)
    if declared is None:
        declared = len(bodies)
    polys = tuple(parse_polynomial(body, declared, lineno) for lineno, body in bodies)
    if len(polys) != declared:
        raise ParseError(f"non-square system: m = {declared} but {len(polys)} polynomials", bodies[-1][0], 1)
    return PolySystem(declared, polys, name)


def _term_to_text(c, xexp, texp):
    factors = []
    for i, e in enumerate(xexp, start=1):
        if e == 1:
            factors.append(f"x{i}")
        elif e > 1:
            factors.append(f"x{i}^{e}")
    if texp == 1:
        factors.append("t")
    elif texp > 1:
        factors.append(f"t^{texp}")
    mag = abs(c)
    if not factors:
        return str(mag)
    if mag == 1:
        return "*".join(factors)
    return f"{mag}*" + "*".join(factors)


def poly_to_text(terms):
    if not terms:
        return "0"
    out = []
    for k, (c, e, te) in enumerate(terms):
        body = _term_to_text(c, e, te)
        if k == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append(("- " if c < 0 else "+ ") + body)
    return " ".join(out)


# --------------------------------------------------------------------------
# builtin families

_FAMILIES = {
    "F1": """
        m = 2
        poly: (x1 - 1)^2 + (x2 - 1)^2 - 4 - t*x1*x2 - t^2*x1
        poly: (x1 + 1)^2 + (x2 + 1)^2 - 4 - t*x1
    """,
    "F2": """
        m = 3
        poly: (x1 - 1)^2 + (x2 - 1)^2 + (x3 - 1)^2 - 5 - t - t^2
        poly: (x1 + 1)^2 + (x2 + 1)^2 + (x3 + 1)^2 - 5 - t
        poly: 2*x1^2 + x2^2 + x3^2 - 3 - t^2
    """,
    "F3": """
        m = 4
        poly: (x1 - 1)^2 + (x2 - 1)^2 + (x3 - 1)^2 + (x4 - 1)^2 - 8 - t - t^2
        poly: (x1 + 1)^2 + (x2 + 1)^2 + (x3 + 1)^2 + (x4 + 1)^2 - 8 - t
        poly: 2*x1^2 + x2^2 + x3^2 + x4^2 - 5 - t^2
        poly: 2*x1*x2 + x3*x2 - 2*x3*x4 + 2*x4*x1 + 3 - t^2
    """,
}

FAMILY_NAMES = tuple(_FAMILIES)


def builtin_family(name):
    try:
        text = _FAMILIES[name.upper()]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(_FAMILIES)}") from None
    return parse_system(text, name=name.upper())


def initial_residue(name, p):
    """Baked-in residue root of a builtin family modulo ``p`` (None if absent)."""
    table = json.loads(resources.files("ultrabroyden").joinpath("data/initial_residues.json").read_text())
    return table.get(name.upper(), {}).get(str(p))


def load_system(ref):
    """A builtin family name or a path to a system file."""
    if ref.upper() in _FAMILIES:
        return builtin_family(ref)
    with open(ref, encoding="utf-8") as fh:
        return parse_system(fh.read(), name=ref)


def linear_system(a, b, name="linear"):
    """``f(x) = A x - b`` for integer ``A`` and ``b``."""
    m = len(a)
    polys = []
    for i in range(m):
        terms = [Term(int(a[i][j]), tuple(int(k == j) for k in range(m))) for j in range(m) if a[i][j]]
        if b[i]:
            terms.append(Term(-int(b[i]), (0,) * m))
        polys.append(tuple(terms))
    return PolySystem(m, tuple(polys), name)


def random_linear_system(p, m, rng, digits=8):
    """Random ``A x - b`` with ``A`` unimodular over ``Z_p``, plus a residue root.

    Entries are integers below ``p**digits``. Returns ``(system, x0)`` with
    ``x0`` the residue root in ``[0, p)``.
    """
    bound = p ** digits
    while True:
        a = [[rng.randrange(bound) for _ in range(m)] for _ in range(m)]
        inv = _residue_inverse_int(a, p)
        if inv is not None:
            break
    b = [rng.randrange(bound) for _ in range(m)]
    x0 = [sum(inv[i][j] * b[j] for j in range(m)) % p for i in range(m)]
    return linear_system(a, b), x0


def _residue_inverse_int(a, p):
    m = len(a)
    rows = [[a[i][j] % p for j in range(m)] + [int(i == j) for j in range(m)] for i in range(m)]
    for c in range(m):
        piv = next((r for r in range(c, m) if rows[r][c]), None)
        if piv is None:
            return None
        rows[c], rows[piv] = rows[piv], rows[c]
        k = pow(rows[c][c], -1, p)
        rows[c] = [e * k % p for e in rows[c]]
        for r in range(m):
            if r != c and rows[r][c]:
                f = rows[r][c]
                rows[r] = [(e - f * g) % p for e, g in zip(rows[r], rows[c])]
    return [row[m:] for row in rows]


# --------------------------------------------------------------------------
# evaluation


def _check_point(t, x):
    ctx = t.ctx
    for e in x:
        if e.ctx != ctx:
            raise ContextMismatch(f"point lives in {e.ctx}, parameter in {ctx}")
    if t.lo < 1:
        raise ValueError("the parameter t must have positive valuation")


class _Powers:
    """Per-variable power tables built on demand up to the needed degree."""

    def __init__(self, base, counter):
        self.base = base
        self.counter = counter
        self.table = {}

    def get(self, i, e):
        tab = self.table.get(i)
        if tab is None:
            tab = self.table[i] = [None, self.base[i]]
        while len(tab) <= e:
            tab.append(_cmul(tab[-1], self.base[i], self.counter))
        return tab[e]


def _cmul(a, b, counter):
    if counter is not None:
        ra = a.rel if a.hi != INF else 0
        rb = b.rel if b.hi != INF else 0
        counter.add(max(ra, rb))
    return a * b


def _eval_terms(terms, pw, ctx, counter, m):
    acc = ctx.zero()
    for c, e, te in terms:
        factors = []
        if te:
            factors.append(pw.get(m, te))
        for i, k in enumerate(e):
            if k:
                factors.append(pw.get(i, k))
        if not factors:
            acc = acc + ctx.from_int(c)
            continue
        val = factors[0]
        for f in factors[1:]:
            val = _cmul(val, f, counter)
        if c == -1:
            val = -val
        elif c != 1:
            val = _cmul(ctx.from_int(c), val, counter)
        acc = acc + val
    return acc


def _base(t, x):
    return list(x.entries) + [t]


def _max_degrees(polys, m):
    deg = [0] * (m + 1)
    for poly in polys:
        for _, e, te in poly:
            for i, k in enumerate(e):
                deg[i] = max(deg[i], k)
            deg[m] = max(deg[m], te)
    return deg


def _prime_tables(pw, polys, m):
    # build tables in a fixed order so counters do not depend on term order
    for i, d in enumerate(_max_degrees(polys, m)):
        if d >= 2:
            pw.get(i, d)


def evaluate(sys, t, x, counter=None):
    """``f(t; x)`` under zealous rules; multiplications go to ``counter``."""
    _check_point(t, x)
    if len(x) != sys.m:
        raise ValueError(f"point has {len(x)} coordinates, system needs {sys.m}")
    with _eval_phase():
        pw = _Powers(_base(t, x), counter)
        _prime_tables(pw, sys.polys, sys.m)
        out = UltraVec(_eval_terms(poly, pw, t.ctx, counter, sys.m) for poly in sys.polys)
    if counter is not None:
        counter.evaluations += 1
    return out


def jacobian(sys, t, x, counter=None):
    """Matrix of formal partial derivatives evaluated at ``(t, x)``."""
    _check_point(t, x)
    flat = [d for row in sys.derivatives for d in row]
    with _eval_phase():
        pw = _Powers(_base(t, x), counter)
        _prime_tables(pw, flat, sys.m)
        rows = [[_eval_terms(d, pw, t.ctx, counter, sys.m) for d in row] for row in sys.derivatives]
    if counter is not None:
        counter.evaluations += 1
    return UltraMat(rows)


def predicted_mults(polys, m):
    """Multiplication count of :func:`evaluate` derived from the term lists."""
    total = sum(d - 1 for d in _max_degrees(polys, m) if d >= 2)
    for poly in polys:
        for c, e, te in poly:
            nf = (1 if te else 0) + sum(1 for k in e if k)
            if nf:
                total += nf - 1 + (0 if c in (1, -1) else 1)
    return total


def divided_difference_matrix(sys, t, x, k, counter=None):
    """Column ``j`` is ``(f(x + pi^k e_j) - f(x)) / pi^k``.

    The step is ``pi^k`` known to the precision of ``x``; when ``k`` reaches
    that precision the step is an apparent zero and the division raises
    :class:`~ultrabroyden.errors.PrecisionError`.
    """
    if k < 1:
        raise ValueError("step valuation must be at least 1")
    ctx = t.ctx
    prec = min(e.hi for e in x)
    h = ctx.uniformizer_power(k, prec)
    f0 = evaluate(sys, t, x, counter)
    cols = []
    for j in range(sys.m):
        shifted = UltraVec(e + h if i == j else e for i, e in enumerate(x))
        fj = evaluate(sys, t, shifted, counter)
        cols.append([(a - b) / h for a, b in zip(fj, f0)])
    return UltraMat([cols[j][i] for j in range(sys.m)] for i in range(sys.m))


class _eval_phase:
    def __enter__(self):
        led = ledger.active()
        self._cm = led.phase("eval") if led is not None else None
        if self._cm is not None:
            self._cm.__enter__()

    def __exit__(self, *exc):
        if self._cm is not None:
            self._cm.__exit__(*exc)
