"""Zealous scalar arithmetic over Q_p and F_p[[t]].

An element is stored as ``pi^lo * unit + O(pi^hi)``: ``lo`` is the index of
the first known digit, ``hi`` the absolute precision and ``unit`` holds the
``hi - lo`` known digits in a backend-specific form (an int below
``p^(hi-lo)`` for Q_p, a tuple of residues for F_p[[t]]). Whenever a nonzero
digit is known the first stored digit is nonzero, so ``lo`` is the
valuation. An element with ``lo == hi`` is an apparent zero ``O(pi^hi)``.

Integer constants may be carried exactly with ``hi = inf``; they come up as
polynomial coefficients, the ``1`` in ``1 + r.f``, and powers of the
uniformizer.

Precision of products and quotients follows the usual zealous rules::

    [a, b) * [c, d) = [a + c, min(a + d, b + c))
    [a, b) / [c, d) = [a - c, min(a + d - 2c, b - c))

Two oracle kinds, ``exact-padic`` and ``exact-series``, hold exact rationals
and exact rational functions over F_p; they never truncate and exist to
check the zealous kinds digit by digit.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import kernels
from .errors import ContextMismatch, PrecisionError
from .ledger import _ACTIVE

INF = math.inf

KINDS = ("padic", "series", "exact-padic", "exact-series")


def _is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class AtLeast:
    """Valuation lower bound reported for apparent zeros."""

    bound: int

    def __str__(self):
        return f">= {self.bound}"

    def __int__(self):
        return int(self.bound)


def lower_bound(v):
    """Integer lower bound of a valuation result (``AtLeast`` or number)."""
    return v.bound if isinstance(v, AtLeast) else v


# --------------------------------------------------------------------------
# backends


class _PadicRing:
    series = False
    exact = False

    def __init__(self, p):
        self.p = p
        self._powers = {0: 1, 1: p}

    def pk(self, k):
        r = self._powers.get(k)
        if r is None:
            r = self.p ** k
            if len(self._powers) < 4096:
                self._powers[k] = r
        return r

    def trunc(self, u, k):
        if k == INF:
            return u
        return u % self.pk(k)

    def strip(self, raw):
        if raw == 0:
            return None
        p = self.p
        v = 0
        while raw % p == 0:
            raw //= p
            v += 1
        return v, raw

    def shift(self, u, k):
        return u * self.pk(k) if k else u

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b, n):
        if n == INF:
            return a * b
        return (a * b) % self.pk(n)

    def inv(self, u, n):
        return pow(u, -1, self.pk(n))

    def lift(self, u, k):
        return u

    def digits(self, u, k):
        p = self.p
        out = []
        for _ in range(k):
            u, d = divmod(u, p)
            out.append(d)
        return out

    def from_digits(self, ds):
        p = self.p
        u = 0
        for d in reversed(ds):
            u = u * p + d
        return u

    def from_int(self, n):
        return n

    def is_one(self, u):
        return u == 1

    zero = 0
    one = 1


class _SeriesRing:
    series = True
    exact = False

    def __init__(self, p):
        self.p = p

    def trunc(self, u, k):
        if k == INF:
            return u
        if len(u) >= k:
            return u[:k]
        return u + (0,) * (k - len(u))

    def strip(self, raw):
        for i, c in enumerate(raw):
            if c:
                return i, raw[i:]
        return None

    def shift(self, u, k):
        return (0,) * k + u if k else u

    def add(self, a, b):
        return tuple(kernels.add_mod(a, b, self.p))

    def sub(self, a, b):
        return tuple(kernels.sub_mod(a, b, self.p))

    def neg(self, a):
        p = self.p
        return tuple((-c) % p for c in a)

    def mul(self, a, b, n):
        if n == INF:
            return tuple(kernels.mul_full(a, b, self.p))
        return tuple(kernels.mul_trunc(a, b, n, self.p))

    def inv(self, u, n):
        return tuple(kernels.inv_trunc(u, n, self.p))

    def lift(self, u, k):
        return self.trunc(u, k)

    def digits(self, u, k):
        return list(self.trunc(u, k))

    def from_digits(self, ds):
        return tuple(d % self.p for d in ds)

    def from_int(self, n):
        return (n % self.p,)

    def is_one(self, u):
        return len(u) >= 1 and u[0] == 1 and not any(u[1:])

    zero = ()
    one = (1,)


def _poly_mul(a, b, p):
    # schoolbook on purpose: the oracle must not share the fast kernels
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _poly_add(a, b, p):
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % p
           for i in range(n)]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class _ExactPadicRing:
    """Exact rationals; a unit is a Fraction whose numerator and denominator
    are both coprime to p."""

    series = False
    exact = True

    def __init__(self, p):
        self.p = p

    def trunc(self, u, k):
        return u

    def strip(self, raw):
        raw = Fraction(raw)
        if raw == 0:
            return None
        p = self.p
        num, den = raw.numerator, raw.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        return v, Fraction(num, den)

    def shift(self, u, k):
        return u * Fraction(self.p) ** k

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b, n):
        return a * b

    def inv(self, u, n):
        return 1 / u

    def lift(self, u, k):
        return u

    def digits(self, u, k):
        # digit-by-digit extraction, independent of modular inversion by pow
        p = self.p
        num, den = u.numerator, u.denominator
        d_inv = pow(den % p, p - 2, p) if p > 2 else 1
        out = []
        for _ in range(k):
            d = (num * d_inv) % p
            out.append(d)
            num = (num - d * den) // p
        return out

    def from_digits(self, ds):
        p = self.p
        return Fraction(sum(d * p ** i for i, d in enumerate(ds)))

    def from_int(self, n):
        return Fraction(n)

    def is_one(self, u):
        return u == 1

    zero = Fraction(0)
    one = Fraction(1)


class _ExactSeriesRing:
    """Exact rational functions over F_p; a unit is ``(num, den)`` with both
    constant terms nonzero."""

    series = True
    exact = True

    def __init__(self, p):
        self.p = p

    def trunc(self, u, k):
        return u

    def strip(self, raw):
        num, den = raw
        v = 0
        while v < len(num) and num[v] == 0:
            v += 1
        if v == len(num):
            return None
        w = 0
        while den[w] == 0:
            w += 1
        return v - w, (tuple(num[v:]), tuple(den[w:]))

    def shift(self, u, k):
        num, den = u
        if k >= 0:
            return ((0,) * k + num, den)
        return (num, (0,) * (-k) + den)

    def add(self, a, b):
        p = self.p
        num = _poly_add(_poly_mul(a[0], b[1], p), _poly_mul(b[0], a[1], p), p)
        return (num, _poly_mul(a[1], b[1], p))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def neg(self, a):
        p = self.p
        return (tuple((-c) % p for c in a[0]), a[1])

    def mul(self, a, b, n):
        p = self.p
        return (_poly_mul(a[0], b[0], p), _poly_mul(a[1], b[1], p))

    def inv(self, u, n):
        return (u[1], u[0])

    def lift(self, u, k):
        return u

    def digits(self, u, k):
        # power-series long division of num by den
        p = self.p
        num, den = u
        inv0 = pow(den[0], p - 2, p) if p > 2 else 1
        rem = list(num[:k]) + [0] * max(0, k - len(num))
        out = []
        for i in range(k):
            q = (rem[i] * inv0) % p
            out.append(q)
            if q:
                for j in range(1, min(len(den), k - i)):
                    rem[i + j] = (rem[i + j] - q * den[j]) % p
        return out

    def from_digits(self, ds):
        return (tuple(d % self.p for d in ds), (1,))

    def from_int(self, n):
        return ((n % self.p,), (1,))

    def is_one(self, u):
        return u[0] == u[1]

    zero = ((), (1,))
    one = ((1,), (1,))


_RINGS = {"padic": _PadicRing, "series": _SeriesRing,
          "exact-padic": _ExactPadicRing, "exact-series": _ExactSeriesRing}


@lru_cache(maxsize=None)
def _ring(kind, p):
    return _RINGS[kind](p)


# --------------------------------------------------------------------------
# field context


@dataclass(frozen=True)
class FieldContext:
    """Which field an element lives in: ``Q_p``, ``F_p[[t]]`` or an oracle."""

    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if not _is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")

    @property
    def ring(self):
        return _ring(self.kind, self.p)

    @property
    def is_exact(self):
        return self.kind.startswith("exact")

    @property
    def is_series(self):
        return self.kind.endswith("series")

    @property
    def symbol(self):
        return "t" if self.is_series else str(self.p)

    @property
    def exact(self):
        """The oracle context matching this field."""
        return FieldContext("exact-series" if self.is_series else "exact-padic", self.p)

    @property
    def zealous(self):
        return FieldContext("series" if self.is_series else "padic", self.p)

    def __str__(self):
        names = {"padic": "Q_{p}", "series": "F_{p}[[t]]",
                 "exact-padic": "Q(p={p})", "exact-series": "F_{p}(t)"}
        return names[self.kind].format(p=self.p)

    # constructors ------------------------------------------------------

    def zero(self, prec=INF):
        """``O(pi^prec)``; with ``prec = inf`` the exact zero."""
        if self.is_exact:
            prec = INF
        return UltraScalar(self, prec, prec, self.ring.zero)

    def one(self, prec=INF):
        return self.from_int(1, prec)

    def from_int(self, n, prec=INF):
        ring = self.ring
        if self.is_exact:
            prec = INF
        x = _normalize(self, 0, INF, ring.from_int(n)) if n else self.zero()
        if prec != INF:
            x = x.change_prec(prec)
        return x

    def uniformizer_power(self, k, prec=INF):
        """Exact ``pi^k``, optionally truncated to absolute precision ``prec``."""
        x = UltraScalar(self, k, INF, self.ring.one)
        if prec != INF and not self.is_exact:
            x = x.change_prec(prec)
        return x

    def from_digits(self, digits, lo=0, hi=None):
        """Element ``sum digits[i] pi^(lo+i) + O(pi^hi)``; ``hi`` defaults to
        ``lo + len(digits)``."""
        digits = [d % self.p for d in digits]
        if hi is None:
            hi = lo + len(digits)
        if self.is_exact:
            hi = INF
        return _normalize(self, lo, hi, self.ring.from_digits(digits[: max(0, hi - lo)] if hi != INF else digits))

    def from_rational(self, q, prec=INF):
        """Embed a rational (Q_p kinds) at absolute precision ``prec``."""
        if self.is_series:
            raise TypeError("rationals embed only into p-adic kinds")
        q = Fraction(q)
        if self.is_exact:
            return _normalize(self, 0, INF, q)
        if q == 0:
            return self.zero(prec)
        v, unit = _ring("exact-padic", self.p).strip(q)
        if prec == INF:
            if unit.denominator != 1:
                raise PrecisionError("non-integral unit needs a finite precision", prec)
            return UltraScalar(self, v, INF, unit.numerator)
        if prec <= v:
            return self.zero(prec)
        k = prec - v
        pk = self.ring.pk(k)
        u = (unit.numerator * pow(unit.denominator, -1, pk)) % pk
        return UltraScalar(self, v, prec, u)

    def from_polynomial(self, coeffs, den=(1,), prec=INF):
        """Embed ``num/den`` (coefficient lists over F_p) in a series kind."""
        if not self.is_series:
            raise TypeError("polynomials embed only into series kinds")
        p = self.p
        num = tuple(c % p for c in coeffs)
        den = tuple(c % p for c in den)
        ex = _normalize(FieldContext("exact-series", p), 0, INF, (num, den))
        if self.is_exact:
            return ex
        return to_zealous(ex, prec, self)


# --------------------------------------------------------------------------
# the scalar


class UltraScalar:
    """``pi^lo * unit + O(pi^hi)``; see the module docstring."""

    __slots__ = ("ctx", "lo", "hi", "unit")

    def __init__(self, ctx, lo, hi, unit):
        self.ctx = ctx
        self.lo = lo
        self.hi = hi
        self.unit = unit

    # inspection ----------------------------------------------------------

    @property
    def rel(self):
        return self.hi - self.lo

    @property
    def interval(self):
        return (self.lo, self.hi)

    @property
    def is_apparent_zero(self):
        return self.lo >= self.hi

    @property
    def is_exact(self):
        return self.hi == INF

    @property
    def is_exact_zero(self):
        return self.lo == INF

    def valuation(self):
        if self.lo < self.hi:
            return self.lo
        if self.hi == INF:
            return INF
        return AtLeast(self.hi)

    @property
    def digits(self):
        """Known digits, coefficient of ``pi^(lo+i)`` at index ``i``."""
        if self.is_apparent_zero:
            return []
        if self.hi == INF:
            raise ValueError("exact element has no finite digit list; use digits_upto")
        return self.ctx.ring.digits(self.unit, self.hi - self.lo)

    def digits_upto(self, c):
        """Digits of ``pi^k`` for ``k`` in ``[0, c)`` (below ``lo`` they are 0);
        requires ``c <= hi`` and ``lo >= 0``."""
        if c > self.hi:
            raise ValueError(f"digit {c - 1} is not known (precision {self.hi})")
        if self.is_apparent_zero:
            return [0] * c
        if self.lo < 0:
            raise ValueError("element has negative valuation")
        body = self.ctx.ring.digits(self.unit, max(0, c - self.lo)) if c > self.lo else []
        return ([0] * min(self.lo, c) + body)[:c]

    # arithmetic ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, UltraScalar):
            if other.ctx != self.ctx:
                raise ContextMismatch(f"{self.ctx} vs {other.ctx}")
            return other
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if isinstance(other, Fraction) and not self.ctx.is_series:
            return self.ctx.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, neg(other))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(other, self)

    # precision -------------------------------------------------------------

    def change_prec(self, c):
        """Copy truncated or zero-lifted to absolute precision ``c``."""
        return change_prec(self, c)

    def set_prec(self, c):
        """Destructive :meth:`change_prec`; returns ``self``."""
        y = change_prec(self, c)
        self.lo, self.hi, self.unit = y.lo, y.hi, y.unit
        return self

    # comparison / display --------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, UltraScalar):
            return NotImplemented
        return (self.ctx == other.ctx and self.lo == other.lo and self.hi == other.hi
                and self.unit == other.unit)

    def __hash__(self):
        return hash((self.ctx, self.lo, self.hi, self.unit))

    def __repr__(self):
        return f"UltraScalar({self.ctx}, {self.to_text()})"

    def __str__(self):
        return self.to_text()

    def to_text(self, symbol=None):
        return to_text(self, symbol)

    def to_json(self):
        return to_json(self)


def _normalize(ctx, lo, hi, raw):
    """Build an element from ``raw`` placed at ``pi^lo`` with precision ``hi``."""
    ring = ctx.ring
    if hi != INF:
        if lo >= hi:
            return UltraScalar(ctx, hi, hi, ring.zero)
        raw = ring.trunc(raw, hi - lo)
    s = ring.strip(raw)
    if s is None:
        return UltraScalar(ctx, hi, hi, ring.zero)
    v, unit = s
    lo += v
    if hi != INF:
        unit = ring.trunc(unit, hi - lo)
    return UltraScalar(ctx, lo, hi, unit)


def _check(x, y):
    if x.ctx != y.ctx:
        raise ContextMismatch(f"context mismatch: {x.ctx} vs {y.ctx}")


def add(x, y):
    """Zealous sum: precision ``min(hi_x, hi_y)``, carries propagate in Q_p."""
    _check(x, y)
    if x.lo == INF:
        return y
    if y.lo == INF:
        return x
    hi = min(x.hi, y.hi)
    lo = min(x.lo, y.lo)
    if lo >= hi:
        return x.ctx.zero(hi)
    ring = x.ctx.ring
    raw = ring.add(ring.shift(x.unit, x.lo - lo), ring.shift(y.unit, y.lo - lo))
    return _normalize(x.ctx, lo, hi, raw)


def neg(x):
    if x.lo >= x.hi:
        return x
    ring = x.ctx.ring
    u = ring.neg(x.unit)
    if x.hi != INF:
        u = ring.trunc(u, x.hi - x.lo)
    return UltraScalar(x.ctx, x.lo, x.hi, u)


def sub(x, y):
    return add(x, neg(y))


def _op_prec(x, y):
    a = x.rel if x.hi != INF else 0
    b = y.rel if y.hi != INF else 0
    return max(a, b)


def mul(x, y):
    """Zealous product on ``[a + c, min(a + d, b + c))``."""
    _check(x, y)
    lo = x.lo + y.lo
    hi = min(x.lo + y.hi, x.hi + y.lo)
    if x.lo >= x.hi or y.lo >= y.hi:
        return x.ctx.zero(hi)
    led = _ACTIVE.get()
    if led is not None:
        led.record("mul", _op_prec(x, y))
    ring = x.ctx.ring
    if ring.is_one(y.unit) and y.hi == INF:
        return _normalize(x.ctx, lo, hi, ring.lift(x.unit, hi - lo) if hi != INF else x.unit)
    unit = ring.mul(x.unit, y.unit, hi - lo)
    if hi == INF:
        return _normalize(x.ctx, lo, hi, unit)
    return UltraScalar(x.ctx, lo, hi, unit)


def div(x, y):
    """Zealous quotient on ``[a - c, min(a + d - 2c, b - c))``.

    Raises :class:`PrecisionError` when ``y`` is indistinguishable from zero.
    """
    _check(x, y)
    if y.lo >= y.hi:
        raise PrecisionError(f"division by O(pi^{y.hi})", y.hi)
    lo = x.lo - y.lo
    hi = min(x.lo + y.hi - 2 * y.lo, x.hi - y.lo)
    if x.lo >= x.hi:
        return x.ctx.zero(hi)
    ring = x.ctx.ring
    n = hi - lo
    if n == INF and not ring.exact:
        if ring.is_one(y.unit):
            return UltraScalar(x.ctx, lo, INF, x.unit)
        if not ring.series and y.unit == -1:
            return UltraScalar(x.ctx, lo, INF, -x.unit)
        raise PrecisionError("exact quotient has an infinite expansion; set a precision first")
    led = _ACTIVE.get()
    if led is not None:
        led.record("div", _op_prec(x, y))
    if ring.is_one(y.unit) and (y.hi == INF or ring.exact):
        unit = ring.lift(ring.trunc(x.unit, n), n)
    else:
        unit = ring.mul(x.unit, ring.inv(ring.trunc(y.unit, n), n), n)
    if ring.exact:
        return _normalize(x.ctx, lo, INF, unit)
    return UltraScalar(x.ctx, lo, hi, unit)


def change_prec(x, c):
    """Truncate to absolute precision ``c`` or lift with zero digits up to it."""
    if x.ctx.is_exact:
        raise TypeError("oracle elements carry no precision; use to_zealous")
    ring = x.ctx.ring
    if c <= x.lo:
        return x.ctx.zero(c)
    if x.hi == INF:
        return UltraScalar(x.ctx, x.lo, c, ring.trunc(x.unit, c - x.lo))
    if c == x.hi:
        return x
    if c < x.hi:
        return UltraScalar(x.ctx, x.lo, c, ring.trunc(x.unit, c - x.lo))
    if x.lo >= x.hi:
        return x.ctx.zero(c)
    return UltraScalar(x.ctx, x.lo, c, ring.lift(x.unit, c - x.lo))


def change_prec_(x, c):
    """Destructive variant of :func:`change_prec`."""
    return x.set_prec(c)


def valuation(x):
    return x.valuation()


def sample_unit(ctx, precision, seed=None):
    """Random unit with uniformly drawn digits on ``[0, precision)``."""
    if precision < 1:
        raise ValueError("precision must be at least 1")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    digits = [rng.randrange(1, ctx.p)] + [rng.randrange(ctx.p) for _ in range(precision - 1)]
    return ctx.from_digits(digits, 0, precision)


def sample_element(ctx, lo, hi, rng):
    """Random element on ``[lo, hi)`` with nonzero leading digit."""
    return ctx.from_digits([rng.randrange(1, ctx.p)] + [rng.randrange(ctx.p) for _ in range(hi - lo - 1)], lo, hi)


# --------------------------------------------------------------------------
# oracle bridge


def to_zealous(x, prec, ctx=None):
    """Truncate an oracle element to absolute precision ``prec``."""
    target = ctx if ctx is not None else x.ctx.zealous
    if not x.ctx.is_exact:
        return change_prec(x, prec)
    if x.lo == INF or prec <= x.lo:
        return target.zero(prec)
    digits = x.ctx.ring.digits(x.unit, prec - x.lo)
    return target.from_digits(digits, x.lo, prec)


def oracle_digits(x, lo, hi):
    """Digits of ``pi^k`` for ``k`` in ``[lo, hi)`` of an oracle element."""
    if x.lo == INF:
        return [0] * (hi - lo)
    out = []
    body = x.ctx.ring.digits(x.unit, max(0, hi - x.lo))
    for k in range(lo, hi):
        out.append(body[k - x.lo] if k >= x.lo else 0)
    return out


# --------------------------------------------------------------------------
# serialization


def _pow_text(sym, k):
    if k == 0:
        return ""
    if k == 1:
        return sym
    return f"{sym}^{k}"


def to_text(x, symbol=None):
    """``pi^a * (d0 + d1*pi + ...) + O(pi^b)`` with every known digit."""
    sym = symbol if symbol is not None else x.ctx.symbol
    if x.ctx.is_exact:
        if x.lo == INF:
            return "0"
        return f"{sym}^{x.lo} * [{x.unit}]"
    if x.lo >= x.hi:
        return f"O({sym}^{x.hi})"
    if x.hi == INF:
        return f"{sym}^{x.lo} * [{x.unit}]"
    parts = []
    for i, d in enumerate(x.digits):
        pw = _pow_text(sym, i)
        parts.append(str(d) if not pw else f"{d}*{pw}")
    return f"{sym}^{x.lo} * ({' + '.join(parts)}) + O({sym}^{x.hi})"


_TEXT_RE = re.compile(r"^\s*(?P<sym>[\w]+)\^(?P<a>-?\d+)\s*\*\s*\((?P<body>[^)]*)\)\s*\+\s*O\(\s*(?P=sym)\^(?P<b>-?\d+)\s*\)\s*$")
_ZERO_RE = re.compile(r"^\s*O\(\s*(?P<sym>[\w]+)\^(?P<b>-?\d+)\s*\)\s*$")


def from_text(ctx, text):
    m = _ZERO_RE.match(text)
    if m:
        return ctx.zero(int(m.group("b")))
    m = _TEXT_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse scalar {text!r}")
    digits = []
    for term in m.group("body").split("+"):
        digits.append(int(term.strip().split("*")[0]))
    return ctx.from_digits(digits, int(m.group("a")), int(m.group("b")))


def to_json(x):
    if x.ctx.is_exact or x.hi == INF:
        if x.lo == INF:
            return {"a": None, "b": None, "exact": "0"}
        if x.ctx.is_series:
            num, den = x.unit if x.ctx.is_exact else (x.unit, (1,))
            return {"a": x.lo, "b": None, "exact": {"num": list(num), "den": list(den)}}
        return {"a": x.lo, "b": None, "exact": str(x.unit)}
    return {"a": x.lo, "b": x.hi, "digits": x.digits}


def from_json(ctx, obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("b") is None:
        ex = obj["exact"]
        if ex == "0":
            return ctx.zero()
        if ctx.is_series:
            if ctx.is_exact:
                return _normalize(ctx, obj["a"], INF, (tuple(ex["num"]), tuple(ex["den"])))
            return _normalize(ctx, obj["a"], INF, tuple(ex["num"]))
        val = Fraction(ex)
        if ctx.is_exact:
            return _normalize(ctx, obj["a"], INF, val)
        return UltraScalar(ctx, obj["a"], INF, int(val))
    return ctx.from_digits(obj["digits"], obj["a"], obj["b"])


def Qp(p):
    return FieldContext("padic", p)


def Fpt(p):
    return FieldContext("series", p)


def exact_oracle(p, series=False):
    return FieldContext("exact-series" if series else "exact-padic", p)
