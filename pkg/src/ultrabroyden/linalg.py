"""Vectors and matrices of zealous scalars.

Norms are valuation based: ``val(v)`` is the minimum entry valuation and
the induced matrix norm coincides with the maximum-coefficient norm, so
``val(A)`` is the minimum over all coefficients.

Indices reported by :func:`choose_update_vector` are 1-based. There is no
public matrix-matrix product; the only one lives inside
:func:`lift_inverse`, which Newton's method uses and Broyden's never does.
"""

from __future__ import annotations

import logging

from .errors import BasinViolation, InvertibilityError, PrecisionError, SingularResidueError
from .field import INF, AtLeast, UltraScalar, lower_bound
from . import ledger

log = logging.getLogger(__name__)


class UltraVec:
    """Column vector of scalars sharing one field context."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = tuple(entries)
        if self.entries:
            ctx = self.entries[0].ctx
            for e in self.entries:
                if e.ctx != ctx:
                    raise ValueError("vector entries must share a field context")

    @property
    def ctx(self):
        return self.entries[0].ctx

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other):
        _dims(self, other)
        return UltraVec(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        _dims(self, other)
        return UltraVec(a - b for a, b in zip(self, other))

    def __neg__(self):
        return UltraVec(-a for a in self)

    def __eq__(self, other):
        return isinstance(other, UltraVec) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def scale(self, c):
        return UltraVec(c * a for a in self)

    def valuation(self):
        return vec_val(self)

    @property
    def interval(self):
        return _interval(self.entries)

    def change_prec(self, c):
        return UltraVec(e.change_prec(c) for e in self)

    def set_prec(self, c):
        for e in self.entries:
            e.set_prec(c)
        return self

    def __repr__(self):
        return "UltraVec([" + ", ".join(e.to_text() for e in self) + "])"

    def to_json(self):
        return [e.to_json() for e in self]


class UltraMat:
    """Dense matrix of scalars, stored row-major."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(r) for r in rows)
        n = len(self.rows[0]) if self.rows else 0
        if any(len(r) != n for r in self.rows):
            raise ValueError("ragged matrix")

    @property
    def ctx(self):
        return self.rows[0][0].ctx

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i):
        return UltraVec(self.rows[i])

    def col(self, j):
        return UltraVec(r[j] for r in self.rows)

    def entries(self):
        for r in self.rows:
            yield from r

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return UltraMat([a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows))

    def __sub__(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return UltraMat([a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows))

    def __eq__(self, other):
        return isinstance(other, UltraMat) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def valuation(self):
        return mat_val(self)

    @property
    def interval(self):
        return _interval(list(self.entries()))

    def change_prec(self, c):
        return UltraMat([e.change_prec(c) for e in r] for r in self.rows)

    def set_prec(self, c):
        for e in self.entries():
            e.set_prec(c)
        return self

    def map(self, fn):
        return UltraMat([fn(e) for e in r] for r in self.rows)

    def __repr__(self):
        return "UltraMat([" + "; ".join(", ".join(e.to_text() for e in r) for r in self.rows) + "])"

    def to_json(self):
        return [[e.to_json() for e in r] for r in self.rows]


def _dims(a, b):
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch {len(a)} vs {len(b)}")


def _interval(entries):
    lo = min(e.lo for e in entries)
    hi = min(e.hi for e in entries)
    return (lo, hi)


def _min_val(entries):
    known = [e.lo for e in entries if e.lo < e.hi]
    zeros = [e.hi for e in entries if e.lo >= e.hi]
    zbound = min(zeros) if zeros else INF
    if not known:
        return AtLeast(zbound) if zbound != INF else INF
    v = min(known)
    if zbound < v:
        return AtLeast(zbound)
    return v


# --------------------------------------------------------------------------
# constructors


def vector(ctx, values, prec=INF):
    return UltraVec(v if isinstance(v, UltraScalar) else ctx.from_int(v, prec) for v in values)


def matrix(ctx, rows, prec=INF):
    return UltraMat([v if isinstance(v, UltraScalar) else ctx.from_int(v, prec) for v in r] for r in rows)


def identity(ctx, m, prec=INF):
    return UltraMat([ctx.from_int(int(i == j), prec) for j in range(m)] for i in range(m))


def zero_vector(ctx, m, prec=INF):
    return UltraVec(ctx.zero(prec) for _ in range(m))


def basis_vector(ctx, m, i, prec=INF):
    """``e_i`` with 1-based ``i``."""
    return UltraVec(ctx.from_int(int(j == i - 1), prec) for j in range(m))


# --------------------------------------------------------------------------
# norms and products


def vec_val(v):
    """Minimal entry valuation, or ``AtLeast(c)`` when it is not determined."""
    return _min_val(v.entries)


def mat_val(a):
    return _min_val(list(a.entries()))


def dot(a, b):
    """``sum a_i b_i``; products with an exact-zero factor are skipped."""
    _dims(a, b)
    ctx = a.ctx
    acc = ctx.zero()
    for x, y in zip(a, b):
        if x.lo == INF or y.lo == INF:
            continue
        acc = acc + x * y
    return acc


def mat_vec(a, v):
    if a.shape[1] != len(v):
        raise ValueError(f"dimension mismatch {a.shape} . {len(v)}")
    return UltraVec(dot(UltraVec(r), v) for r in a.rows)


def vec_mat(u, a):
    """Row vector ``u^t A`` returned as an :class:`UltraVec`."""
    if a.shape[0] != len(u):
        raise ValueError(f"dimension mismatch {len(u)} . {a.shape}")
    ctx = a.ctx
    m = a.shape[1]
    out = [ctx.zero() for _ in range(m)]
    for i, ui in enumerate(u):
        if ui.lo == INF:
            continue
        row = a.rows[i]
        for j in range(m):
            if row[j].lo == INF:
                continue
            out[j] = out[j] + ui * row[j]
    return UltraVec(out)


def rank_one(a, b):
    """The matrix ``a b^t``."""
    return UltraMat([x * y for y in b] for x in a)


def _mat_mat(a, b):
    n, k = a.shape
    k2, m = b.shape
    if k != k2:
        raise ValueError("shape mismatch")
    ledger.record("matmat", n)
    cols = [UltraVec(r[j] for r in b.rows) for j in range(m)]
    return UltraMat([dot(UltraVec(ra), c) for c in cols] for ra in a.rows)


# --------------------------------------------------------------------------
# residue-field linear algebra


def _residues(a):
    p = a.ctx.p
    out = []
    for r in a.rows:
        row = []
        for e in r:
            if e.hi < 1:
                raise PrecisionError("entry not known modulo pi", e.hi)
            if e.lo < 0 and e.lo < e.hi:
                raise ValueError("entry has negative valuation")
            row.append(e.digits_upto(1)[0] % p)
        out.append(row)
    return out


def _gauss_jordan_inverse(rows, p):
    """Inverse over F_p with first-nonzero pivoting, or ``None`` if singular."""
    m = len(rows)
    aug = [list(r) + [int(i == j) for j in range(m)] for i, r in enumerate(rows)]
    for col in range(m):
        piv = next((i for i in range(col, m) if aug[i][col] % p), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = pow(aug[col][col], -1, p)
        aug[col] = [(x * inv) % p for x in aug[col]]
        for i in range(m):
            if i != col and aug[i][col]:
                f = aug[i][col]
                aug[i] = [(x - f * y) % p for x, y in zip(aug[i], aug[col])]
    return [r[m:] for r in aug]


def residue_inverse(a):
    """``B`` on ``[0, 1)`` with ``A B = I mod pi``.

    Raises :class:`SingularResidueError` when the reduction of ``A`` is
    singular.
    """
    ctx = a.ctx
    inv = _gauss_jordan_inverse(_residues(a), ctx.p)
    if inv is None:
        raise SingularResidueError("matrix is singular modulo pi")
    return UltraMat([ctx.from_digits([d], 0, 1) for d in r] for r in inv)


def is_unimodular(a):
    """True iff ``val(A) = 0`` and ``A mod pi`` is invertible."""
    try:
        res = _residues(a)
    except (PrecisionError, ValueError):
        return False
    if mat_val(a) != 0:
        return False
    return _gauss_jordan_inverse(res, a.ctx.p) is not None


def lift_inverse(a, x0, prec):
    """Lift an approximate inverse ``x0`` of ``a`` to absolute precision ``prec``.

    Uses ``X <- X + X (I - A X)``, doubling the precision each round. Each
    round costs two matrix products, recorded as ``matmat`` events.
    """
    ctx = a.ctx
    m = a.shape[0]
    eye = identity(ctx, m)
    x = x0
    cur = min(e.hi for e in x0.entries())
    while cur < prec:
        cur = min(2 * cur, prec)
        x = x.change_prec(cur)
        e = eye - _mat_mat(a.change_prec(cur), x)
        x = (x + _mat_mat(x, e)).change_prec(cur)
    return x.change_prec(prec)


def exact_inverse(a):
    """Inverse over an oracle field by Gauss-Jordan elimination."""
    ctx = a.ctx
    if not ctx.is_exact:
        raise TypeError("exact_inverse needs an oracle context")
    m = a.shape[0]
    aug = [list(r) + [ctx.from_int(int(i == j)) for j in range(m)] for i, r in enumerate(a.rows)]
    for col in range(m):
        piv = min((i for i in range(col, m) if aug[i][col].lo != INF),
                  key=lambda i: aug[i][col].lo, default=None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = ctx.one() / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for i in range(m):
            if i != col and aug[i][col].lo != INF:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return UltraMat(r[m:] for r in aug)


# --------------------------------------------------------------------------
# Broyden update machinery


def choose_update_vector(s, check, diagnostics=None):
    """Update vector ``u = s_l^{-1} e_l`` and its 1-based index ``l``.

    ``l`` is the smallest index where ``s`` attains its valuation, skipping
    indices where ``check`` (that is ``B^{-1} y``) is an apparent zero. A
    skip is appended to ``diagnostics`` and logged.
    """
    _dims(s, check)
    v = vec_val(s)
    if isinstance(v, AtLeast) or v == INF:
        raise PrecisionError("step vector is an apparent zero", lower_bound(v))
    ctx = s.ctx
    candidates = [i for i, e in enumerate(s) if e.lo == v and e.lo < e.hi]
    for rank, i in enumerate(candidates):
        if check[i].is_apparent_zero:
            continue
        if rank:
            msg = f"update index fallback: l = {i + 1} (first candidate {candidates[0] + 1} rejected)"
            log.warning(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
        u = UltraVec(ctx.one() / s[i] if j == i else ctx.zero() for j in range(len(s)))
        return u, i + 1
    raise BasinViolation("no index attaining val(s) has a nonzero check entry")


def sherman_morrison_update(binv, f_next, u, y):
    """``B^{-1} - (B^{-1} f_next)(u^t B^{-1}) / (u^t B^{-1} y)``.

    Raises :class:`InvertibilityError` when the denominator is an apparent
    zero.
    """
    h = mat_vec(binv, f_next)
    r = vec_mat(u, binv)
    den = dot(r, y)
    if den.is_apparent_zero:
        raise InvertibilityError(f"u^t B^-1 y vanishes at precision {den.hi}")
    num = rank_one(h, r)
    return binv - num.map(lambda e: e / den)
