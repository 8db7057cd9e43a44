# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for truncated polynomial arithmetic over F_p.

Same interface as ``_kernels_py``. Primes must be below 2**31 so that a
single product fits in a signed 64-bit accumulator.
"""

from libc.stdlib cimport malloc, free

BACKEND = "cython"

ctypedef long long i64


cdef i64* _load(object seq, Py_ssize_t n, i64 p) except NULL:
    cdef i64* buf = <i64*> malloc((n if n > 0 else 1) * sizeof(i64))
    cdef Py_ssize_t i
    if buf == NULL:
        raise MemoryError()
    for i in range(n):
        buf[i] = (<i64> seq[i]) % p
    return buf


cdef void _mul_into(i64* a, Py_ssize_t la, i64* b, Py_ssize_t lb, i64* out,
                    Py_ssize_t n, i64 p) nogil:
    cdef Py_ssize_t k, i, lo, hi, cnt
    cdef i64 acc
    cdef i64 sq = (p - 1) * (p - 1)
    cdef i64 batch = 1
    if sq > 0:
        batch = (<i64> 0x7FFFFFFFFFFFFFFF) // sq - 1
        if batch < 1:
            batch = 1
    for k in range(n):
        lo = k - lb + 1
        if lo < 0:
            lo = 0
        hi = k
        if hi > la - 1:
            hi = la - 1
        acc = 0
        cnt = 0
        for i in range(lo, hi + 1):
            acc += a[i] * b[k - i]
            cnt += 1
            if cnt >= batch:
                acc %= p
                cnt = 0
        out[k] = acc % p


def mul_trunc(a, b, Py_ssize_t n, i64 p):
    """Return the first ``n`` coefficients of ``a * b`` reduced mod ``p``."""
    if n <= 0:
        return []
    cdef Py_ssize_t la = min(len(a), n)
    cdef Py_ssize_t lb = min(len(b), n)
    if la == 0 or lb == 0:
        return [0] * n
    cdef i64* pa = _load(a, la, p)
    cdef i64* pb = _load(b, lb, p)
    cdef i64* po = <i64*> malloc(n * sizeof(i64))
    cdef Py_ssize_t i
    cdef Py_ssize_t top = la + lb - 1
    try:
        if po == NULL:
            raise MemoryError()
        if top > n:
            top = n
        with nogil:
            _mul_into(pa, la, pb, lb, po, top, p)
        return [po[i] for i in range(top)] + [0] * (n - top)
    finally:
        free(pa)
        free(pb)
        free(po)


def mul_full(a, b, i64 p):
    if not a or not b:
        return []
    return mul_trunc(a, b, len(a) + len(b) - 1, p)


def inv_trunc(a, Py_ssize_t n, i64 p):
    """Inverse of the unit series ``a`` modulo ``t^n`` (schoolbook recurrence)."""
    if n <= 0:
        return []
    if a[0] % p == 0:
        raise ZeroDivisionError("series is not a unit")
    cdef Py_ssize_t la = min(len(a), n)
    cdef i64* pa = _load(a, la, p)
    cdef i64* g = <i64*> malloc(n * sizeof(i64))
    cdef i64 inv0 = pow(int(a[0]), -1, int(p))
    cdef i64 acc
    cdef Py_ssize_t k, j, top
    try:
        if g == NULL:
            raise MemoryError()
        with nogil:
            g[0] = inv0
            for k in range(1, n):
                acc = 0
                top = k if k < la - 1 else la - 1
                for j in range(1, top + 1):
                    acc = (acc + pa[j] * g[k - j]) % p
                g[k] = ((p - acc) % p) * inv0 % p
        return [g[k] for k in range(n)]
    finally:
        free(pa)
        free(g)


def add_mod(a, b, i64 p):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    cdef Py_ssize_t i
    for i in range(len(b)):
        out[i] = (out[i] + b[i]) % p
    return out


def sub_mod(a, b, i64 p):
    cdef Py_ssize_t n = max(len(a), len(b))
    cdef Py_ssize_t i
    out = [0] * n
    for i in range(len(a)):
        out[i] = a[i]
    for i in range(len(b)):
        out[i] = (out[i] - b[i]) % p
    return out
