"""Pure-Python kernels for truncated polynomial arithmetic over F_p.

Coefficient sequences are little-endian lists of ints in ``[0, p)``.
Multiplication packs both operands into Python integers (Kronecker
substitution) so the convolution itself runs inside CPython's bignum
multiply.
"""

BACKEND = "python"


def _slot_bytes(n_terms, p):
    bound = n_terms * (p - 1) * (p - 1)
    return max(1, (bound.bit_length() + 8) // 8)


def _pack(coeffs, width):
    return int.from_bytes(b"".join(c.to_bytes(width, "little") for c in coeffs), "little")


def mul_trunc(a, b, n, p):
    """Return the first ``n`` coefficients of ``a * b`` reduced mod ``p``."""
    if n <= 0:
        return []
    a = a[:n]
    b = b[:n]
    if not a or not b:
        return [0] * n
    width = _slot_bytes(min(len(a), len(b)), p)
    prod = _pack(a, width) * _pack(b, width)
    raw = prod.to_bytes(width * (len(a) + len(b)), "little")
    out = [int.from_bytes(raw[i * width:(i + 1) * width], "little") % p
           for i in range(min(n, len(a) + len(b) - 1))]
    if len(out) < n:
        out.extend([0] * (n - len(out)))
    return out


def mul_full(a, b, p):
    if not a or not b:
        return []
    return mul_trunc(a, b, len(a) + len(b) - 1, p)


def inv_trunc(a, n, p):
    """Inverse of the unit series ``a`` modulo ``t^n`` by Newton iteration."""
    if n <= 0:
        return []
    if a[0] % p == 0:
        raise ZeroDivisionError("series is not a unit")
    g = [pow(a[0], -1, p)]
    k = 1
    while k < n:
        k = min(2 * k, n)
        e = mul_trunc(a, g, k, p)
        e = [(-c) % p for c in e]
        e[0] = (e[0] + 2) % p
        g = mul_trunc(g, e, k, p)
    return g


def add_mod(a, b, p):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    return out


def sub_mod(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] - c) % p
    return out
