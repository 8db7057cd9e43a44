"""Kernel selection.

The compiled extension ``_kernels`` is used when it imports; otherwise the
pure-Python module is used. Setting ``UB_PURE_PYTHON=1`` forces the
fallback. Primes at or above 2**31 always go through the Python kernels.

The compiled kernels are schoolbook; past a few thousand coefficients the
Kronecker-substitution fallback (which rides on CPython's Karatsuba) wins,
so long operands are routed there. Crossovers come from
``benchmarks/bench_kernels.py``.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("UB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python kernels requested")
    from . import _kernels as _fast
except ImportError:
    _fast = None

_SMALL_PRIME = 1 << 31
MUL_CROSSOVER = 1536
INV_CROSSOVER = 768

BACKEND = _fast.BACKEND if _fast is not None else _kernels_py.BACKEND


def _pick(p, size=0, crossover=None):
    if _fast is not None and p < _SMALL_PRIME and (crossover is None or size < crossover):
        return _fast
    return _kernels_py


def mul_trunc(a, b, n, p):
    return _pick(p, min(n, len(a), len(b)), MUL_CROSSOVER).mul_trunc(a, b, n, p)


def mul_full(a, b, p):
    return _pick(p, min(len(a), len(b)), MUL_CROSSOVER).mul_full(a, b, p)


def inv_trunc(a, n, p):
    return _pick(p, n, INV_CROSSOVER).inv_trunc(a, n, p)


def add_mod(a, b, p):
    return _pick(p).add_mod(a, b, p)


def sub_mod(a, b, p):
    return _pick(p).sub_mod(a, b, p)
