import pytest
from hypothesis import given
from hypothesis import strategies as st

from ultrabroyden import _kernels_py, kernels

try:
    from ultrabroyden import _kernels as compiled
except ImportError:
    compiled = None

BACKENDS = [_kernels_py] + ([compiled] if compiled else [])
PRIMES = [2, 3, 17, 65521, 2147483629]


def schoolbook(a, b, n, p):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        for j, y in enumerate(b[: n - i]):
            out[i + j] = (out[i + j] + x * y) % p
    return out


def coeffs(p, max_len=40):
    return st.lists(st.integers(0, p - 1), min_size=1, max_size=max_len)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("p", PRIMES[:4])
@given(data=st.data())
def test_mul_trunc_matches_schoolbook(mod, p, data):
    a = data.draw(coeffs(p))
    b = data.draw(coeffs(p))
    n = data.draw(st.integers(0, 50))
    assert mod.mul_trunc(a, b, n, p) == schoolbook(a, b, n, p)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("p", PRIMES[:4])
@given(data=st.data())
def test_inv_trunc_is_inverse(mod, p, data):
    a = data.draw(coeffs(p))
    a[0] = a[0] or 1
    n = data.draw(st.integers(1, 50))
    inv = mod.inv_trunc(a, n, p)
    assert len(inv) == n
    assert schoolbook(a, inv, n, p) == [1] + [0] * (n - 1)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.BACKEND)
def test_mul_full_and_add_sub(mod):
    p = 7
    a, b = [1, 2, 3], [6, 5]
    assert mod.mul_full(a, b, p) == schoolbook(a, b, 4, p)
    assert mod.add_mod(a, b, p) == [0, 0, 3]
    assert mod.sub_mod(b, a, p) == [5, 3, 4]


def test_large_prime_routes_to_python():
    p = PRIMES[-1]
    a = [p - 1, p - 2, 3]
    assert kernels.mul_trunc(a, a, 3, p) == schoolbook(a, a, 3, p)


def test_long_operands_agree_across_crossover():
    import random

    r = random.Random(5)
    p = 17
    n = kernels.MUL_CROSSOVER + 10
    a = [r.randrange(p) for _ in range(n)]
    b = [r.randrange(p) for _ in range(n)]
    a[0] = 3
    assert kernels.mul_trunc(a, b, n, p) == _kernels_py.mul_trunc(a, b, n, p)
    inv = kernels.inv_trunc(a, kernels.INV_CROSSOVER + 5, p)
    assert _kernels_py.mul_trunc(a, inv, len(inv), p) == [1] + [0] * (len(inv) - 1)


@pytest.mark.skipif(compiled is None or kernels.BACKEND != "cython", reason="compiled kernels not in use")
def test_compiled_backend_selected():
    assert kernels.BACKEND == "cython"
