import numpy as np
import pytest

from lagrecover import _pykernels, kernels

BACKENDS = kernels.available_backends()


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.get_backend("python") is _pykernels
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_selected_backend():
    assert kernels.BACKEND in BACKENDS


def _batch(rng, B, N):
    e_max = rng.uniform(8, 16, size=B)
    e_init = rng.uniform(0.2, 0.5, size=B) * e_max
    e_ref = rng.uniform(0.55, 0.8, size=B) * e_max
    P = rng.uniform(3, 5, size=B)
    z = rng.uniform(0.015, 0.075, size=B)
    up, down = P / 3 * (1 - z), P / 3 * (1 + z)
    return e_init, np.ones(B), e_max, e_ref, up, down


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    rng = np.random.default_rng(seed)
    B, N = 64, 24
    prices = rng.normal(0, 30, size=(B, N))
    # integer prices force ties, which both backends must break identically
    prices[::2] = np.round(prices[::2] / 10)
    kmin = rng.integers(0, 8, size=B)
    kmax = kmin + rng.integers(0, 10, size=B)
    assert np.array_equal(py.greedy_charge_batch(prices, kmin, kmax), cy.greedy_charge_batch(prices, kmin, kmax))
    cv = rng.normal(0, 30, size=(B, N))
    args = _batch(rng, B, N)
    for allow in (True, False):
        a = py.dp_v2g_batch(prices, cv, *args, allow)
        b = cy.dp_v2g_batch(prices, cv, *args, allow)
        for x, y in zip(a, b):
            assert np.array_equal(np.asarray(x), np.asarray(y))


@pytest.mark.parametrize("name", BACKENDS)
def test_greedy_kernel_basic(name):
    mod = kernels.get_backend(name)
    u = mod.greedy_charge_batch(np.array([[3.0, 1.0, 2.0, -1.0]]), [1], [4])
    assert np.asarray(u).tolist() == [[0, 0, 0, 1]]
    u = mod.greedy_charge_batch(np.array([[3.0, 1.0, 2.0, 5.0]]), [2], [4])
    assert np.asarray(u).tolist() == [[0, 1, 1, 0]]


@pytest.mark.parametrize("name", BACKENDS)
def test_kernels_accept_read_only_inputs(name):
    mod = kernels.get_backend(name)
    prices = np.array([[2.0, 1.0, 3.0]])
    prices.setflags(write=False)
    assert np.asarray(mod.greedy_charge_batch(prices, [1], [3])).tolist() == [[0, 1, 0]]
    one = np.array([1.0])
    one.setflags(write=False)
    u, v, ok = mod.dp_v2g_batch(prices, prices, one * 2, one, one * 5, one * 2, one, one, True)
    assert bool(np.asarray(ok)[0])
