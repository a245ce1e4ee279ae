"""Backend equivalence: the numba kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from verivqe import _accel


def _random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return (v / np.linalg.norm(v)).astype(np.complex128)


skip_no_numba = pytest.mark.skipif(
    _accel.NUMBA_KERNELS is None, reason="numba backend unavailable"
)


@skip_no_numba
def test_apply_1q_matches(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        bit = int(rng.integers(0, n))
        m = rng.normal(size=4) + 1j * rng.normal(size=4)
        a = _random_state(rng, n)
        b = a.copy()
        _accel.NUMBA_KERNELS["apply_1q"](a, bit, *m)
        _accel.NUMPY_KERNELS["apply_1q"](b, bit, *m)
        np.testing.assert_allclose(a, b, atol=1e-14)


@skip_no_numba
def test_two_qubit_kernels_match(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        b1, b2 = rng.choice(n, size=2, replace=False)
        a = _random_state(rng, n)
        b = a.copy()
        _accel.NUMBA_KERNELS["apply_cz"](a, int(b1), int(b2))
        _accel.NUMPY_KERNELS["apply_cz"](b, int(b1), int(b2))
        np.testing.assert_allclose(a, b, atol=1e-14)
        _accel.NUMBA_KERNELS["apply_cnot"](a, int(b1), int(b2))
        _accel.NUMPY_KERNELS["apply_cnot"](b, int(b1), int(b2))
        np.testing.assert_allclose(a, b, atol=1e-14)


@skip_no_numba
def test_append_and_measure_match(rng):
    for _ in range(40):
        n = int(rng.integers(1, 5))
        a = _random_state(rng, n)
        amp = rng.normal(size=2) + 1j * rng.normal(size=2)
        amp /= np.linalg.norm(amp)
        ea = _accel.NUMBA_KERNELS["append_qubit"](a, amp[0], amp[1])
        eb = _accel.NUMPY_KERNELS["append_qubit"](a, amp[0], amp[1])
        np.testing.assert_allclose(ea, eb, atol=1e-14)
        bit = int(rng.integers(0, n + 1))
        delta = float(rng.uniform(0, 2 * np.pi))
        u = float(rng.random())
        oa, sa = _accel.NUMBA_KERNELS["measure_xy_remove"](ea, bit, delta, u)
        ob, sb = _accel.NUMPY_KERNELS["measure_xy_remove"](eb, bit, delta, u)
        assert oa == ob
        np.testing.assert_allclose(sa, sb, atol=1e-12)


def test_measure_probabilities(rng):
    # |+_phi> measured at phi is deterministic outcome 0
    kern = _accel.ACTIVE
    for _ in range(30):
        phi = float(rng.uniform(0, 2 * np.pi))
        state = np.array([1.0, np.exp(1j * phi)], dtype=np.complex128) / np.sqrt(2)
        out, rest = kern["measure_xy_remove"](state, 0, phi, float(rng.random()))
        assert out == 0
        assert rest.shape == (1,)


def test_backend_flag_reported():
    assert _accel.backend_name() in ("numba", "numpy")
