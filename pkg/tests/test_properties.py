import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fronthaul import compression as comp
from fronthaul.numerics import hermitian_eig

gains = arrays(np.float64, st.integers(1, 8), elements=st.floats(1e-6, 1e6))
rates = st.floats(0.01, 80.0)


@given(gains, rates)
def test_approx_allocation_sums_to_rate(g, R):
    r, _ = comp.approx_rate_allocation(g, R)
    assert np.all(r >= 0)
    assert abs(r.sum() - R) <= 1e-9 * max(1.0, R)


@given(gains, rates)
def test_uqn_residual(g, R):
    s2 = 1.0 + 30.0 * g
    d = comp.uqn_delta(s2, R)
    assert abs(comp.uqn_rate(s2, d) - R) <= 1e-9


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_eig_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = X + X.conj().T
    e = hermitian_eig(A)
    np.testing.assert_allclose(e.reconstruct(), A, atol=1e-10 * max(1.0, np.abs(A).max()))
