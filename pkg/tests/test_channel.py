import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirtyavc.channel import SystemParams, derive_constants, sample_noise, sample_state, transmit
from dirtyavc.errors import DimensionError

UNIT = SystemParams(1.0, 1.0, 1.0, 1.0, 100)

pos = st.floats(1e-3, 1e3)
nonneg = st.one_of(st.just(0.0), pos)


def test_unit_constants():
    c = derive_constants(UNIT)
    assert c.alpha == pytest.approx(1 / 3, abs=1e-12)
    assert c.P_U == pytest.approx(10 / 9, abs=1e-12)
    assert c.C == pytest.approx(0.292481, abs=1e-6)
    assert c.C_tilde == pytest.approx(0.076002, abs=1e-6)
    assert c.C_U == pytest.approx(0.368483, abs=1e-6)
    assert c.theta == pytest.approx(0.632456, abs=1e-6)


def test_independent_calculator():
    # closed forms at P = Lam = s2 = sS2 = 1
    assert derive_constants(UNIT).C == pytest.approx(0.5 * math.log2(1.5), abs=1e-15)
    assert derive_constants(UNIT).C_tilde == pytest.approx(0.5 * math.log2(10 / 9), abs=1e-15)
    assert derive_constants(UNIT).theta == pytest.approx(math.sqrt(0.4), abs=1e-15)


def test_no_jammer_no_state():
    p = SystemParams(2.0, 0.0, 0.5, 0.0, 10)
    c = derive_constants(p)
    assert c.C == pytest.approx(0.5 * math.log2(1 + 2.0 / 0.5))
    assert c.theta ** 2 == pytest.approx(c.alpha)
    assert c.P_U == p.P


@settings(max_examples=100, deadline=None)
@given(P=pos, Lam=nonneg, s2=pos)
def test_no_state_needs_no_binning(P, Lam, s2):
    assert derive_constants(SystemParams(P, Lam, s2, 0.0, 5)).C_tilde == 0.0


def test_identities_on_random_draws():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        P, Lam, s2, sS2 = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), 4))
        c = derive_constants(SystemParams(P, Lam, s2, sS2, 1))
        assert abs(c.C_U - (c.C + c.C_tilde)) <= 1e-12
        assert abs(-0.5 * math.log2(1 - c.theta ** 2) - c.C_U) <= 1e-12
        assert 0 < c.alpha < 1 and 0 < c.theta < 1


@pytest.mark.parametrize("field,value", [("P", 0.0), ("Lam", -1.0), ("noise_var", 0.0),
                                         ("state_var", -0.1), ("n", 0), ("n", 2.5)])
def test_params_rejected(field, value):
    kw = dict(P=1.0, Lam=1.0, noise_var=1.0, state_var=1.0, n=10)
    kw[field] = value
    with pytest.raises(ValueError, match=field):
        SystemParams(**kw)


def test_state_zero_variance():
    p = SystemParams(1.0, 1.0, 1.0, 0.0, 50)
    assert not np.any(sample_state(p, np.random.default_rng(0)))


def test_state_and_noise_variance():
    p = SystemParams(1.0, 1.0, 0.7, 2.0, 100_000)
    rng = np.random.default_rng(1)
    assert abs(np.var(sample_state(p, rng)) - 2.0) < 0.05 * 2.0
    assert abs(np.var(sample_noise(p, rng)) - 0.7) < 0.05 * 0.7


def test_tiny_noise():
    p = SystemParams(1.0, 1.0, 1e-12, 1.0, 100)
    assert np.max(np.abs(sample_noise(p, np.random.default_rng(0)))) < 1e-4


def test_state_noise_independence():
    p = SystemParams(1.0, 1.0, 1.0, 1.0, 200)
    rng = np.random.default_rng(2)
    v = np.array([np.dot(sample_state(p, rng), sample_noise(p, rng)) / p.n for _ in range(2000)])
    assert abs(v.mean()) < 4 * math.sqrt(1.0 / p.n) / math.sqrt(v.size)


def test_state_concentration_large_n():
    p = SystemParams(1.0, 1.0, 1.0, 1.5, 10_000)
    rng = np.random.default_rng(3)
    ok = [abs(np.dot(s, s) / p.n - 1.5) <= 0.05 * 1.5 for s in (sample_state(p, rng) for _ in range(300))]
    assert np.mean(ok) >= 0.99


def test_transmit_examples():
    z = np.array([0.3, -0.2])
    np.testing.assert_array_equal(transmit(np.zeros(2), np.zeros(2), np.zeros(2), z), z)
    np.testing.assert_array_equal(transmit([1, 1], [2, 2], [-1, -1], [0, 0]), [2, 2])
    with pytest.raises(DimensionError):
        transmit([1.0], [1.0, 2.0], [0.0], [0.0])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 50))
def test_transmit_linear_in_x(seed, n):
    rng = np.random.default_rng(seed)
    x, x2, s, j, z = rng.standard_normal((5, n))
    np.testing.assert_allclose(transmit(x + x2, s, j, z), transmit(x, s, j, z) + x2, atol=1e-12)


def test_with_n_copies_params():
    assert UNIT.with_n(7).n == 7 and UNIT.with_n(7).P == UNIT.P
