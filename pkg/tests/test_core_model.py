import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from distexp import ConfigError, FiniteSnrConfig, HighSnrPoint, finite_snr, make_system


def test_siso():
    c = make_system(1, 1, 2.0, 1.0)
    assert (c.m_star, c.m_sup) == (1, 1)


def test_three_by_two():
    c = make_system(3, 2, 2.0, 0.5)
    assert (c.m_star, c.m_sup) == (2, 3)


@pytest.mark.parametrize(
    "args", [(2, 2, 0, 0.5), (2, 2, -1, 0.5), (0, 2, 1, 0.5), (2, 0, 1, 0.5), (2, 2, 1, -0.1),
             (2, 2, math.inf, 0.5), (2, 2, math.nan, 0.5), (1.5, 2, 1, 0)]
)
def test_rejects_out_of_range(args):
    with pytest.raises(ConfigError):
        make_system(*args)


@given(st.integers(1, 8), st.integers(1, 8), st.floats(1e-3, 50), st.floats(0, 20))
def test_antenna_identity(mt, mr, b, nu):
    c = make_system(mt, mr, b, nu)
    assert c.m_star * c.m_sup == mt * mr
    assert c.m_star <= c.m_sup
    assert make_system(mt, mr, b, nu) == c
    assert c.with_b(2 * b).b == 2 * b and c.with_nu(nu + 1).nu == nu + 1


def test_high_snr_point_feasibility():
    assert HighSnrPoint((0.5, 0.2), 0.0).is_feasible()
    assert not HighSnrPoint((0.2, 0.5), 0.0).is_feasible()
    assert not HighSnrPoint((0.5, -0.1), 0.0).is_feasible()
    assert not HighSnrPoint((0.5, 0.1), -1.0).is_feasible()


def test_finite_snr_convention():
    c = make_system(2, 2, 1.0, 0.5)
    fin = finite_snr(c, 40.0)
    assert fin.rho == pytest.approx(1e4)
    assert fin.rho_s == pytest.approx(1e2)
    with pytest.raises(ConfigError):
        FiniteSnrConfig(0.0, 1.0)
    with pytest.raises(ConfigError):
        FiniteSnrConfig(1.0, -1.0)
