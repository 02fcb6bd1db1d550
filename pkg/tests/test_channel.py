import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squintmove.channel import (DEFAULT_ANGLES, SPEED_OF_LIGHT, AngleSet, LinkParams, build_tone_table,
                                direction_vector, path_loss)

F0, FL = 287.28e9, 291.60e9
LINK = LinkParams(10.0, 5.0, 5.157e-4)


def test_band_wavenumbers():
    t = build_tone_table(F0, FL, 128, LINK)
    assert len(t) == 129
    assert t.center_index == 64
    assert t.wavenumbers[64] == 0.0
    assert t.wavenumbers[0] == pytest.approx(45.27025247415632, rel=1e-12)
    assert t.wavenumbers[128] == -t.wavenumbers[0]
    assert t.f_c == pytest.approx(289.44e9)
    np.testing.assert_allclose(np.diff(t.freqs), (FL - F0) / 128, rtol=1e-9)


def test_odd_grid_has_no_center_tone():
    assert build_tone_table(F0, FL, 3, LINK).center_index is None


def test_single_interval():
    t = build_tone_table(F0, FL, 1, LINK)
    assert t.freqs.tolist() == [F0, FL]


@pytest.mark.parametrize("f0,fL,L", [(FL, F0, 8), (F0, F0, 8), (-1.0, FL, 8), (F0, FL, 0)])
def test_tone_table_rejects(f0, fL, L):
    with pytest.raises(ValueError):
        build_tone_table(f0, fL, L, LINK)


def test_path_loss_reference_values():
    fc = 289.44e9
    assert path_loss(fc, 10.0) == pytest.approx(8.242373478504945e-06, rel=1e-12)
    assert path_loss(fc, 10.0, 5.157e-4) == pytest.approx(8.237481256066542e-06, rel=1e-12)
    assert path_loss(fc, 10.0, 5.157e-4) / path_loss(fc, 10.0) == pytest.approx(0.9994064546515441, rel=1e-13)


@pytest.mark.parametrize("args", [(0.0, 1.0), (1e11, 0.0), (1e11, -2.0)])
def test_path_loss_rejects(args):
    with pytest.raises(ValueError):
        path_loss(*args)
    with pytest.raises(ValueError):
        path_loss(1e11, 1.0, -1.0)


@given(st.floats(1e9, 1e13), st.floats(1e9, 1e13), st.floats(0.1, 100))
def test_path_loss_decreasing_in_frequency(f1, f2, d):
    lo, hi = sorted((f1, f2))
    assert path_loss(hi, d, 5e-4) <= path_loss(lo, d, 5e-4)


def test_alpha_product_decreases_across_band():
    t = build_tone_table(F0, FL, 32, LINK)
    assert np.all(np.diff(t.alpha) < 0)
    assert t.alpha_center == pytest.approx(path_loss(t.f_c, 10.0, 5.157e-4) * path_loss(t.f_c, 5.0, 5.157e-4))


def test_direction_vector_conventions():
    np.testing.assert_allclose(direction_vector("bs", 0.0, math.pi / 2), [1.0, 0.0], atol=1e-16)
    np.testing.assert_allclose(direction_vector("irs", math.pi / 2, math.pi / 2), [1.0, 0.0], atol=1e-16)
    np.testing.assert_allclose(direction_vector("irs", 0.0, math.pi / 3), [0.0, 0.5], atol=1e-15)
    with pytest.raises(ValueError):
        direction_vector("ue", 0.0, 1.0)


def test_angle_validation():
    with pytest.raises(ValueError):
        AngleSet(-math.pi, 1.0, 0, 1, 0, 1)
    with pytest.raises(ValueError):
        AngleSet(0.0, 0.0, 0, 1, 0, 1)
    a = DEFAULT_ANGLES
    np.testing.assert_allclose(a.delta_rho, a.rho_departure - a.rho_arrival)


def test_link_delay_defaults():
    link = LinkParams(3.0, 6.0)
    assert link.tau_g == 3.0 / SPEED_OF_LIGHT and link.tau_h == 6.0 / SPEED_OF_LIGHT
    with pytest.raises(ValueError):
        LinkParams(0.0, 1.0)
