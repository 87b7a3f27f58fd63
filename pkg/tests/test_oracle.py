import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairgen.oracle import OutOfRegimeError, predict_h_mode, predict_v_mode, v_mode_g2


def test_h_mode_without_interaction():
    p = predict_h_mode(2, 0)
    assert p.mean_a == 2 and p.mean_n == 4 and p.mean_a2dag_a2 == 16
    assert p.var_X(0.3) == 1


def test_h_mode_values():
    p = predict_h_mode(2, 0.01)
    assert p.mean_n == pytest.approx(3.84)
    assert p.mean_a == pytest.approx(1.96)
    assert p.mean_a2dag_a2 == pytest.approx(14.56)
    assert p.mean_a2 == pytest.approx(4 - 0.16 - 0.02)
    assert p.var_X(0) == pytest.approx(0.96)
    assert p.var_X(math.pi / 2) == pytest.approx(1.04)


def test_v_mode_values():
    p = predict_v_mode(2, 0.01)
    assert p.mean_n == pytest.approx(2e-4)
    assert p.mean_a2dag_a2 == p.mean_n
    assert p.mean_a2 == pytest.approx(-0.02)
    assert p.mean_a == 0
    assert p.g2 == pytest.approx(5000)
    assert v_mode_g2(2, 0.01) == pytest.approx(5000)


def test_v_mode_at_zero_time():
    p = predict_v_mode(1.5 - 0.5j, 0)
    assert p.mean_n == 0 and p.mean_a2 == 0
    assert p.var_X(1.0) == 1
    with pytest.raises(ZeroDivisionError):
        v_mode_g2(1.5, 0)


def test_v_mode_imaginary_amplitude():
    p = predict_v_mode(2j, 0.01)
    assert p.mean_a2 == pytest.approx(0.02)
    assert p.var_X(math.pi / 2) == pytest.approx(0.96)
    assert p.var_X(0) == pytest.approx(1.04)


@pytest.mark.parametrize("alpha, T", [(2, 0.06), (1, -0.01), (10, 0.01)])
def test_regime_guard(alpha, T):
    with pytest.raises(OutOfRegimeError):
        predict_h_mode(alpha, T)
    with pytest.raises(OutOfRegimeError):
        predict_v_mode(alpha, T)


amplitudes = st.builds(cmath.rect, st.floats(0, 3), st.floats(-math.pi, math.pi))


@given(amplitudes, st.floats(0, 0.02))
def test_h_and_v_share_variance_structure(alpha, T):
    assert predict_h_mode(alpha, T).variance_coefficients() == predict_v_mode(alpha, T).variance_coefficients()


@given(amplitudes, st.floats(0, 0.01))
def test_v_pair_number_quadratic_in_time(alpha, T):
    assert predict_v_mode(alpha, 2 * T).mean_n == 4 * predict_v_mode(alpha, T).mean_n


@given(amplitudes, st.floats(0, 0.02))
def test_variance_minimum_along_amplitude(alpha, T):
    p = predict_h_mode(alpha, T)
    phase = 0.0 if alpha == 0 else cmath.phase(alpha)
    assert p.var_X(phase) == pytest.approx(1 - abs(alpha) ** 2 * T)
    assert p.var_constant == 1
