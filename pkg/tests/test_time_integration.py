import numpy as np
import pytest
from scipy.linalg import expm

from mortar_dg.time_integration import (CARPENTER_KENNEDY_54, DivergenceError, integrate,
                                        lsrk54_step)


def _observed_order(errors):
    return np.polyfit(np.log([0.1 / 2 ** k for k in range(len(errors))]), np.log(errors), 1)[0]


def test_scheme_coefficients_are_consistent():
    s = CARPENTER_KENNEDY_54
    assert s.a[0] == 0.0 and s.c[0] == 0.0
    assert len(s.a) == len(s.b) == len(s.c) == 5


def test_fourth_order_on_scalar_decay():
    lam = -1.0
    errors = []
    for k in range(4):
        dt = 0.1 / 2 ** k
        q, t, _ = integrate(np.array([1.0]), lambda y, t: lam * y, dt, 1.0)
        errors.append(abs(q[0] - np.exp(lam * t)))
    assert 3.8 <= _observed_order(errors) <= 4.2


def test_fourth_order_on_time_dependent_forcing():
    errors = []
    for k in range(4):
        dt = 0.1 / 2 ** k
        q, t, _ = integrate(np.array([0.0]), lambda y, t: np.cos(t) + 0.0 * y, dt, 2.0)
        errors.append(abs(q[0] - np.sin(t)))
    assert 3.8 <= _observed_order(errors) <= 4.2


def test_skew_system_energy_error_is_high_order():
    a = np.array([[0.0, 2.0, 0.0], [-2.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    q0 = np.array([1.0, -0.5, 0.25])
    errors = []
    for k in range(4):
        dt = 0.1 / 2 ** k
        q, t, _ = integrate(q0.copy(), lambda y, t: a @ y, dt, 1.0)
        exact = expm(a * t) @ q0
        errors.append(np.linalg.norm(q - exact))
        assert abs(q @ q - q0 @ q0) <= 10 * dt ** 4
    assert 3.8 <= _observed_order(errors) <= 4.2


def test_step_updates_in_place():
    q = np.array([1.0, 2.0])
    out = lsrk54_step(q, lambda y, t: -y, 0.1)
    assert out is q
    np.testing.assert_allclose(q, np.array([1.0, 2.0]) * np.exp(-0.1), rtol=1e-6)


def test_integrate_rounds_step_count_up_and_calls_back():
    calls = []
    _, t, steps = integrate(np.zeros(1), lambda y, t: 0 * y, 0.3, 1.0,
                            callback=lambda s, t, q: calls.append(s), every=2)
    assert steps == 4 and t == pytest.approx(1.0)
    assert calls == [2, 4]


def test_integrate_with_fixed_steps():
    _, t, steps = integrate(np.zeros(1), lambda y, t: 0 * y, 1.0, 0.5, steps=5)
    assert steps == 5 and t == pytest.approx(0.5)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    with pytest.raises(DivergenceError) as info:
        integrate(np.ones(1), lambda y, t: 1e200 * y, 1.0, 10.0)
    assert info.value.time > 0
