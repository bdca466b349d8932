import numpy as np
import pytest

from mortar_dg.stability import max_energy_growth, random_rate_survey

from conftest import setup_for, skew


def test_afim_central_growth_direction_on_affine_mesh():
    growth = max_energy_growth(setup_for(scheme="afim", alpha=0.0).operator)
    assert growth.converged
    assert growth.growth_rate > 1e-3
    assert growth.witness_rate == pytest.approx(growth.growth_rate, rel=1e-8)


@pytest.mark.parametrize("kind", ["full", "split"])
def test_sfim_central_has_no_growth(kind):
    growth = max_energy_growth(setup_for(**skew(alpha=0.0, mortar=kind)).operator)
    assert abs(growth.growth_rate) <= 1e-10
    assert abs(growth.witness_rate) <= 1e-10


@pytest.mark.parametrize("kind", ["full", "split"])
def test_sfim_upwind_growth_is_not_positive(kind):
    growth = max_energy_growth(setup_for(**skew(alpha=1.0, mortar=kind)).operator)
    assert growth.growth_rate <= 1e-10
    assert growth.witness_rate <= 1e-10
    assert set(growth.as_dict()) >= {"eigenvalue", "growth_rate", "witness_rate", "converged"}


def test_survey_is_reproducible():
    op = setup_for().operator
    np.testing.assert_array_equal(random_rate_survey(op, 3, seed=2),
                                  random_rate_survey(op, 3, seed=2))
