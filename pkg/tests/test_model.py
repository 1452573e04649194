import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcollapse.constants import HBAR, BOLTZMANN, NUCLEON_MASS, FundamentalConstants
from dcollapse.model import (
    ModelParams, UnitSystem, center_of_mass_params, derive_constants,
    scale_parameters, uncertainty_product,
)


def test_scale_parameters_reference_mass():
    p = scale_parameters(NUCLEON_MASS)
    assert p.collapse_rate == pytest.approx(1e-2)
    assert p.momentum_coupling == pytest.approx(1e-18)
    assert p.hbar == HBAR


def test_scale_parameters_mass_dependence():
    # rate grows with mass, coupling shrinks, product is invariant
    p1 = scale_parameters(NUCLEON_MASS)
    p2 = scale_parameters(1000.0 * NUCLEON_MASS)
    assert p2.collapse_rate == pytest.approx(1000.0 * p1.collapse_rate)
    assert p2.momentum_coupling == pytest.approx(p1.momentum_coupling / 1000.0)
    assert p2.collapse_rate * p2.momentum_coupling == pytest.approx(
        p1.collapse_rate * p1.momentum_coupling)


def test_center_of_mass_params_matches_total_mass():
    masses = [NUCLEON_MASS] * 7
    p = center_of_mass_params(masses)
    q = scale_parameters(7 * NUCLEON_MASS)
    assert p.mass == pytest.approx(q.mass)
    assert p.collapse_rate == pytest.approx(q.collapse_rate)
    assert p.momentum_coupling == pytest.approx(q.momentum_coupling)


def test_derived_constants_si_values():
    d = derive_constants(scale_parameters(NUCLEON_MASS))
    assert d.omega == pytest.approx(5.021912987305437e-05, rel=1e-12)
    assert d.theta == pytest.approx(math.pi / 4.0, abs=1e-12)
    assert d.kappa == pytest.approx(5.632170712427685e-16, rel=1e-9)
    assert d.sigma_q_bar == pytest.approx(0.035432728469966285, rel=1e-12)
    assert d.temperature == pytest.approx(0.12039577943343933, rel=1e-12)
    assert d.energy_inf == pytest.approx(
        HBAR ** 2 / (8.0 * NUCLEON_MASS * 1e-18), rel=1e-12)


def test_derived_constants_mass_invariants():
    # omega, theta, temperature, and energy floor do not depend on mass
    d1 = derive_constants(scale_parameters(NUCLEON_MASS))
    d2 = derive_constants(scale_parameters(1.0))
    assert d2.omega == pytest.approx(d1.omega, rel=1e-12)
    assert d2.theta == pytest.approx(d1.theta, abs=1e-12)
    assert d2.temperature == pytest.approx(d1.temperature, rel=1e-12)
    assert d2.energy_inf == pytest.approx(d1.energy_inf, rel=1e-12)


def test_derived_constants_natural(p_nat, d_nat):
    assert d_nat.omega == pytest.approx(0.6328504467012849, rel=1e-13)
    assert d_nat.theta == pytest.approx(0.7604189655364769, rel=1e-13)
    assert d_nat.sigma_q_bar ** 2 == pytest.approx(1.6211486820500447, rel=1e-12)
    assert d_nat.sigma_p_bar ** 2 == pytest.approx(0.2357213354401732, rel=1e-12)
    assert d_nat.sigma_qp_bar_sq == pytest.approx(0.36350974165751504, rel=1e-12)
    assert d_nat.omega1 == pytest.approx(
        math.sqrt(2.0) * d_nat.omega * math.cos(d_nat.theta), rel=1e-13)
    assert d_nat.omega2 == pytest.approx(
        math.sqrt(2.0) * d_nat.omega * math.sin(d_nat.theta), rel=1e-13)


def test_stationary_width_is_riccati_fixed_point(p_nat, d_nat):
    lam, al, m, hb = (p_nat.collapse_rate, p_nat.momentum_coupling,
                      p_nat.mass, p_nat.hbar)
    a = d_nat.a_inf
    residual = -2j * hb * a * a / m - 4.0 * lam * al * a + lam
    assert abs(residual) < 1e-14


def test_omega1_equals_four_lambda_width(p_nat, d_nat):
    assert d_nat.omega1 == pytest.approx(
        4.0 * p_nat.collapse_rate * d_nat.sigma_q_bar ** 2, rel=1e-12)


def test_kappa_squared_is_cos_two_theta(d_nat):
    assert d_nat.kappa ** 2 == pytest.approx(math.cos(2.0 * d_nat.theta),
                                             rel=1e-12)


def test_zero_collapse_rate_branch():
    p = ModelParams(mass=1.0, collapse_rate=0.0, momentum_coupling=0.5,
                    hbar=1.0)
    d = derive_constants(p, boltzmann=1.0)
    assert d.theta == pytest.approx(math.pi / 4.0)
    assert d.kappa == 0.0
    assert d.a_inf == 0.0
    assert math.isinf(d.sigma_q_bar)
    assert d.sigma_p_bar == 0.0
    assert d.sigma_qp_bar_sq == pytest.approx(0.5 * p.hbar)


def test_zero_momentum_coupling_energy_floor():
    p = ModelParams(mass=1.0, collapse_rate=0.1, momentum_coupling=0.0,
                    hbar=1.0)
    d = derive_constants(p, boltzmann=1.0)
    assert math.isinf(d.energy_inf)
    assert math.isinf(d.temperature)


def test_uncertainty_product_at_least_half_hbar(d_nat, p_nat):
    prod = uncertainty_product(d_nat)
    assert prod >= 0.5 * p_nat.hbar - 1e-15
    # the stationary state saturates the generalized relation instead
    lhs = (d_nat.sigma_q_bar * d_nat.sigma_p_bar) ** 2 \
        - d_nat.sigma_qp_bar_sq ** 2
    assert lhs == pytest.approx(0.25 * p_nat.hbar ** 2, rel=1e-12)


@given(st.floats(min_value=1e-4, max_value=1e2),
       st.floats(min_value=1e-4, max_value=1e2))
@settings(max_examples=200, deadline=None)
def test_uncertainty_product_random_couplings(lam, al):
    p = ModelParams(mass=1.0, collapse_rate=lam, momentum_coupling=al,
                    hbar=1.0)
    d = derive_constants(p, boltzmann=1.0)
    assert uncertainty_product(d) >= 0.5 - 1e-12


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(mass=-1.0, collapse_rate=0.1, momentum_coupling=0.5,
                    hbar=1.0)
    with pytest.raises(ValueError):
        ModelParams(mass=1.0, collapse_rate=-0.1, momentum_coupling=0.5,
                    hbar=1.0)
    with pytest.raises(ValueError):
        ModelParams(mass=1.0, collapse_rate=0.1, momentum_coupling=-0.5,
                    hbar=1.0)
    with pytest.raises(ValueError):
        ModelParams(mass=1.0, collapse_rate=0.1, momentum_coupling=0.5,
                    hbar=0.0)


def test_unit_round_trip():
    p_si = scale_parameters(NUCLEON_MASS)
    units = UnitSystem.natural_for(p_si)
    p_nat = units.params_to_natural(p_si)
    assert p_nat.hbar == pytest.approx(1.0)
    assert p_nat.mass == pytest.approx(1.0)
    back = units.params_to_si(p_nat)
    assert back.mass == pytest.approx(p_si.mass, rel=1e-12)
    assert back.collapse_rate == pytest.approx(p_si.collapse_rate, rel=1e-12)
    assert back.momentum_coupling == pytest.approx(p_si.momentum_coupling,
                                                   rel=1e-12)
    assert back.hbar == pytest.approx(p_si.hbar, rel=1e-12)


def test_natural_units_preserve_derived_shape():
    # dimensionless combinations survive the unit change
    p_si = scale_parameters(NUCLEON_MASS)
    units = UnitSystem.natural_for(p_si)
    p_nat = units.params_to_natural(p_si)
    d_si = derive_constants(p_si)
    d_nat = derive_constants(p_nat, boltzmann=1.0)
    assert d_nat.theta == pytest.approx(d_si.theta, rel=1e-10)
    assert d_nat.kappa == pytest.approx(d_si.kappa, rel=1e-6, abs=1e-12)
    # omega in natural units maps back to SI through the time scale
    assert d_nat.omega / units.time == pytest.approx(d_si.omega, rel=1e-10)


def test_fundamental_constants_frozen():
    fc = FundamentalConstants()
    assert fc.collapse_rate_base == 1e-2
    assert fc.momentum_coupling_base == 1e-18
    assert fc.reference_mass == NUCLEON_MASS
    assert fc.boltzmann == BOLTZMANN
