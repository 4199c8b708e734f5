"""
Test suite for superpotentials, closed-form spectra and closed-form states.
"""

import math
import unittest
from fractions import Fraction

import numpy as np
import pytest

from catalog import ParameterError, PotentialClass, Route, build_system
from numsolve import Grid, inner_product, ode_residual
from reduction import reduce_family
from susy import (
    NAMED_LEVELS,
    ShapeMismatchError,
    SuperPotential,
    SusyError,
    class_state,
    double_shape_invariance,
    eigenfunction,
    from_weights,
    ladder_state,
    normalize,
    spectrum,
    superpotential_for,
)
from symexpr import ALPHA_NAME, KAPPA_NAME, evaluate

PC = PotentialClass

MEMBERS = [
    SuperPotential(tag=PC.COULOMB, A=2.0, B=-1.0),
    SuperPotential(tag=PC.OSCILLATOR, A=1.5, B=2.0),
    SuperPotential(tag=PC.ROSEN_MORSE, period=2.0, A=3.0, B=0.7),
    SuperPotential(tag=PC.ECKART, A=2.0, B=6.0),
    SuperPotential(tag=PC.PT_HYP, A=2.0, B=3.0),
    SuperPotential(tag=PC.PT_TRIG, period=2.0, A=2.0, B=2.0),
]

CLOSED_FORMS = [
    ("T2.1", {ALPHA_NAME: -2}, -4 / 9),
    ("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0}, -3 * math.sqrt(13)),
    ("T2.9", {ALPHA_NAME: 5, KAPPA_NAME: 1}, 18.0),
    ("T1.10", {ALPHA_NAME: 1, KAPPA_NAME: 0}, -4.0),
    ("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1}, 8.0),
]


def member_id(sp):
    return sp.tag.value


class TestSuperPotential:
    """Factorization, shape invariance and ground states of each class"""

    @pytest.mark.parametrize("sp", MEMBERS, ids=member_id)
    def test_factorization(self, sp):
        assert sp.factorization_residual() < 1e-9

    @pytest.mark.parametrize("sp", MEMBERS, ids=member_id)
    def test_shape_invariance(self, sp):
        assert sp.shape_invariance_residual() < 1e-9

    @pytest.mark.parametrize("sp", MEMBERS, ids=member_id)
    def test_ground_state_is_annihilated(self, sp):
        assert sp.annihilation_residual() < 1e-9

    @pytest.mark.parametrize("sp", MEMBERS, ids=member_id)
    def test_levels_increase(self, sp):
        levels = [sp.level(n) for n in range(4) if sp.bound(n)]
        assert levels == sorted(levels)
        assert len(set(levels)) == len(levels)


class TestClassParameters(unittest.TestCase):
    """Reading class parameters off fitted weights"""

    def test_coulomb(self):
        sp = from_weights(PC.COULOMB, 1, (0.75, -2.0, 0.0))
        assert (sp.A, sp.B) == pytest.approx((1.5, -2.0))
        assert sp.level(1) == pytest.approx(-4 / (4 * 2.5**2))

    def test_oscillator_is_equally_spaced(self):
        sp = from_weights(PC.OSCILLATOR, 1, (2.0, 1.0, 0.5))
        gaps = np.diff([sp.level(n) for n in range(4)])
        assert gaps == pytest.approx([2 * sp.B] * 3)

    def test_pt_hyp_runs_out_of_states(self):
        sp = SuperPotential(tag=PC.PT_HYP, A=1.0, B=2.5)
        assert sp.bound(0) and not sp.bound(1)

    def test_no_real_index(self):
        with pytest.raises(ShapeMismatchError):
            from_weights(PC.ROSEN_MORSE, 2, (-5.0, 1.0, 0.0))

    def test_virtual_tower(self):
        sp = SuperPotential(tag=PC.OSCILLATOR, A=1.5, B=1.0, l_slope=2.0)
        assert not sp.virtual(0)
        assert sp.virtual(1)
        assert not SuperPotential(tag=PC.OSCILLATOR, A=1.5, B=1.0, l_slope=1.0).virtual(2)


class TestLadder(unittest.TestCase):
    """Raising operators against the special-function states"""

    def check_proportional(self, sp, n, y):
        raised = np.asarray(evaluate(ladder_state(sp, n).expr, {"y": y}), dtype=float)
        closed = np.real(class_state(sp, n, y))
        ratio = raised / closed
        assert np.std(ratio) < 1e-9 * abs(np.mean(ratio))

    def test_coulomb(self):
        sp = SuperPotential(tag=PC.COULOMB, A=1.0, B=-2.0)
        for n in range(4):
            self.check_proportional(sp, n, np.linspace(0.3, 4.0, 17))

    def test_oscillator(self):
        sp = SuperPotential(tag=PC.OSCILLATOR, A=1.25, B=2.0)
        for n in range(4):
            self.check_proportional(sp, n, np.linspace(0.3, 2.5, 17))

    def test_pt_trig(self):
        sp = SuperPotential(tag=PC.PT_TRIG, period=2.0, A=2.0, B=2.0)
        for n in range(3):
            self.check_proportional(sp, n, np.linspace(0.1, 0.7, 13) + 1e-3)

    def test_negative_level(self):
        with pytest.raises(SusyError):
            ladder_state(MEMBERS[0], -1)


class TestEffectiveSuperPotential(unittest.TestCase):
    """Superpotentials of reduced families"""

    def test_inverse_square_mass(self):
        sp = superpotential_for(reduce_family(build_system("T2.1", {ALPHA_NAME: -2}), 0))
        assert sp.tag == PC.COULOMB
        assert (sp.A, sp.B) == pytest.approx((0.75, -1.0), abs=1e-9)
        assert sp.level(0) == pytest.approx(-4 / 9)

    def test_two_step_needs_energy(self):
        e = reduce_family(build_system("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0}), 0, Route.TWO_STEP)
        with pytest.raises(SusyError):
            superpotential_for(e)
        sp = superpotential_for(e, energy=-3 * math.sqrt(13))
        assert sp.tag == PC.ROSEN_MORSE
        assert sp.level(0) == pytest.approx(-8.0, rel=1e-9)


class TestSpectrum(unittest.TestCase):
    """Closed-form levels"""

    def test_reference_values(self):
        for family, params, expected in CLOSED_FORMS:
            with self.subTest(family=family):
                result = spectrum(family, params, 0, 0)
                assert result.energy == pytest.approx(expected, rel=1e-9)
                assert result.formula == NAMED_LEVELS[family][0]
                assert result.formula_energy == pytest.approx(expected, rel=1e-12)

    def test_routes(self):
        assert spectrum("T2.1", {ALPHA_NAME: -2}, 0, 0).route == Route.DIRECT
        assert spectrum("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1}, 0, 0).route == Route.TWO_STEP

    def test_named_formulas_follow_the_engine(self):
        for family, params, _ in CLOSED_FORMS:
            for l in range(2):
                for n in range(3):
                    with self.subTest(family=family, l=l, n=n):
                        result = spectrum(family, params, l, n)
                        assert result.energy == pytest.approx(result.formula_energy, rel=1e-9)

    def test_inverse_square_mass_levels(self):
        energies = [spectrum("T2.1", {ALPHA_NAME: -2}, 1, n).energy for n in range(4)]
        assert energies[0] == pytest.approx(-0.16)
        assert energies == sorted(energies)

    def test_first_order_family(self):
        """F.2: Pöschl-Teller with A = B = l + 1 on top of the constant 5"""
        for l in range(3):
            assert spectrum("F.2", {}, l, 0).energy == pytest.approx(4 * (l + 1) ** 2 + 5)

    def test_half_integer_index_is_virtual(self):
        assert not spectrum("T1.1", {ALPHA_NAME: 1}, 0, 0).virtual
        assert spectrum("T1.1", {ALPHA_NAME: 1}, 0, 1).virtual

    def test_no_discrete_spectrum(self):
        with pytest.raises(SusyError):
            spectrum("F.1", {}, 0, 0)

    def test_negative_quantum_numbers(self):
        with pytest.raises(SusyError):
            spectrum("T2.1", {ALPHA_NAME: -2}, 0, -1)

    def test_spectral_condition(self):
        with pytest.raises(ParameterError):
            spectrum("T2.1", {ALPHA_NAME: 2}, 0, 0)


class TestDoubleShapeInvariance(unittest.TestCase):
    """Coulomb and oscillator factorizations of the inverse-square mass"""

    def test_agreement_is_exact(self):
        for alpha in (Fraction(-2), Fraction(-7, 3)):
            for l in range(4):
                for n in range(6):
                    check = double_shape_invariance(l, n, alpha)
                    assert check.agree
                    assert isinstance(check.coulomb, Fraction)

    def test_needs_attraction(self):
        with pytest.raises(SusyError):
            double_shape_invariance(0, 0, 1)


class TestClosedFormStates(unittest.TestCase):
    """States checked against the radial equation"""

    def test_ground_state_residual(self):
        state = eigenfunction("T2.1", {ALPHA_NAME: -2}, 0, 0)
        assert state.energy == pytest.approx(-4 / 9)
        assert ode_residual(state, state.problem).residual < 1e-8

    def test_wrong_energy_fails(self):
        state = eigenfunction("T2.1", {ALPHA_NAME: -2}, 0, 0)
        assert ode_residual(state, state.problem, energy=state.energy + 0.1).residual > 1e-2

    def test_two_step_state_solves_the_original_equation(self):
        state = eigenfunction("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1}, 0, 0)
        assert state.energy == pytest.approx(8.0)
        assert state.route == Route.TWO_STEP
        assert ode_residual(state, state.problem).residual < 1e-7

    def test_orthonormal_under_the_mass_weight(self):
        grid = Grid(x_min=0.0, x_max=40.0, n=8000)
        states = [normalize(eigenfunction("T2.1", {ALPHA_NAME: -2}, 0, n), grid) for n in range(4)]
        weight = grid.nodes() ** 2
        for i, a in enumerate(states):
            for j, b in enumerate(states):
                expected = 1.0 if i == j else 0.0
                assert inner_product(a, b, weight, grid) == pytest.approx(expected, abs=1e-8)

    def test_polynomial_arguments(self):
        x = np.linspace(0.2, 0.8, 7)
        t19 = eigenfunction("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1}, 0, 1)
        assert np.real(t19.argument(x)) == pytest.approx((1 + x**2) / (2 * x), rel=1e-9)
        t110 = eigenfunction("T1.10", {ALPHA_NAME: 1, KAPPA_NAME: 0}, 0, 1)
        assert t110.argument(x) == pytest.approx(1j * (1 - x**2) / (2 * x), rel=1e-9)
        t29 = eigenfunction("T2.9", {ALPHA_NAME: 5, KAPPA_NAME: 1}, 0, 1)
        assert np.real(t29.argument(x)) == pytest.approx((1 + x**4) / (2 * x**2), rel=1e-9)

    def test_rosen_morse_state_has_a_constant_phase(self):
        state = eigenfunction("T1.10", {ALPHA_NAME: 1, KAPPA_NAME: 0}, 0, 2)
        lo, hi = state.effective.domain_y
        y = np.linspace(lo, hi, 41)[1:-1]
        values = state.complex_phi_y(y)
        ratio = values / values[np.argmax(np.abs(values))]
        assert np.abs(np.imag(ratio)) == pytest.approx(np.zeros(len(y)), abs=1e-9)
        assert state.aux["lambda"] == pytest.approx(state.aux["strength"] / state.aux["period"] / state.aux["index"])


@pytest.mark.slow
@pytest.mark.parametrize("family,params", [(f, p) for f, p, _ in CLOSED_FORMS] + [("F.2", {})])
@pytest.mark.parametrize("n", range(4))
def test_states_solve_the_radial_equation(family, params, n):
    state = eigenfunction(family, params, 0, n)
    assert ode_residual(state, state.problem).residual < 1e-7
