"""
Test suite for the operator algebra, the table integrals and the determining equations.
"""

import unittest
from fractions import Fraction

import numpy as np
import pytest

from catalog import _term, build_system, family_ids, get_entry
from symexpr import (
    ALPHA,
    ALPHA_NAME,
    I,
    KAPPA_NAME,
    ONE,
    X,
    X1,
    ZERO,
    equivalent,
    evaluate,
    mul,
    sqrt,
)
from symmetry import (
    AppendixCandidate,
    DiffOp,
    KillingBlock,
    SelectorError,
    _assemble,
    admissible_selectors,
    angular,
    apparent_integrals,
    appendix_system_check,
    assemble_integral,
    commutator,
    commutes_with,
    compose,
    conformal,
    determining_residuals,
    dilation,
    divergence,
    hamiltonian_op,
    integral_residuals,
    is_zero_op,
    killing_basis,
    killing_decomposition,
    killing_tensor,
    momentum,
    multiply,
    reconstruct_coefficients,
    system_self_adjoint,
    unit,
    verify_integral,
)

F = Fraction


def params_for(family):
    """α = 7/3 and κ = 3/2 where the family uses them"""
    entry = get_entry(family)
    out = {}
    if entry.uses_alpha:
        out[ALPHA_NAME] = F(7, 3)
    if entry.uses_kappa:
        out[KAPPA_NAME] = F(3, 2)
    return out


def system(family, **params):
    return build_system(family, params or params_for(family))


class TestOperatorAlgebra(unittest.TestCase):
    """DiffOp products and the first-order generators"""

    def test_rotation_commutator(self):
        """[J1, J2] = i J3"""
        gap = commutator(angular(1), angular(2)) - angular(3).scale(I)
        assert is_zero_op(gap).passed

    def test_dilation_on_square(self):
        """D(x²) = -7i/2 x²"""
        assert equivalent(dilation().apply(X**2), mul(F(-7, 2), I, X**2))

    def test_conformal_coefficients(self):
        """K_3 at (0, 0, 1) has coefficient i on d_3 and 3i on the identity"""
        K3 = conformal(3)
        point = {"x1": 0.0, "x2": 0.0, "x3": 1.0}
        assert evaluate(K3.coeff(unit(3)), point) == pytest.approx(1j)
        assert evaluate(K3.coeff((0, 0, 0)), point) == pytest.approx(3j)
        assert evaluate(K3.coeff(unit(1)), point) == pytest.approx(0)

    def test_canonical_commutator(self):
        """[d_1, x_1] = 1"""
        d1 = DiffOp({unit(1): ONE})
        assert commutator(d1, multiply(X1)) == multiply(ONE)

    def test_zero_coefficients_dropped(self):
        assert DiffOp({unit(1): ZERO}).is_structurally_zero()

    def test_associativity(self):
        """(p1 K2) J3 = p1 (K2 J3)"""
        a, b, c = momentum(1), conformal(2), angular(3)
        assert is_zero_op(compose(compose(a, b), c) - compose(a, compose(b, c))).passed

    def test_momentum_squares_to_minus_laplacian_part(self):
        """p_1 p_1 = -d_1²"""
        assert compose(momentum(1), momentum(1)) == DiffOp({unit(1, 2): -ONE})


class TestHamiltonians(unittest.TestCase):
    """The three Hamiltonian forms"""

    def test_hat_leading_coefficient(self):
        """p f p for F.1 has -x² on d_1²"""
        H = hamiltonian_op(system("F.1"), "Hat")
        assert equivalent(H.coeff(unit(1, 2)), -X**2)

    def test_symmetric_forms_coincide(self):
        """f^(1/2) p² f^(1/2) + V equals p f p + Ṽ"""
        s = system("T1.5")
        gap = hamiltonian_op(s, "H") - hamiltonian_op(s, "Hat")
        assert is_zero_op(gap, s.bindings(), avoid=s.singular_radii).passed

    def test_compact_form_is_conjugate(self):
        """f p² + V = f^(1/2) (p f p + Ṽ) f^(-1/2)"""
        s = system("T2.6")
        root = sqrt(s.f)
        conj = compose(multiply(root), compose(hamiltonian_op(s, "Hat"), multiply(ONE / root)))
        gap = conj - hamiltonian_op(s, "Tilde")
        assert is_zero_op(gap, s.bindings(), avoid=s.singular_radii).passed

    def test_unknown_form(self):
        with pytest.raises(ValueError):
            hamiltonian_op(system("F.1"), "Weyl")


class TestKillingTensors(unittest.TestCase):
    """The nine conformal Killing tensors"""

    def test_rotation_dilation_tensor_values(self):
        """Kind 3 with λ = e_3 at (1, 2, 3)"""
        mu = killing_tensor(KillingBlock(kind=3, vector=(F(0), F(0), F(1))))
        point = {"x1": 1.0, "x2": 2.0, "x3": 3.0}
        got = [[evaluate(mu[a][b], point) for b in range(3)] for a in range(3)]
        expected = [[4, 3, 6], [3, -4, -3], [6, -3, 0]]
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_kind_one_without_k_is_identity(self):
        mu = killing_tensor(KillingBlock(kind=1, phi=ONE))
        for a in range(3):
            for b in range(3):
                assert mu[a][b] is (ONE if a == b else ZERO)

    def test_constant_matrix_kind(self):
        """Kind 5 with phi = 0 is the matrix itself"""
        m = ((F(1), F(2), F(0)), (F(2), F(0), F(0)), (F(0), F(0), F(-1)))
        mu = killing_tensor(KillingBlock(kind=5, matrix=m))
        assert equivalent(mu[0][1], 2 * ONE) and equivalent(mu[2][2], -ONE)

    def test_all_kinds_are_conformal_killing(self):
        """Every basis tensor satisfies the conformal Killing equation"""
        blocks = killing_basis("vector") + killing_basis("tensor")[1:]
        for block in blocks:
            mu = killing_tensor(block)
            report = determining_residuals(mu, divergence(mu), ZERO, ONE, ZERO, only=["conformal"])
            assert report.passed, block.kind

    def test_parameter_shape_checked(self):
        from symmetry import SymmetryError

        with pytest.raises(SymmetryError):
            killing_tensor(KillingBlock(kind=2, matrix=((F(1),) * 3,) * 3))
        with pytest.raises(SymmetryError):
            killing_tensor(KillingBlock(kind=6, matrix=((F(0), F(1), F(0)), (F(0),) * 3, (F(0),) * 3)))


class TestTableIntegrals(unittest.TestCase):
    """Commutation of the catalog integrals"""

    def test_table1_item5(self):
        s = system("T1.5")
        for sel in admissible_selectors(get_entry("T1.5")):
            report = verify_integral(s, sel)
            assert report.passed, (sel, report.residuals)

    def test_table2_item10(self):
        s = build_system("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0})
        for sel in [(3, 3), (1, 2)]:
            assert verify_integral(s, sel).passed

    def test_momentum_does_not_commute(self):
        """[H, p_3] is not zero for T1.1"""
        s = system("T1.1")
        report = commutes_with(hamiltonian_op(s), momentum(3), s.bindings())
        assert not report.passed

    def test_dilation_integral_of_first_family(self):
        s = system("F.1")
        assert commutes_with(hamiltonian_op(s), dilation(), s.bindings()).passed

    def test_n_sign_as_printed(self):
        """T1.3 and T1.4 both commute with N^+ as printed"""
        for family in ("T1.3", "T1.4"):
            for sel in (1, 3):
                assembled = assemble_integral(system(family), sel)
                assert assembled.variant == "printed", (family, sel, assembled.residual)

    def test_opposite_n_sign_does_not_commute(self):
        """{J_ab, N_b^-} + ½{H, x_a/x} is not an integral of T1.4"""
        s = system("T1.4")
        _, comm, scale = _assemble(s, get_entry("T1.4"), (3,), swapped=True)
        report = is_zero_op(comm, s.bindings(), avoid=s.singular_radii, scale=scale)
        assert not report.passed
        assert report.worst > 1e-3

    def test_weights_are_the_catalog_weights(self):
        for family in ("T1.1", "T1.3", "T1.5", "T2.3", "T2.10"):
            entry = get_entry(family)
            sel = admissible_selectors(entry)[0]
            assembled = assemble_integral(system(family), sel)
            assert assembled.weights == [str(t.weight) for t in entry.integral_terms]

    def test_h_term_enters_with_plus_half(self):
        weights = assemble_integral(system("T1.3"), 1).weights
        assert weights == ["1", "1/2"]

    def test_coulomb_term_needs_one_over_x(self):
        """-αx_a alone breaks commutation of the T1.2 integral; -αx_a/x restores it"""
        s = system("T1.2")
        entry = get_entry("T1.2")
        printed = entry.model_copy(
            update={"integral_terms": (entry.integral_terms[0], _term("sel_mult", weight=-1, factor=ALPHA))}
        )
        _, comm, scale = _assemble(s, printed, (3,), swapped=False)
        assert not is_zero_op(comm, s.bindings(), scale=scale).passed
        assert verify_integral(s, 3).passed

    def test_pseudotensor_needs_ordering_term(self):
        """Without 6x_a x_b the T2.5 integral leaves a commutator"""
        s = system("T2.5")
        entry = get_entry("T2.5")
        trimmed = entry.model_copy(update={"integral_terms": entry.integral_terms[:-1]})
        _, comm, scale = _assemble(s, trimmed, (3, 3), swapped=False)
        assert not is_zero_op(comm, s.bindings(), avoid=s.singular_radii, scale=scale).passed
        assert verify_integral(s, (3, 3)).passed

    def test_notes_show_entered_operator(self):
        notes = verify_integral(system("T2.6"), (1, 2)).notes
        assert "variant: printed" in notes
        assert any(n.startswith("entered as:") and "6x_a x_b" in n for n in notes)
        assert not any(n.startswith("discrepancy") for n in notes)

    def test_notes_without_correction(self):
        notes = verify_integral(system("T1.5"), 1).notes
        assert not any(n.startswith("entered as:") for n in notes)

    def test_extra_term_breaks_integral(self):
        """An added x_a x_b x term is caught"""
        s = system("T2.1", **{ALPHA_NAME: -2})
        entry = get_entry("T2.1")
        broken = entry.model_copy(
            update={"integral_terms": entry.integral_terms + (_term("sel_mult", weight=1, factor=X),)}
        )
        _, comm, scale = _assemble(s, broken, (1, 2), swapped=False)
        assert not is_zero_op(comm, s.bindings(), scale=scale).passed

    def test_selector_checked(self):
        with pytest.raises(SelectorError):
            assemble_integral(system("T2.3"), 2)
        with pytest.raises(SelectorError):
            assemble_integral(system("T1.2"), (1, 4))

    def test_apparent_integrals_commute(self):
        for family in ("F.1", "F.2", "F.3", "F.4"):
            s = system(family)
            H = hamiltonian_op(s)
            for name, Q in apparent_integrals(s):
                report = commutes_with(H, Q, s.bindings(), avoid=s.singular_radii)
                assert report.passed, (family, name)

    def test_apparent_integrals_need_first_order_family(self):
        with pytest.raises(SelectorError):
            apparent_integrals(system("T1.1"))


SPECTRUM_EXAMPLES = [
    ("T2.1", {ALPHA_NAME: -2}),
    ("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0}),
    ("T2.9", {ALPHA_NAME: 5, KAPPA_NAME: 1}),
    ("T1.10", {ALPHA_NAME: 1, KAPPA_NAME: 0}),
    ("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1}),
]


class TestSpectrumExampleIntegrals:
    """The integrals of the worked spectrum examples commute as printed"""

    @pytest.mark.parametrize("family,params", SPECTRUM_EXAMPLES, ids=[f for f, _ in SPECTRUM_EXAMPLES])
    def test_integral_commutes(self, family, params):
        s = build_system(family, params)
        for sel in admissible_selectors(get_entry(family)):
            report = verify_integral(s, sel)
            assert report.passed, (family, sel, report.residuals)
            assert "variant: printed" in report.notes


@pytest.mark.slow
class TestWholeCatalog:
    """Every table integral commutes for both selectors"""

    @pytest.mark.parametrize("family", [str(f) for f in family_ids() if not str(f).startswith("F")])
    def test_integral_commutes(self, family):
        s = system(family)
        for sel in admissible_selectors(get_entry(family)):
            report = verify_integral(s, sel)
            assert report.passed, (family, sel, report.residuals, report.notes)
            assert "variant: printed" in report.notes

    @pytest.mark.parametrize("family", ["T2.9", "T2.10"])
    @pytest.mark.parametrize("kappa", [F(-1), F(0), F(1)])
    def test_two_parameter_integrals_across_kappa(self, family, kappa):
        s = build_system(family, {ALPHA_NAME: F(11, 2), KAPPA_NAME: kappa})
        for sel in admissible_selectors(get_entry(family)):
            assert verify_integral(s, sel).passed, (family, kappa, sel)


class TestDeterminingEquations(unittest.TestCase):
    """Determining equations and the divergence condition"""

    def test_hamiltonian_itself(self):
        """mu = -f δ, xi = div mu, eta = Ṽ solve every equation"""
        f = (1 + X**2) ** 2
        vt = ALPHA / X
        mu = tuple(tuple(-f if a == b else ZERO for b in range(3)) for a in range(3))
        report = determining_residuals(mu, divergence(mu), vt, f, vt, {ALPHA_NAME: 1.3})
        assert report.passed, report.residuals

    def test_constant_metric_fails_for_varying_mass(self):
        mu = tuple(tuple(ONE if a == b else ZERO for b in range(3)) for a in range(3))
        report = determining_residuals(mu, divergence(mu), ZERO, (1 + X**2) ** 2, ZERO)
        assert report.residuals["mass"] > 1e-3

    def test_table_integral_layers(self):
        """Reconstructed layers of the T1.5 integral satisfy every determining equation and the divergence rule"""
        report = integral_residuals(system("T1.5"), 3)
        assert report.passed, report.residuals
        assert set(report.residuals) == {"conformal", "mass", "second_order", "first_order", "potential", "divergence"}

    def test_reconstruction_is_symmetric(self):
        layers = reconstruct_coefficients(assemble_integral(system("T2.7"), (1, 2)).op)
        assert layers.mu[0][1] is layers.mu[1][0]

    def test_killing_fit_of_table_integral(self):
        """The second-order layer of a vector integral is spanned by kinds 1-4"""
        s = system("T1.6")
        layers = reconstruct_coefficients(assemble_integral(s, 3).op)
        fit = killing_decomposition(layers.mu, "vector", params=s.bindings(), avoid=s.singular_radii)
        assert fit.residual < 1e-8
        assert set(fit.weights) <= {1, 2, 3, 4}


class TestAppendixReductions:
    """Mass terms admitted by the reduced ansätze"""

    @pytest.mark.parametrize(
        "f, phi, nu, m",
        [
            (X, ONE, 1, 0),
            (X**3, -X**2, 0, 1),
            (X**4, ZERO, 0, 1),
            (X / (X + 1), ONE / (X + 1), 1, 0),
            (X / (X - 1), -ONE / (X - 1), 1, 0),
            ((1 + X**2) ** 2, ZERO, 1, 1),
            ((1 - X**2) ** 2, ZERO, 1, -1),
            ((X**2 - 1) ** 2 * X / (X**2 - 3 * X + 1), (1 - X**2) ** 2 / (X**2 - 3 * X + 1), 1, -1),
        ],
    )
    def test_vector_masses(self, f, phi, nu, m):
        candidate = AppendixCandidate(ansatz="vector", f=f, phi=phi, nu=F(nu), m=F(m))
        report = appendix_system_check(candidate, avoid=[1.0, 0.381966, 2.618034])
        assert report.passed, report.residuals

    def test_vector_negative_control(self):
        candidate = AppendixCandidate(ansatz="vector", f=X**5, phi=ONE, nu=F(1), m=F(0))
        assert not appendix_system_check(candidate).passed

    def test_vector_potential_layer(self):
        """f = x carries Ṽ = αx - 3/(4x) with eta factor -α - 1/(4x²)"""
        good = AppendixCandidate(
            ansatz="vector", f=X, phi=ONE, nu=F(1), m=F(0),
            potential_tilde=ALPHA * X - F(3, 4) / X, eta_factor=-ALPHA - ONE / (4 * X**2),
        )
        assert appendix_system_check(good, {ALPHA_NAME: 1.3}).passed
        bad = good.model_copy(update={"eta_factor": -ALPHA - ONE / (2 * X**2)})
        assert not appendix_system_check(bad, {ALPHA_NAME: 1.3}).passed

    @pytest.mark.parametrize(
        "f, phi, m",
        [
            ((X**4 - 1) ** 2 / (X**4 - 3 * X**2 + 1), 2 * (F(3, 2) * X**4 - 2 * X**2 + F(3, 2)) / (X**4 - 3 * X**2 + 1), 1),
            ((X**4 + 1) ** 2 / (X**4 - 1), -4 * X**2 / (X**4 - 1), -1),
            ((X**4 - 1) ** 2 / X**2, -(X**4 + 1) / X**2, 1),
            ((X**4 + 1) ** 2 / X**2, -(-X**4 + 1) / X**2, -1),
            (ONE / (X**2 + 2), -ONE / (X**2 + 2), 0),
        ],
    )
    def test_tensor_masses(self, f, phi, m):
        candidate = AppendixCandidate(ansatz="tensor", f=f, phi=phi, nu=F(1), m=F(m))
        report = appendix_system_check(candidate, avoid=[0.618034, 1.0, 1.618034])
        assert report.passed, report.residuals
        assert {"tensor_phi", "tensor_mass"} <= set(report.residuals)

    def test_tensor_potential_layer(self):
        candidate = AppendixCandidate(
            ansatz="tensor", f=ONE / X**2, phi=-ONE / X**2, nu=F(1), m=F(0),
            potential_tilde=ALPHA / X**2, eta_factor=3 / X**4 + ALPHA / X**2,
        )
        assert appendix_system_check(candidate, {ALPHA_NAME: -0.7}).passed

    def test_cross_ansatz(self):
        """Rotation-conformal products: f = (νx² - m)²"""
        good = AppendixCandidate(ansatz="cross", f=(1 + X**2) ** 2, nu=F(1), m=F(-1))
        report = appendix_system_check(good)
        assert report.passed, report.residuals
        bad = AppendixCandidate(ansatz="cross", f=(1 + X**2) ** 2, nu=F(1), m=F(1))
        assert not appendix_system_check(bad, avoid=[1.0]).passed


class TestSelfAdjoint(unittest.TestCase):
    """Formal self-adjointness on compactly supported test functions"""

    def test_symmetric_form(self):
        for family in ("T1.5", "T2.10"):
            params = {ALPHA_NAME: 8, KAPPA_NAME: 0} if family == "T2.10" else params_for(family)
            report = system_self_adjoint(build_system(family, params))
            assert report.passed, (family, report.residuals)

    def test_compact_form_is_not_symmetric(self):
        report = system_self_adjoint(system("T1.5"), "Tilde")
        assert not report.passed


class TestCaches(unittest.TestCase):
    """Memoized derivatives and products stay bounded"""

    def test_caches_have_a_bound(self):
        from symexpr import DIFF_CACHE_SIZE, _diff_cached
        from symmetry import partial

        assert _diff_cached.cache_info().maxsize == DIFF_CACHE_SIZE
        assert partial.cache_info().maxsize is not None
        assert compose.cache_info().maxsize is not None

    def test_clear_caches_empties_them(self):
        from symexpr import _diff_cached
        from symmetry import clear_caches, partial

        verify_integral(system("T1.5"), 1)
        assert compose.cache_info().currsize > 0
        clear_caches()
        assert compose.cache_info().currsize == 0
        assert partial.cache_info().currsize == 0
        assert _diff_cached.cache_info().currsize == 0
