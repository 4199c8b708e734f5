"""
Test suite for the system catalog.
"""

import json
import math
import unittest
from fractions import Fraction

import pytest

from catalog import (
    FamilyId,
    ParameterError,
    Route,
    Source,
    UnknownFamilyError,
    build_system,
    check_relation,
    export_catalog,
    export_family,
    family_ids,
    get_entry,
    list_families,
    validate_params,
)
from symexpr import ALPHA, ALPHA_NAME, KAPPA_NAME, X, equivalent, evaluate, from_sexpr


class TestFamilyId(unittest.TestCase):
    """Identifier parsing"""

    def test_parse_round_trip(self):
        """Text forms parse back to the same identifier"""
        for text in ("F.1", "T1.9", "T2.10"):
            assert str(FamilyId.parse(text)) == text

    def test_lower_case_accepted(self):
        assert FamilyId.parse("t2.3") == FamilyId(source=Source.PSEUDOTENSOR, item=3)

    def test_out_of_range(self):
        """F.5 and T1.11 do not exist"""
        for text in ("F.5", "T1.11", "T3.1", "garbage"):
            with pytest.raises(UnknownFamilyError):
                FamilyId.parse(text)


class TestListing(unittest.TestCase):
    """Catalog contents"""

    def test_twenty_four_entries_in_order(self):
        rows = list_families()
        assert len(rows) == 24
        names = [str(r[0]) for r in rows]
        assert names[:4] == ["F.1", "F.2", "F.3", "F.4"]
        assert names[4] == "T1.1" and names[13] == "T1.10"
        assert names[14] == "T2.1" and names[-1] == "T2.10"

    def test_table_sources(self):
        assert len(family_ids(Source.VECTOR)) == 10
        assert len(family_ids(Source.PSEUDOTENSOR)) == 10

    def test_kappa_only_on_items_nine_and_ten(self):
        for fid in family_ids():
            entry = get_entry(fid)
            assert entry.uses_kappa == (fid.source != Source.FIRST_ORDER and fid.item in (9, 10))

    def test_two_step_routes_have_classes(self):
        """Every TwoStep or Both row names a class for the two-step route"""
        for fid in family_ids():
            route = get_entry(fid).route
            if route.approach in ("TwoStep", "Both"):
                assert Route.TWO_STEP in route.classes
            if route.approach in ("Direct", "Both"):
                assert Route.DIRECT in route.classes


class TestPotentials(unittest.TestCase):
    """Conversion between the two potential forms"""

    def test_first_order_compact_potentials(self):
        """Compact-form potentials of the first-order systems are 2, 6, -6, 0"""
        expected = {"F.1": 2, "F.2": 6, "F.3": -6, "F.4": 0}
        for name, value in expected.items():
            system = build_system(name)
            assert equivalent(system.V, value + 0 * X)

    def test_inverse_square_mass_keeps_potential(self):
        """For f = 1/x² both potential forms coincide"""
        system = build_system("T2.1", {ALPHA_NAME: -1})
        assert equivalent(system.potential_tilde, ALPHA / X**2, params={ALPHA_NAME: -1.0})

    def test_relation_holds_everywhere(self):
        """V and the Laplacian-form potential agree for all systems"""
        for fid in family_ids():
            entry = get_entry(fid)
            params = {}
            if entry.uses_alpha:
                params[ALPHA_NAME] = Fraction(7, 3)
            if entry.uses_kappa:
                params[KAPPA_NAME] = Fraction(3, 2)
            assert check_relation(build_system(fid, params)), str(fid)


class TestConstraints(unittest.TestCase):
    """Parameter validation"""

    def test_two_parameter_pseudotensor_ok(self):
        assert validate_params("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0}) == []

    def test_pseudotensor_item9_small_kappa(self):
        labels = [v.label for v in validate_params("T2.9", {ALPHA_NAME: 10, KAPPA_NAME: 0.5})]
        assert "|κ| ≥ 1" in labels

    def test_vector_item9_unit_kappa_is_classification_only(self):
        violations = validate_params("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 1})
        assert [v.label for v in violations] == ["κ ≠ ±1"]
        assert violations[0].kind == "classification"
        assert "footnote" in violations[0].citation

    def test_boundary_is_exact_for_rationals(self):
        """α = -5 violates α > -5 exactly; -49/10 does not"""
        assert validate_params("T2.10", {ALPHA_NAME: -5, KAPPA_NAME: 0})
        assert validate_params("T2.10", {ALPHA_NAME: Fraction(-49, 10), KAPPA_NAME: 0}) == []

    def test_kappa_rejected_on_plain_family(self):
        with pytest.raises(ParameterError):
            build_system("T1.1", {ALPHA_NAME: 1, KAPPA_NAME: 2})

    def test_alpha_required(self):
        with pytest.raises(ParameterError):
            build_system("T2.6", {})

    def test_strict_raises_on_spectral_violation(self):
        build_system("T2.9", {ALPHA_NAME: 10, KAPPA_NAME: 0.5})
        with pytest.raises(ParameterError) as info:
            build_system("T2.9", {ALPHA_NAME: 10, KAPPA_NAME: 0.5}, strict=True)
        assert info.value.violations

    def test_unknown_family(self):
        with pytest.raises(UnknownFamilyError):
            build_system("T2.11", {ALPHA_NAME: 1})


class TestSingularRadii(unittest.TestCase):
    """Declared singular radii"""

    def test_table2_item10_unit_radius(self):
        system = build_system("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0})
        assert system.singular_radii == pytest.approx([1.0])

    def test_table1_item9_roots(self):
        system = build_system("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 2})
        s3 = math.sqrt(3)
        assert system.singular_radii == pytest.approx([2 - s3, 1.0, 2 + s3])

    def test_radii_are_genuine(self):
        """Near each radius either 1/f or V blows up"""
        cases = [
            ("T1.3", {ALPHA_NAME: 2}),
            ("T1.9", {ALPHA_NAME: 3, KAPPA_NAME: 2}),
            ("T1.10", {ALPHA_NAME: 1, KAPPA_NAME: Fraction(1, 3)}),
            ("T2.8", {ALPHA_NAME: 1}),
            ("T2.9", {ALPHA_NAME: 5, KAPPA_NAME: 3}),
            ("T2.10", {ALPHA_NAME: 8, KAPPA_NAME: 0}),
        ]
        for name, params in cases:
            system = build_system(name, params)
            bindings = system.bindings()
            assert system.singular_radii, name
            for r in system.singular_radii:
                point = dict(bindings, x=r + 1e-6)
                big = max(abs(1 / evaluate(system.f, point)), abs(evaluate(system.V, point)))
                assert big > 1e5, (name, r)


class TestExport:
    """JSON documents"""

    def test_family_document(self):
        doc = export_family("T2.10")
        assert doc["family"] == "T2.10"
        assert doc["route"]["approach"] == "TwoStep"
        assert from_sexpr(doc["f"]) is get_entry("T2.10").f
        assert any("α > −5" in c["label"] for c in doc["constraints"])

    def test_entered_integral(self):
        """Corrected entries export both forms; the others repeat the printed one"""
        corrected = export_family("T1.2")
        assert corrected["integral"].endswith("αx^a")
        assert corrected["entered"].endswith("αx^a/x")
        plain = export_family("T1.5")
        assert plain["entered"] == plain["integral"]

    def test_catalog_files(self, tmp_path):
        paths = export_catalog(tmp_path)
        assert len(paths) == 24
        doc = json.loads((tmp_path / "T1.9.json").read_text())
        assert doc["route"]["note"]
