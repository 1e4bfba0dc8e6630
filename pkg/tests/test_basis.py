import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from precessflow import monomials
from precessflow.basis import (build_basis, curl_form_fields, load_basis, poincare_field,
                               project, save_basis, solid_rotation, stream_cross_field,
                               _orthonormal_coefficients)
from precessflow.geometry import Domain, surface_rule, volume_integral
from precessflow.polynomials import Polynomial3, VectorField

from conftest import DOMAINS, get_basis

# dimension of the constrained space, from the exact nullspace (regression;
# empirically N (N+1) (2N+7) / 6, identical across domain kinds)
EXPECTED_DIMS = {1: 3, 2: 11, 3: 26, 4: 50}


class TestPoincareField:
    def test_components_beta_05625(self):
        u = poincare_field(Fraction(9, 16), Fraction(1, 4))
        # 2 eps / beta = 8/9, (1+beta) factor gives 25/18
        assert u.components[0] == Polynomial3({(0, 1, 0): Fraction(-1)})
        assert u.components[1] == Polynomial3({(1, 0, 0): Fraction(1),
                                               (0, 0, 1): Fraction(-25, 18)})
        assert u.components[2] == Polynomial3({(0, 1, 0): Fraction(8, 9)})

    def test_zero_precession_is_rotation(self):
        u = poincare_field(Fraction(9, 16), 0)
        r = solid_rotation((0, 0, 1))
        assert all((a - b).is_zero() for a, b in zip(u.components, r.components))

    def test_invalid_beta(self):
        with pytest.raises(ValueError):
            poincare_field(0, Fraction(1, 4))
        with pytest.raises(ValueError):
            poincare_field(-2, Fraction(1, 4))

    def test_solenoidal_and_tangent(self):
        u = poincare_field(Fraction(9, 16), Fraction(1, 4))
        assert u.divergence().is_zero()
        assert u.tangency_remainder(DOMAINS["spheroid"].chi).is_zero()

    def test_max_speed(self):
        # Exact maximization of |u_P|^2 over the closed domain gives 181/81 at
        # y = 0 (the quoted value 1.25 elsewhere equals sqrt(1+beta), a
        # different quantity); dense boundary sampling agrees.
        u = poincare_field(Fraction(9, 16), Fraction(1, 4))
        rule = surface_rule(DOMAINS["spheroid"], 400, 800)
        speeds = np.linalg.norm(u.evaluate(rule.points), axis=1)
        exact = math.sqrt(181.0) / 9.0
        assert speeds.max() <= exact + 1e-12
        assert speeds.max() == pytest.approx(exact, abs=2e-5)


class TestSolidRotation:
    def test_z_axis(self):
        r = solid_rotation((0, 0, 1))
        assert r.components[0] == Polynomial3({(0, 1, 0): Fraction(-1)})
        assert r.components[1] == Polynomial3({(1, 0, 0): Fraction(1)})
        assert r.components[2].is_zero()

    def test_x_axis(self):
        r = solid_rotation((1, 0, 0))
        assert r.components[0].is_zero()
        assert r.components[1] == Polynomial3({(0, 0, 1): Fraction(-1)})
        assert r.components[2] == Polynomial3({(0, 1, 0): Fraction(1)})

    def test_axis_must_be_unit(self):
        with pytest.raises(ValueError):
            solid_rotation((1, 1, 0))

    @given(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))
           .filter(lambda a: any(a)))
    def test_strain_vanishes(self, raw_axis):
        n2 = sum(Fraction(v) ** 2 for v in raw_axis)
        # scale to unit length in float, keep exactness of the pattern
        axis = tuple(float(v) / math.sqrt(float(n2)) for v in raw_axis)
        r = solid_rotation(axis)
        strain = r.strain()
        assert max(strain[a][b].max_abs_coeff() for a in range(3) for b in range(3)) == 0.0


class TestBuildBasis:
    @pytest.mark.parametrize("kind", ["sphere", "spheroid", "triaxial"])
    @pytest.mark.parametrize("degree", [1, 2, 3, 4])
    def test_dimensions(self, kind, degree):
        assert get_basis(kind, degree).dim == EXPECTED_DIMS[degree]

    def test_dimension_monotone(self):
        dims = [get_basis("spheroid", n).dim for n in (1, 2, 3, 4)]
        assert dims == sorted(dims)

    def test_degree_precondition(self):
        with pytest.raises(ValueError):
            build_basis(DOMAINS["sphere"], 0)

    @pytest.mark.parametrize("kind", ["sphere", "spheroid", "triaxial"])
    def test_linear_fields_are_scaled_rotations(self, kind):
        # N=1 nullspace is {S^-1 W x : W antisymmetric}, S = diag(1/a^2, ...)
        domain = DOMAINS[kind]
        basis = get_basis(kind, 1)
        x = Polynomial3.variable(0)
        y = Polynomial3.variable(1)
        z = Polynomial3.variable(2)
        a2, b2, c2 = domain.a2, domain.b2, domain.c2
        generators = [
            VectorField((Polynomial3.zero(), z.scale(-b2), y.scale(c2))),
            VectorField((z.scale(a2), Polynomial3.zero(), x.scale(-c2))),
            VectorField((y.scale(-a2), x.scale(b2), Polynomial3.zero())),
        ]
        for g in generators:
            assert g.divergence().is_zero()
            assert g.tangency_remainder(domain.chi).is_zero()
            _, res = project(g, basis)
            assert res < 1e-12

    @pytest.mark.parametrize("kind", ["sphere", "spheroid", "triaxial"])
    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_fields_satisfy_constraints_exactly(self, kind, degree):
        domain = DOMAINS[kind]
        basis = get_basis(kind, degree)
        chi = domain.chi
        for f in basis.fields:
            assert f.is_exact()
            assert f.divergence().is_zero()
            assert f.tangency_remainder(chi).is_zero()

    @pytest.mark.parametrize("kind", ["sphere", "spheroid", "triaxial"])
    @pytest.mark.parametrize("degree", [1, 2, 3, 4])
    def test_gram_is_identity(self, kind, degree):
        basis = get_basis(kind, degree)
        assert basis.gram_identity_deviation() < 1e-12
        assert np.isfinite(basis.raw_gram_cond)

    def test_rotation_membership(self):
        for kind in ("sphere", "spheroid"):
            for degree in (1, 2, 3):
                _, res = project(solid_rotation((0, 0, 1)), get_basis(kind, degree))
                assert res < 1e-12

    def test_poincare_membership(self):
        for degree in (1, 2, 3, 4):
            basis = get_basis("spheroid", degree)
            _, res = project(poincare_field(Fraction(9, 16), Fraction(1, 4)), basis)
            assert res < 1e-12

    def test_rotation_not_tangent_on_triaxial(self):
        _, res = project(solid_rotation((0, 0, 1)), get_basis("triaxial", 3))
        assert res > 1e-3

    def test_svd_fallback_matches_dimensions(self):
        for kind in ("sphere", "triaxial"):
            basis = build_basis(DOMAINS[kind], 2, method="svd")
            assert basis.dim == EXPECTED_DIMS[2]
            assert basis.gram_identity_deviation() < 1e-12

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            build_basis(DOMAINS["sphere"], 2, method="magic")

    def test_orthonormalization_rejects_rank_deficiency(self):
        g = np.array([[1.0, 1.0], [1.0, 1.0]])  # exactly dependent fields
        with pytest.raises(RuntimeError, match="non-positive pivot|dependent"):
            _orthonormal_coefficients(g)


class TestCurlForm:
    def test_psi_z_gives_twice_rotation(self):
        f = stream_cross_field(DOMAINS["spheroid"], Polynomial3.variable(2))
        twice = solid_rotation((0, 0, 1)).scale(2)
        assert all((a - b).is_zero() for a, b in zip(f.components, twice.components))

    def test_psi_linear_gives_poincare(self):
        psi = (Polynomial3.variable(0).scale(Fraction(1, 4) / Fraction(9, 16))
               + Polynomial3.variable(2).scale(Fraction(1, 2)))
        f = stream_cross_field(DOMAINS["spheroid"], psi)
        u_p = poincare_field(Fraction(9, 16), Fraction(1, 4))
        assert all((a - b).is_zero() for a, b in zip(f.components, u_p.components))

    def test_constant_psi_gives_zero(self):
        f = stream_cross_field(DOMAINS["sphere"], Polynomial3.constant(Fraction(3)))
        assert all(c.is_zero() for c in f.components)

    @pytest.mark.parametrize("kind", ["sphere", "spheroid", "triaxial"])
    def test_fields_satisfy_invariants_and_span(self, kind):
        domain = DOMAINS[kind]
        basis = get_basis(kind, 3)
        for f in curl_form_fields(domain, 3):
            assert f.divergence().is_zero()
            assert f.tangency_remainder(domain.chi).is_zero()
            _, res = project(f, basis)
            assert res < 1e-10


class TestProject:
    def test_exact_members_reconstruct(self):
        basis = get_basis("spheroid", 2)
        for field in (poincare_field(Fraction(9, 16), Fraction(1, 4)),
                      solid_rotation((0, 0, 1))):
            coeffs, res = project(field, basis)
            assert res < 1e-12
            recon = np.einsum("i,icm->cm", coeffs, basis.coeff_array)
            direct = monomials.field_to_array(field.to_float(), 2)
            np.testing.assert_allclose(recon, direct, atol=1e-13)

    def test_constant_field_residual(self):
        # e_x is not tangent; the residual is the non-representable remainder,
        # cross-checked against the normal-equation identity
        domain = DOMAINS["spheroid"]
        basis = get_basis("spheroid", 3)
        e_x = VectorField((Polynomial3.constant(1.0), Polynomial3.zero(), Polynomial3.zero()))
        coeffs, res = project(e_x, basis)
        assert res > 0.1
        norm2 = volume_integral(e_x.dot(e_x), domain)
        gram_identity = norm2 - float(coeffs @ np.linalg.solve(basis.gram, coeffs))
        assert res**2 == pytest.approx(gram_identity, rel=1e-6)


class TestExportImport:
    def test_roundtrip(self, tmp_path):
        basis = get_basis("spheroid", 2)
        path = tmp_path / "basis.txt"
        save_basis(basis, path)
        loaded = load_basis(path)
        assert loaded.dim == basis.dim
        assert loaded.degree == basis.degree
        assert loaded.domain == basis.domain
        assert loaded.gram_identity_deviation() < 1e-12
        for f, g in zip(basis.fields, loaded.fields):
            for a, b in zip(f.components, g.components):
                assert (a.to_float() - b).max_abs_coeff() < 1e-15

    def test_roundtrip_triaxial_axes(self, tmp_path):
        basis = get_basis("triaxial", 1)
        path = tmp_path / "basis.txt"
        save_basis(basis, path)
        assert load_basis(path).domain == DOMAINS["triaxial"]

    def test_corrupted_field_detected(self, tmp_path):
        from precessflow.verification import check_basis_file

        basis = get_basis("spheroid", 2)
        path = tmp_path / "basis.txt"
        save_basis(basis, path)
        lines = path.read_text().splitlines()
        # damage one coefficient on the first field line
        for i, line in enumerate(lines):
            if not line.startswith("#"):
                tok = line.split()
                tok[0] = tok[0].split(":")[0] + ":1.5"
                lines[i] = " ".join(tok)
                break
        path.write_text("\n".join(lines) + "\n")
        results = check_basis_file(path)
        failed = {r.name for r in results if not r.ok}
        assert "basis.tangency" in failed or "basis.divergence_free" in failed

    def test_reject_garbage(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a basis\n")
        with pytest.raises(ValueError):
            load_basis(path)
