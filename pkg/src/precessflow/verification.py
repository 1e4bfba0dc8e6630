"""Cross-module invariant battery backing the ``verify`` subcommand.

Every check returns a named result so failures are attributable from the
machine-readable report.  The battery exercises the three domain kinds at a
configurable list of basis degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import diagnostics
from .basis import Basis, build_basis, curl_form_fields, poincare_field, project, solid_rotation
from .geometry import Domain, half_monomial_integral, monomial_integral, surface_rule
from .operators import BoundaryCondition, advection_term, assemble, momentum_coupling_identity, residual
from .spectral import coercivity_constant, viscous_kernel
from .timestepper import State, step


@dataclass
class CheckResult:
    name: str
    context: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        detail = f"  [{self.detail}]" if self.detail else ""
        return f"{status} {self.name} {self.context}{detail}"


def _default_domains():
    return (
        ("sphere", Domain(1, 1, 1)),
        ("spheroid", Domain.from_beta(Fraction(9, 16))),
        ("triaxial", Domain(1, Fraction(9, 10), Fraction(4, 5))),
    )


def _check(results, name, context, ok, detail=""):
    results.append(CheckResult(name, context, bool(ok), detail))


def _geometry_checks(results, label, domain):
    ctx = f"domain={label}"
    worst = 0.0
    for p in range(0, 7):
        for q in range(0, 7 - p):
            for r in range(0, 7 - p - q):
                full = monomial_integral(p, q, r, domain)
                north = half_monomial_integral(p, q, r, domain, "north")
                south = half_monomial_integral(p, q, r, domain, "south")
                worst = max(worst, abs(north + south - full))
    _check(results, "geometry.half_split", ctx, worst <= 1e-14, f"max dev {worst:.2e}")

    rule = surface_rule(domain, 16, 32)
    _check(results, "geometry.surface_weights_positive", ctx,
           bool((rule.weights > 0).all()))
    areas = [surface_rule(domain, n, 2 * n).total_weight for n in (8, 16, 32, 64)]
    errors = [abs(a - areas[-1]) for a in areas[:-1]]
    monotone = all(errors[i + 1] <= errors[i] + 1e-13 for i in range(len(errors) - 1))
    _check(results, "geometry.surface_area_converges", ctx, monotone,
           f"errors {['%.2e' % e for e in errors]}")


def _basis_checks(results, label, domain, basis: Basis, basis_fields_exact=True):
    ctx = f"domain={label} N={basis.degree}"
    chi = domain.chi
    div_ok, tan_ok = True, True
    for f in basis.fields:
        if basis_fields_exact and f.is_exact():
            div_ok &= f.divergence().is_zero()
            tan_ok &= f.tangency_remainder(chi).is_zero()
        else:
            scale = max(max(c.max_abs_coeff() for c in f.components), 1.0)
            div_ok &= f.divergence().max_abs_coeff() <= 1e-10 * scale
            tan_ok &= f.tangency_remainder(chi).max_abs_coeff() <= 1e-8 * scale
    _check(results, "basis.divergence_free", ctx, div_ok)
    _check(results, "basis.tangency", ctx, tan_ok)
    _check(results, "basis.gram_identity", ctx,
           basis.gram_identity_deviation() < 1e-12,
           f"dev {basis.gram_identity_deviation():.2e}")

    worst = max(project(f, basis)[1] for f in curl_form_fields(domain, basis.degree))
    _check(results, "basis.curl_form_span", ctx, worst < 1e-10, f"max residual {worst:.2e}")

    # e_z x x is tangent only when a = b, so membership is asserted there only
    if domain.kind in ("sphere", "spheroid_z"):
        _, res_rot = project(solid_rotation((0, 0, 1)), basis)
        _check(results, "basis.contains_rotation", ctx, res_rot < 1e-12,
               f"residual {res_rot:.2e}")
    if domain.kind == "spheroid_z" and abs(domain.a - 1.0) < 1e-12:
        u_p = poincare_field(domain.beta, Fraction(1, 4))
        _, res_p = project(u_p, basis)
        _check(results, "basis.contains_poincare", ctx, res_p < 1e-12, f"residual {res_p:.2e}")


def _operator_checks(results, label, domain, basis, perturb_advection=False):
    ctx = f"domain={label} N={basis.degree}"
    ops = assemble(basis, BoundaryCondition("stress_free"), nu=1.0, eps_p=0.25)
    t_tensor = ops.T
    if perturb_advection:
        t_tensor = t_tensor.copy()
        t_tensor[0, 0, 0] += 1e-6

    dev_t = float(np.max(np.abs(t_tensor + t_tensor.transpose(0, 2, 1))))
    _check(results, "operators.advection_antisymmetry", ctx, dev_t <= 1e-12,
           f"max dev {dev_t:.2e}")
    dev_c = float(np.max(np.abs(ops.C_x + ops.C_x.T)))
    _check(results, "operators.coriolis_antisymmetry", ctx, dev_c <= 1e-13,
           f"max dev {dev_c:.2e}")
    dev_h = float(np.max(np.abs(ops.Hn + ops.Hs - ops.M)))
    _check(results, "operators.hemisphere_split", ctx, dev_h <= 1e-14, f"max dev {dev_h:.2e}")

    rng = np.random.default_rng(20240517)
    worst_t, worst_c = 0.0, 0.0
    for _ in range(20):
        c = rng.standard_normal(ops.dim)
        c /= np.linalg.norm(c)
        worst_t = max(worst_t, abs(float(c @ advection_term(ops, c))))
        worst_c = max(worst_c, abs(float(c @ (ops.C_x @ c))))
    _check(results, "operators.advection_energy_neutral", ctx, worst_t < 1e-11,
           f"max {worst_t:.2e}")
    _check(results, "operators.coriolis_energy_neutral", ctx, worst_c < 1e-13,
           f"max {worst_c:.2e}")

    worst = max(abs(lhs - rhs) for lhs, rhs in
                (momentum_coupling_identity(f, domain) for f in basis.fields))
    _check(results, "operators.momentum_coupling_identity", ctx, worst < 1e-12,
           f"max |lhs-rhs| {worst:.2e}")

    if domain.kind == "spheroid_z" and abs(domain.a - 1.0) < 1e-12:
        u_p = poincare_field(domain.beta, Fraction(1, 4))
        ops_p = assemble(basis, BoundaryCondition("poincare_stress", u_p),
                         nu=1.0 / 0.024, eps_p=0.25)
        c_p, _ = project(u_p, basis)
        c_r, _ = project(solid_rotation((0, 0, 1)), basis)
        worst = max(float(np.max(np.abs(residual(c_p + w * c_r, ops_p))))
                    for w in (0.0, 0.025, -0.025, 0.1, -0.1, 1.0))
        _check(results, "operators.poincare_steadiness", ctx, worst < 1e-10,
               f"max residual {worst:.2e}")


def _spectral_checks(results, label, domain, basis):
    ctx = f"domain={label} N={basis.degree}"
    expected = {"sphere": 3, "spheroid_z": 1, "triaxial": 0}[domain.kind]
    ops = assemble(basis, BoundaryCondition("stress_free"), nu=1.0, eps_p=0.0,
                   include_advection=False)
    k_sym = viscous_kernel(ops, stiffness="sym")
    k_grad = viscous_kernel(ops, stiffness="grad")
    _check(results, "spectral.kernel_strain", ctx, k_sym.kernel_dim == expected,
           f"dim {k_sym.kernel_dim}, expected {expected}")
    _check(results, "spectral.kernel_gradient", ctx, k_grad.kernel_dim == 0,
           f"dim {k_grad.kernel_dim}")
    coerc = coercivity_constant(ops, "kernel")
    _check(results, "spectral.coercivity_positive", ctx, coerc.K_N > 0,
           f"K_N {coerc.K_N:.6g}")


def _dynamics_checks(results, label, domain, basis):
    """Short integration checks on the spheroid only (kept cheap)."""
    ctx = f"domain={label} N={basis.degree}"
    ops = assemble(basis, BoundaryCondition("stress_free"), nu=0.01, eps_p=0.0)
    c_r, _ = project(solid_rotation((0, 0, 1)), basis)
    state = State(0.0, 0.1 * c_r)
    e0 = 0.5 * float(state.coeffs @ (ops.M @ state.coeffs))
    drift = 0.0
    for _ in range(200):
        state = step(state, ops, 0.01)
        e_k = 0.5 * float(state.coeffs @ (ops.M @ state.coeffs))
        drift = max(drift, abs(e_k - e0) / e0)
    _check(results, "timestepper.rotation_energy_constant", ctx, drift < 1e-12,
           f"max drift {drift:.2e}")

    ctx_d = diagnostics.DiagnosticsContext(ops, None, surface_rule(domain, 16, 32))
    rng = np.random.default_rng(99)
    c = rng.standard_normal(basis.dim)
    rec = diagnostics.record(State(0.0, c), ops, ctx_d)
    split = abs(rec.E_K - rec.E_perp - 0.5 * rec.lam**2 * ctx_d.gamma)
    _check(results, "diagnostics.energy_split", ctx, split < 1e-12 * max(rec.E_K, 1.0),
           f"dev {split:.2e}")
    hemi = abs(rec.dE_Kn + rec.dE_Ks - rec.delta_EK)
    _check(results, "diagnostics.hemispheric_split", ctx,
           hemi < 1e-12 * max(rec.delta_EK, 1.0), f"dev {hemi:.2e}")
    projected = diagnostics.constraint_projection(State(0.0, c), ops, "total_momentum", ctx_d)
    again = diagnostics.constraint_projection(projected, ops, "total_momentum", ctx_d)
    dev = float(np.max(np.abs(again.coeffs - projected.coeffs)))
    _check(results, "diagnostics.projection_idempotent", ctx, dev < 1e-14 * max(1.0, float(np.max(np.abs(c)))),
           f"dev {dev:.2e}")


def run_battery(degrees=(1, 2, 4), perturb_advection: bool = False,
                basis_file: str | None = None) -> list[CheckResult]:
    """Run every module's invariant checks; returns one result per check."""
    results: list[CheckResult] = []
    domains = _default_domains()
    for label, domain in domains:
        _geometry_checks(results, label, domain)
    first = True
    for label, domain in domains:
        for degree in degrees:
            basis = build_basis(domain, degree)
            _basis_checks(results, label, domain, basis)
            _operator_checks(results, label, domain, basis,
                             perturb_advection=perturb_advection and first)
            _spectral_checks(results, label, domain, basis)
            if label == "spheroid" and degree == min(degrees):
                _dynamics_checks(results, label, domain, basis)
            first = False
    if basis_file is not None:
        results.extend(check_basis_file(basis_file))
    return results


def check_basis_file(path) -> list[CheckResult]:
    """Numeric invariant checks on an imported basis artifact."""
    from .basis import load_basis

    results: list[CheckResult] = []
    ctx = f"file={path}"
    try:
        basis = load_basis(path)
    except Exception as exc:
        _check(results, "basis.import", ctx, False, str(exc))
        return results
    _check(results, "basis.import", ctx, True, f"dim {basis.dim}")
    chi = basis.domain.chi
    worst_div, worst_tan = 0.0, 0.0
    for f in basis.fields:
        scale = max(max(c.max_abs_coeff() for c in f.components), 1e-30)
        worst_div = max(worst_div, f.divergence().max_abs_coeff() / scale)
        worst_tan = max(worst_tan, f.tangency_remainder(chi).max_abs_coeff() / scale)
    _check(results, "basis.divergence_free", ctx, worst_div <= 1e-10,
           f"max rel residual {worst_div:.2e}")
    _check(results, "basis.tangency", ctx, worst_tan <= 1e-8,
           f"max rel remainder {worst_tan:.2e}")
    dev = basis.gram_identity_deviation()
    _check(results, "basis.gram_identity", ctx, dev < 1e-10, f"dev {dev:.2e}")
    return results
