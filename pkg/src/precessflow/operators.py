"""Galerkin operator assembly from exact monomial integration.

Everything the semi-discrete system

    M du/dt + N(u,u) + V u + 2 eps_p C_x u = F_bc

needs is assembled here: mass and hemispheric Grams, the two stiffness forms
(strain-rate and full-gradient), the Coriolis matrix for an arbitrary
precession axis, the dense advection tensor T[i][j][k] = integral of
(b_i . grad b_j) . b_k, angular-momentum vectors, and the boundary-condition
forcing.  Boundary terms of the two inhomogeneous forms are reduced to volume
integrals (the data field is linear, so its strain/gradient is constant and
div eps(u_P) = 0), keeping assembly exact; no surface quadrature enters the
dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import monomials
from .basis import Basis, solid_rotation
from .geometry import Domain, volume_integral
from .polynomials import Polynomial3, VectorField

BC_FORMS = ("stress_free", "poincare_stress", "normal_gradient", "poincare_normal_gradient")

# strain component pairs (a, b) with multiplicities for the full tensor contraction
_STRAIN_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_STRAIN_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


@dataclass(frozen=True)
class BoundaryCondition:
    """Tangential boundary condition selector.

    Homogeneous forms carry no data; the Poincare variants carry the linear
    field whose boundary stress (or normal gradient) is imposed.
    """

    form: str
    data_field: VectorField | None = None

    def __post_init__(self):
        if self.form not in BC_FORMS:
            raise ValueError(f"unknown boundary condition form {self.form!r}")
        if self.is_inhomogeneous and self.data_field is None:
            raise ValueError(f"{self.form} requires a data field")
        if not self.is_inhomogeneous and self.data_field is not None:
            raise ValueError(f"{self.form} does not accept a data field")

    @property
    def is_inhomogeneous(self) -> bool:
        return self.form in ("poincare_stress", "poincare_normal_gradient")

    @property
    def uses_gradient_stiffness(self) -> bool:
        return self.form in ("normal_gradient", "poincare_normal_gradient")


@dataclass
class OperatorSet:
    """Assembled Galerkin operators over an orthonormal basis.

    Immutable by convention after assembly; safe to share across runs.
    T index convention: T[i][j][k] = integral of (b_i . grad b_j) . b_k, so the
    advection contribution to the k-th residual entry is sum_ij c_i c_j T[i,j,k].
    """

    basis: Basis
    bc: BoundaryCondition
    nu: float
    eps_p: float
    precession_axis: tuple[float, float, float]
    M: np.ndarray
    A_sym: np.ndarray
    A_grad: np.ndarray
    C_x: np.ndarray
    T: np.ndarray | None
    F_bc: np.ndarray
    mom: np.ndarray          # (3, dim): mom[alpha][i] = integral (x cross b_i)_alpha
    Hn: np.ndarray
    Hs: np.ndarray
    _solver_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def V(self) -> np.ndarray:
        """Viscous operator selected by the boundary-condition form."""
        if self.bc.uses_gradient_stiffness:
            return self.nu * self.A_grad
        return self.nu * self.A_sym


def _core_matrices(basis: Basis, axis: tuple[float, float, float], include_advection: bool):
    key = ("core", axis, include_advection)
    cached = basis._assembly_cache.get(key)
    if cached is not None:
        return cached
    # reuse the bc-independent pieces from a previous assembly with advection
    full = basis._assembly_cache.get(("core", axis, True))
    if full is not None:
        return full

    domain = basis.domain
    n = basis.degree
    bc_arr = basis.coeff_array                        # (dim, 3, D_N)
    dim = bc_arr.shape[0]
    j_nn = monomials.gram(domain, n, n)
    j_dd = monomials.gram(domain, n - 1, n - 1)

    m_mat = np.einsum("icm,mn,jcn->ij", bc_arr, j_nn, bc_arr, optimize=True)
    hn = np.einsum("icm,mn,jcn->ij", bc_arr,
                   monomials.gram(domain, n, n, "north"), bc_arr, optimize=True)
    hs = np.einsum("icm,mn,jcn->ij", bc_arr,
                   monomials.gram(domain, n, n, "south"), bc_arr, optimize=True)

    # dB[i, comp, axis, :] = d(b_i)_comp / d x_axis
    db = np.stack([monomials.apply_derivative(bc_arr, n, a) for a in range(3)], axis=2)

    strain = np.stack([0.5 * (db[:, bpair, apair, :] + db[:, apair, bpair, :])
                       for (apair, bpair) in _STRAIN_PAIRS], axis=1)  # (dim, 6, D')
    a_sym = 2.0 * np.einsum("ipm,mn,jpn,p->ij", strain, j_dd, strain,
                            _STRAIN_WEIGHTS, optimize=True)
    a_grad = np.einsum("icam,mn,jcan->ij", db, j_dd, db, optimize=True)
    a_sym = 0.5 * (a_sym + a_sym.T)
    a_grad = 0.5 * (a_grad + a_grad.T)

    w = np.asarray(axis, dtype=float)
    wb = np.empty_like(bc_arr)
    wb[:, 0] = w[1] * bc_arr[:, 2] - w[2] * bc_arr[:, 1]
    wb[:, 1] = w[2] * bc_arr[:, 0] - w[0] * bc_arr[:, 2]
    wb[:, 2] = w[0] * bc_arr[:, 1] - w[1] * bc_arr[:, 0]
    c_mat = np.einsum("icm,mn,jcn->ij", bc_arr, j_nn, wb, optimize=True)

    ivec_up = monomials.integral_vector(domain, n + 1)
    shifted = [[monomials.apply_shift(bc_arr[:, c, :], n, a) for c in range(3)]
               for a in range(3)]
    mom = np.stack([
        (shifted[1][2] - shifted[2][1]) @ ivec_up,
        (shifted[2][0] - shifted[0][2]) @ ivec_up,
        (shifted[0][1] - shifted[1][0]) @ ivec_up,
    ])

    t_tensor = None
    if include_advection:
        g3 = monomials.triple_product_table(domain, n, n - 1, n)
        u = np.einsum("mno,kco->mnkc", g3, bc_arr, optimize=True)
        v2 = np.einsum("jcan,mnkc->majk", db, u, optimize=True)
        t_tensor = np.einsum("iam,majk->ijk", bc_arr, v2, optimize=True)

    core = dict(M=m_mat, A_sym=a_sym, A_grad=a_grad, C_x=c_mat, T=t_tensor,
                mom=mom, Hn=hn, Hs=hs, db=db, strain=strain)
    basis._assembly_cache[key] = core
    return core


def assemble(basis: Basis, bc: BoundaryCondition, nu: float, eps_p: float,
             precession_axis=(1.0, 0.0, 0.0), include_advection: bool = True) -> OperatorSet:
    """Assemble the full operator set for one boundary-condition/viscosity choice.

    The bc-independent matrices are cached on the basis, so repeated assembly
    with different (nu, eps_p, bc) is cheap.
    """
    if not nu > 0:
        raise ValueError("viscosity must be positive")
    axis = tuple(float(a) for a in precession_axis)
    if abs(sum(a * a for a in axis) - 1.0) > 1e-12:
        raise ValueError("precession axis must be a unit vector")

    core = _core_matrices(basis, axis, include_advection)
    f_bc = _forcing_vector(basis, bc, nu, core)
    return OperatorSet(
        basis=basis, bc=bc, nu=float(nu), eps_p=float(eps_p), precession_axis=axis,
        M=core["M"], A_sym=core["A_sym"], A_grad=core["A_grad"], C_x=core["C_x"],
        T=core["T"], F_bc=f_bc, mom=core["mom"], Hn=core["Hn"], Hs=core["Hs"],
    )


def _forcing_vector(basis: Basis, bc: BoundaryCondition, nu: float, core: dict) -> np.ndarray:
    dim = basis.dim
    if not bc.is_inhomogeneous:
        return np.zeros(dim)
    data = bc.data_field
    n = basis.degree
    ivec_d = monomials.integral_vector(basis.domain, n - 1)
    if bc.form == "poincare_stress":
        strain = data.strain()
        if any(strain[a][b].degree > 0 for a in range(3) for b in range(3)):
            raise ValueError("data field must have a constant strain rate")
        s6 = np.array([float(strain[a][b].coeffs.get((0, 0, 0), 0.0))
                       for (a, b) in _STRAIN_PAIRS])
        strain_int = core["strain"] @ ivec_d                 # (dim, 6)
        return 2.0 * nu * strain_int @ (s6 * _STRAIN_WEIGHTS)
    # poincare_normal_gradient
    grad = data.gradient()
    if any(grad[a][c].degree > 0 for a in range(3) for c in range(3)):
        raise ValueError("data field must have a constant gradient")
    g = np.array([[float(grad[a][c].coeffs.get((0, 0, 0), 0.0)) for c in range(3)]
                  for a in range(3)])
    grad_int = core["db"] @ ivec_d                           # (dim, 3, 3) as [i, c, a]
    return nu * np.einsum("ica,ac->i", grad_int, g)


def advection_term(ops: OperatorSet, coeffs: np.ndarray) -> np.ndarray:
    """Galerkin advection: out[k] = sum_ij c_i c_j T[i][j][k]."""
    if ops.T is None:
        raise ValueError("operator set was assembled without the advection tensor")
    return np.einsum("i,j,ijk->k", coeffs, coeffs, ops.T, optimize=True)


def residual(coeffs: np.ndarray, ops: OperatorSet) -> np.ndarray:
    """Steady-state residual of the semi-discrete momentum equation."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (ops.dim,):
        raise ValueError(f"expected {ops.dim} coefficients, got shape {c.shape}")
    r = ops.V @ c + 2.0 * ops.eps_p * (ops.C_x @ c) - ops.F_bc
    if ops.T is not None:
        r = r + advection_term(ops, c)
    return r


def angular_momentum(coeffs: np.ndarray, ops: OperatorSet) -> np.ndarray:
    """M_alpha = integral of (x cross u)_alpha for u = sum c_i b_i."""
    return ops.mom @ np.asarray(coeffs, dtype=float)


def momentum_coupling_identity(v: VectorField, domain: Domain):
    """Both sides of  int e_y.(x cross v) = 2 int (e_z cross x).(e_x cross v).

    Evaluated by direct exact integration of the two integrands, with no
    reference to any basis, so it applies to any solenoidal tangent field on
    any of the three domain kinds.  Equality holds because the difference is
    int v . grad(xz), which vanishes for solenoidal fields tangent to the
    boundary.
    """
    x = Polynomial3.variable(0)
    z = Polynomial3.variable(2)
    vx, _, vz = v.components
    lhs = volume_integral(z * vx - x * vz, domain)
    ez_cross_x = solid_rotation((0, 0, 1))
    ex_cross_v = v.cross_const((1, 0, 0))
    rhs = 2.0 * volume_integral(ez_cross_x.dot(ex_cross_v), domain)
    return lhs, rhs


def dump_operator_set(ops: OperatorSet, path) -> None:
    """Text dump of every assembled operator (row-major, 17 significant digits)."""
    def write_matrix(fh, name, mat):
        mat = np.atleast_2d(mat)
        fh.write(f"# {name} {mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    with open(path, "w", newline="\n") as fh:
        fh.write(f"# precessflow operators dim {ops.dim} nu {ops.nu:.17g} "
                 f"eps_p {ops.eps_p:.17g} bc {ops.bc.form}\n")
        for name in ("M", "A_sym", "A_grad", "C_x", "Hn", "Hs"):
            write_matrix(fh, name, getattr(ops, name))
        write_matrix(fh, "mom", ops.mom)
        write_matrix(fh, "F_bc", ops.F_bc.reshape(1, -1))
        if ops.T is not None:
            fh.write(f"# T {ops.dim} {ops.dim} {ops.dim}\n")
            for i in range(ops.dim):
                write_matrix(fh, f"T[{i}]", ops.T[i])
