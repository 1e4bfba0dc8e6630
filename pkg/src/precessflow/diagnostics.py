"""Scalar diagnostics, constraint functionals, and the time-series CSV format.

Quadratic quantities (energies, hemispheric energies, angular momentum and the
rotation amplitude lambda) come from the exactly assembled Gram/moment
operators.  The three surface constraint functionals are quadrature-based on
the polynomial reconstruction of the state.  ``dEK_dt`` is a post-hoc centered
difference of the recorded energy; the instantaneous energy rate (viscous
dissipation plus boundary-forcing work) is emitted alongside it as the
``dissipation`` column, so the two estimates bracket the time-discretization
error.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import monomials
from .basis import project, solid_rotation
from .geometry import SurfaceRule, surface_rule, volume_integral
from .operators import OperatorSet
from .polynomials import VectorField

CSV_HEADER = ("t,E_K,dEK_dt,dissipation,delta_EK,lambda,E_perp,"
              "M_x,M_y,M_z,dE_Kn,dE_Ks,c_rot,c_orth,c_tot")

CONSTRAINT_MODES = ("rot_momentum", "orth_poincare", "total_momentum")


@dataclass
class DiagnosticsRecord:
    t: float
    E_K: float
    dEK_dt: float          # filled post hoc from the record sequence
    dissipation: float
    delta_EK: float
    lam: float
    E_perp: float
    M_x: float
    M_y: float
    M_z: float
    dE_Kn: float
    dE_Ks: float
    c_rot: float
    c_orth: float
    c_tot: float

    def csv_row(self) -> str:
        vals = (self.t, self.E_K, self.dEK_dt, self.dissipation, self.delta_EK,
                self.lam, self.E_perp, self.M_x, self.M_y, self.M_z,
                self.dE_Kn, self.dE_Ks, self.c_rot, self.c_orth, self.c_tot)
        return ",".join(f"{v:.17g}" for v in vals)


class DiagnosticsContext:
    """Per-run precomputed context: reference fields, surface rule, node values."""

    def __init__(self, ops: OperatorSet, u_p: VectorField | None,
                 rule: SurfaceRule | None = None):
        basis = ops.basis
        domain = basis.domain
        self.ops = ops
        self.rule = rule if rule is not None else surface_rule(domain, 32, 64)
        self.u_p = u_p
        if u_p is not None:
            self.c_p, p_res = project(u_p, basis)
            if p_res > 1e-8:
                raise ValueError("reference field is not representable in the basis")
        else:
            self.c_p = np.zeros(basis.dim)

        rot = solid_rotation((0, 0, 1))
        self.gamma = volume_integral(rot.dot(rot), domain)  # ||e_z x x||^2, exact
        self.c_rot_dir, _ = project(rot, basis)             # projection of e_z x x

        self.vander = monomials.vandermonde(self.rule.points, basis.degree)
        self.rot_nodes = rot.evaluate(self.rule.points)
        if u_p is not None:
            self.up_nodes = u_p.evaluate(self.rule.points)
        else:
            self.up_nodes = np.zeros_like(self.rot_nodes)
        # surface values of the projected rotation direction, for constraint removal
        self.dir_nodes = self._node_values(self.c_rot_dir)
        w = self.rule.weights
        self.den_rot = float(np.einsum("n,nc,nc->", w, self.dir_nodes, self.rot_nodes))
        self.den_orth = float(np.einsum("n,nc,nc->", w, self.dir_nodes, self.up_nodes))

    def _node_values(self, coeffs: np.ndarray) -> np.ndarray:
        field_coeffs = np.einsum("i,icm->cm", coeffs, self.ops.basis.coeff_array)
        return self.vander @ field_coeffs.T

    def surface_functionals(self, coeffs: np.ndarray):
        """(c_rot, c_orth, c_tot) of the state with the given coefficients."""
        u_nodes = self._node_values(coeffs)
        w = self.rule.weights
        pert = u_nodes - self.up_nodes
        c_rot = float(np.einsum("n,nc,nc->", w, pert, self.rot_nodes))
        c_orth = float(np.einsum("n,nc,nc->", w, pert, self.up_nodes))
        c_tot = float(np.einsum("n,nc,nc->", w, u_nodes, self.rot_nodes))
        return c_rot, c_orth, c_tot


def record(state, ops: OperatorSet, ctx: DiagnosticsContext) -> DiagnosticsRecord:
    """Compute every diagnostic scalar for one state."""
    c = np.asarray(state.coeffs, dtype=float)
    if c.shape != (ops.dim,):
        raise ValueError("coefficient vector does not match the operator set")
    mc = ops.M @ c
    e_k = 0.5 * float(c @ mc)
    diff = c - ctx.c_p
    delta = 0.5 * float(diff @ (ops.M @ diff))
    de_kn = 0.5 * float(diff @ (ops.Hn @ diff))
    de_ks = 0.5 * float(diff @ (ops.Hs @ diff))
    m_vec = ops.mom @ c
    lam = float(m_vec[2]) / ctx.gamma   # (u, e_z x x) = M_z
    e_perp = max(e_k - 0.5 * lam * lam * ctx.gamma, 0.0)
    dissipation = -float(c @ (ops.V @ c)) + float(c @ ops.F_bc)
    c_rot, c_orth, c_tot = ctx.surface_functionals(c)
    return DiagnosticsRecord(
        t=float(state.t), E_K=e_k, dEK_dt=math.nan, dissipation=dissipation,
        delta_EK=delta, lam=lam, E_perp=e_perp,
        M_x=float(m_vec[0]), M_y=float(m_vec[1]), M_z=float(m_vec[2]),
        dE_Kn=de_kn, dE_Ks=de_ks, c_rot=c_rot, c_orth=c_orth, c_tot=c_tot,
    )


@dataclass
class TimeSeries:
    records: list
    dt: float
    record_interval: float

    def finalize(self) -> "TimeSeries":
        """Fill dEK_dt by centered differences (one-sided at the ends)."""
        recs = self.records
        n = len(recs)
        for i in range(n):
            lo = max(i - 1, 0)
            hi = min(i + 1, n - 1)
            span = recs[hi].t - recs[lo].t
            if span > 0:
                recs[i].dEK_dt = (recs[hi].E_K - recs[lo].E_K) / span
            else:
                recs[i].dEK_dt = 0.0
        return self

    def column(self, name: str) -> np.ndarray:
        attr = "lam" if name == "lambda" else name
        return np.array([getattr(r, attr) for r in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in self.records:
                fh.write(r.csv_row() + "\n")


def momentum_balance_residual(series: TimeSeries, eps_p: float) -> np.ndarray:
    """Centered-difference residual of  dM_z/dt + eps_p M_y  at interior records."""
    if len(series.records) < 3:
        raise ValueError("need at least three records for a centered difference")
    t = series.column("t")
    spacing = np.diff(t)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
        raise ValueError("records are not uniformly spaced")
    m_z = series.column("M_z")
    m_y = series.column("M_y")
    delta = spacing[0]
    return (m_z[2:] - m_z[:-2]) / (2.0 * delta) + eps_p * m_y[1:-1]


def constraint_projection(state, ops: OperatorSet, mode: str, rule) -> object:
    """Remove the rigid-rotation amount that zeroes the selected surface functional.

    Subtracts alpha * (projected e_z x x) from the state so that c_rot,
    c_orth, or c_tot vanishes; everything orthogonal to the rotation direction
    is untouched.  ``rule`` may be a SurfaceRule or a prepared
    DiagnosticsContext.
    """
    if mode not in CONSTRAINT_MODES:
        raise ValueError(f"unknown constraint mode {mode!r}")
    if isinstance(rule, DiagnosticsContext):
        ctx = rule
    else:
        ctx = DiagnosticsContext(ops, None, rule)
    c = np.asarray(state.coeffs, dtype=float)
    c_rot, c_orth, c_tot = ctx.surface_functionals(c)
    if mode == "rot_momentum":
        value, den = c_rot, ctx.den_rot
    elif mode == "orth_poincare":
        value, den = c_orth, ctx.den_orth
    else:
        value, den = c_tot, ctx.den_rot
    scale = float(np.sum(ctx.rule.weights)) * max(1.0, float(np.max(np.abs(ctx.dir_nodes))))
    if abs(den) <= 1e-12 * scale:
        raise ValueError(f"constraint functional is degenerate on the rotation direction "
                         f"(denominator {den:.3e})")
    alpha = value / den
    return dataclasses.replace(state, coeffs=c - alpha * ctx.c_rot_dir)
