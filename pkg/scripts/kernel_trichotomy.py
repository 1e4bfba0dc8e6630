#!/usr/bin/env python3
"""Tabulate viscous-kernel dimensions and coercivity constants.

Shows the sphere/spheroid/triaxial trichotomy of the strain-rate stiffness
kernel and the decreasing-in-degree discrete coercivity constant.
"""

from fractions import Fraction

from precessflow import (BoundaryCondition, Domain, assemble, build_basis,
                         coercivity_constant, viscous_kernel)

DOMAINS = [
    ("sphere", Domain(1, 1, 1)),
    ("spheroid b=0.5625", Domain.from_beta(Fraction(9, 16))),
    ("triaxial (1,0.9,0.8)", Domain(1, Fraction(9, 10), Fraction(4, 5))),
]
DEGREES = (1, 2, 3, 4)


def main():
    print(f"{'domain':24s} {'N':>2s} {'dim':>4s} {'ker(strain)':>11s} "
          f"{'ker(grad)':>9s} {'K_N':>14s}")
    for label, domain in DOMAINS:
        for n in DEGREES:
            basis = build_basis(domain, n)
            ops = assemble(basis, BoundaryCondition("stress_free"), nu=1.0,
                           eps_p=0.0, include_advection=False)
            k_sym = viscous_kernel(ops, stiffness="sym")
            k_grad = viscous_kernel(ops, stiffness="grad")
            coerc = coercivity_constant(ops, "kernel")
            print(f"{label:24s} {n:2d} {basis.dim:4d} {k_sym.kernel_dim:11d} "
                  f"{k_grad.kernel_dim:9d} {coerc.K_N:14.8g}")


if __name__ == "__main__":
    main()
