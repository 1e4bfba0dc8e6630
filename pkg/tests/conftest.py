from fractions import Fraction

import hypothesis
import pytest

from precessflow.basis import build_basis
from precessflow.geometry import Domain
from precessflow.operators import BoundaryCondition, assemble

hypothesis.settings.register_profile("default", deadline=None, max_examples=50)
hypothesis.settings.load_profile("default")

DOMAINS = {
    "sphere": Domain(1, 1, 1),
    "spheroid": Domain.from_beta(Fraction(9, 16)),
    "triaxial": Domain(1, Fraction(9, 10), Fraction(4, 5)),
}

BETA = Fraction(9, 16)
EPS_P = Fraction(1, 4)

_basis_cache: dict = {}


def get_basis(kind: str, degree: int):
    key = (kind, degree)
    if key not in _basis_cache:
        _basis_cache[key] = build_basis(DOMAINS[kind], degree)
    return _basis_cache[key]


def get_ops(kind: str, degree: int, form="stress_free", nu=1.0, eps_p=0.0, data=None):
    basis = get_basis(kind, degree)
    return assemble(basis, BoundaryCondition(form, data), nu=nu, eps_p=eps_p)


@pytest.fixture(scope="session")
def domains():
    return DOMAINS


@pytest.fixture(scope="session")
def spheroid():
    return DOMAINS["spheroid"]


@pytest.fixture(scope="session")
def sphere():
    return DOMAINS["sphere"]


@pytest.fixture(scope="session")
def triaxial():
    return DOMAINS["triaxial"]


@pytest.fixture(scope="session")
def basis_factory():
    return get_basis
