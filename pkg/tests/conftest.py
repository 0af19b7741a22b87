"""Shared fixtures: catalog N-functions on the unit square."""

import numpy as np
import pytest

from musielak import (AffineCoefficient, AnisotropicDoublePhase,
                      AnisotropicVariable, ConstantPower, DoublePhase,
                      ExpGrowth, VariableExponent, build_domain)

SQUARE = build_domain("rectangle")
INTERVAL = build_domain("interval")


def catalog_families(domain=SQUARE):
    """One representative per catalog family, dim matching the domain."""
    sd = domain.dim
    flat = (0.0,) * (sd - 1)
    if sd == 2:
        aniso_var = AnisotropicVariable(
            [AffineCoefficient(2.0, (0.3, 0.3)),
             AffineCoefficient(3.0, (-0.5, -0.5))], domain)
        aniso_dp = AnisotropicDoublePhase(
            [2.0, 2.5], [3.0, 3.5],
            [AffineCoefficient(0.0, (1.0, 0.0)),
             AffineCoefficient(0.5, (0.0, 0.5))], domain)
    else:
        aniso_var = AnisotropicVariable([AffineCoefficient(2.0, (0.3,))], domain)
        aniso_dp = AnisotropicDoublePhase(
            [2.0], [3.0], [AffineCoefficient(0.0, (1.0,))], domain)
    return [
        ConstantPower(p=2.5, dim=sd, domain=domain),
        VariableExponent(AffineCoefficient(2.0, (0.5,) * sd), domain),
        DoublePhase(2.0, 3.0, AffineCoefficient(0.0, (1.0,) + flat), domain),
        aniso_var,
        aniso_dp,
        ExpGrowth(dim=sd, domain=domain),
    ]


FAMILY_IDS = ["constant-power", "variable-exponent", "double-phase",
              "anisotropic-variable", "anisotropic-double-phase", "custom-exp"]


@pytest.fixture(params=range(6), ids=FAMILY_IDS)
def family(request):
    return catalog_families()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(42)
