"""Shared fixtures: reference parameter points and expensive session objects."""

import numpy as np
import pytest

from kkwaves.continuation import continue_hopf, fixed_period_family
from kkwaves.model import ModelParams, PhysicalConstants
from kkwaves.normalforms import bt_points_at_theta0, omega0

# reference Hopf points on the theta0 = 0.16 locus
FAMILY_A = {"q_g": 0.164212226, "v_g": 0.335569670, "v_c": 0.064430330,
            "theta0": 0.16}
FAMILY_B = {"q_g": 0.133886021, "v_g": 0.204071932, "v_c": 0.195928068,
            "theta0": 0.16}

# published cusp values (9 decimals) and the regression targets
CUSP_REF = {"q_g": 0.316762381, "v_g": 0.752937578, "v_c": 0.300464598,
            "theta": 1.109656146, "ve3": -11.317691591}

FAMILY_A_PERIOD = 1469.90          # held exactly by the fixed-period family
FAMILY_A_ROAD_KM = 10.49928571     # = 1469.90 / 140


def params_at(point: dict) -> ModelParams:
    return ModelParams(q_g=point["q_g"], v_g=point["v_g"],
                       theta0=point["theta0"])


@pytest.fixture(scope="session")
def consts() -> PhysicalConstants:
    return PhysicalConstants()


@pytest.fixture(scope="session")
def family_b_period() -> float:
    p = params_at(FAMILY_B)
    return 2.0 * np.pi / omega0(p, FAMILY_B["v_c"])


@pytest.fixture(scope="session")
def family_b_cycle(family_b_period):
    """A developed stable family-B cycle (used as the PDE initial profile)."""
    fam = fixed_period_family(FAMILY_B["q_g"], 0.16, family_b_period,
                              n_steps=80, step=5e-4, max_step=4e-3)
    return fam.cycles[-1]


@pytest.fixture(scope="session")
def family_a_family():
    fam = fixed_period_family(FAMILY_A["q_g"], 0.16, FAMILY_A_PERIOD,
                              n_steps=20)
    return fam


@pytest.fixture(scope="session")
def hopf_curve_016():
    bts = bt_points_at_theta0(0.16)
    return continue_hopf(bts[0], theta0=0.16)
