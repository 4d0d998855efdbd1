import numpy as np
import pytest

from escalate import Cibp, DoseEscalationDesign, PowerModel, SquaredDistance
from escalate.config import load_preset_design


@pytest.fixture
def everolimus_cibp():
    """Fitted conduct-calibrated CIBP(0.3) design for the three-dose trial."""
    _, design = load_preset_design("everolimus-cibp")
    return design.fit()


@pytest.fixture
def everolimus_crm():
    _, design = load_preset_design("everolimus-crm")
    return design.fit()


def make_benchmark_design(criterion, gamma=0.25):
    """Six-dose benchmark design as used in the simulation study config."""
    from escalate import calibrate_skeleton

    return DoseEscalationDesign(
        skeleton=calibrate_skeleton(6, 2, gamma, 0.05),
        gamma=gamma,
        model=PowerModel(),
        criterion=criterion,
        cohort_size=1,
        max_patients=30,
    )


@pytest.fixture
def benchmark_crm():
    return make_benchmark_design(SquaredDistance()).fit()


@pytest.fixture
def benchmark_cibp():
    return make_benchmark_design(Cibp(a=0.3)).fit()


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
