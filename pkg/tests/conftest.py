import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `naive` importable

import annealab as al


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def chain4():
    return al.ferromagnetic_chain(4)


@pytest.fixture
def ramp():
    return al.LinearSchedule(tau=50.0, beta_max=30.0, beta0=0.2, beta1=3.0)


def bounded_beta(rng, model, cap=3.0):
    """A test beta in [0, cap], shrunk when the instance's energy spread would
    make exp(beta*E/2) factors large enough to hurt the nonsymmetric
    eigensolver's accuracy."""
    spread = float(al.h0_diagonal(model).max())
    return float(rng.uniform(0.0, min(cap, 24.0 / max(spread, 1e-9))))
