from pathlib import Path

import numpy as np
import pytest

from guessleak import Channel, JointSystem, Mechanism, ProbVector
from guessleak.fileio import load_system

REPO = Path(__file__).resolve().parents[1]
AGENCIES = REPO / "systems" / "agencies.system"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def agencies_path() -> Path:
    return AGENCIES


@pytest.fixture(scope="session")
def agencies(agencies_path):
    return load_system(str(agencies_path))


@pytest.fixture(scope="session")
def agencies_system(agencies):
    return agencies.system


def random_system(rng: np.random.Generator, n_w: int, n_x: int, n_y: int) -> JointSystem:
    """A dense random system; Dirichlet(1) columns keep full support a.s."""
    p_w = ProbVector(rng.dirichlet(np.ones(n_w)))
    p_xgw = Channel(rng.dirichlet(np.ones(n_x), size=n_w).T)
    p_ygw = Channel(rng.dirichlet(np.ones(n_y), size=n_w).T)
    return JointSystem(p_w, p_xgw, p_ygw)


def random_mechanism(rng: np.random.Generator, system: JointSystem, n_u: int) -> Mechanism:
    p_ugw = rng.dirichlet(np.ones(n_u), size=system.n_W).T
    return Mechanism.from_conditional(p_ugw, system.p_W)
