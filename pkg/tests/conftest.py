import json
import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

from nrep_adapt.fock import FockBasis, StateVector
from nrep_adapt.models import H4_FCIDUMP

ANNIHILATE_2x2 = np.array([[0.0, 1.0], [0.0, 0.0]])
PARITY_2x2 = np.diag([1.0, -1.0])


def dense_ladder(num_modes: int, mode: int, create: bool, fermionic: bool = True) -> np.ndarray:
    """Ladder operator on the full 2^m space by Kronecker products, mode 0 least significant."""
    factors = []
    for k in reversed(range(num_modes)):
        if k == mode:
            factors.append(ANNIHILATE_2x2.T if create else ANNIHILATE_2x2)
        elif k < mode and fermionic:
            factors.append(PARITY_2x2)
        else:
            factors.append(np.eye(2))
    return reduce(np.kron, factors)


def dense_on_basis(full: np.ndarray, basis: FockBasis) -> np.ndarray:
    return full[np.ix_(basis.states, basis.states)]


def random_state(basis: FockBasis, seed: int = 0, real: bool = False) -> StateVector:
    rng = np.random.default_rng(seed)
    amplitudes = rng.normal(size=basis.dim)
    if not real:
        amplitudes = amplitudes + 1j * rng.normal(size=basis.dim)
    return StateVector(basis, amplitudes).normalized()


@pytest.fixture(autouse=True)
def reset_logger():
    """The CLI rebinds loguru to the captured stdout; restore a plain stderr sink afterwards."""
    yield
    logger.remove()
    logger.add(sys.stderr, level="WARNING")


@pytest.fixture(scope="session")
def h4_fcidump() -> Path:
    """The shipped linear H4/STO-3G integrals."""
    return H4_FCIDUMP


@pytest.fixture(scope="session")
def h4_reference(h4_fcidump) -> dict:
    return json.loads(h4_fcidump.with_suffix(".json").read_text())
