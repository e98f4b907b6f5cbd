import os
import sys

import numpy as np
import pytest

# the scripts import their siblings by name
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'src'))

import fock  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_state(rng):
    '''
    Factory of normalized random states over one sector
    '''
    def make(mode_count, total):
        basis = fock.enumerate_basis(mode_count, total)
        amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        return fock.PureState(basis, amps / np.linalg.norm(amps))
    return make
