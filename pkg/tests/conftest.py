import json
import math

import numpy as np
import pytest

import kernels
import toric_models


@pytest.fixture
def cp1():
    return toric_models.build_model([1])


@pytest.fixture
def augmented():
    """CP^1 with a = 1 plus one constant Hamiltonian c = 1."""
    return toric_models.build_model([1], [1])


@pytest.fixture
def cp1xcp1():
    return toric_models.build_model([1, 2])


@pytest.fixture
def augmented_beta():
    b = np.array([1.5, 1.0])
    return b / np.linalg.norm(b)


@pytest.fixture
def gaussian2():
    return kernels.gaussian_cutoff(0.5, 2)


@pytest.fixture
def scenario_doc():
    def make(**overrides):
        doc = {
            'model': {'shifts': [1], 'constants': [1]},
            'beta': [1.5, 1],
            's0': [0, 0],
            'cutoff': {'kind': 'gaussian', 'sigma': 0.5},
            'lambda_grid': {'min': 1000, 'max': 100000, 'points_per_decade': 12},
            'points': [[0.5]],
            'checks': [],
            'tol': 1e-10,
            'seed': 0,
        }
        doc.update(overrides)
        return doc
    return make


@pytest.fixture
def write_scenario(tmp_path):
    def write(doc, name='scenario.json'):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding='utf-8')
        return str(path)
    return write


@pytest.fixture
def norm_phi_half():
    """|Phi| at s = 1/2 on the augmented model."""
    return math.sqrt(13) / 2
