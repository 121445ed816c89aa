"""
Shared fixtures: the gallery gadgets and seeded random gadgets
"""

import os

import numpy as np
import pytest

from utils.gallery import EXPECTED, g0, g1, g2, g3, g4, random_gadget

GALLERY_DIR = os.path.join(os.path.dirname(__file__), "gallery")


@pytest.fixture
def gallery_dir():
    return GALLERY_DIR


@pytest.fixture(params=sorted(EXPECTED))
def gallery_case(request):
    """(name, graph, expected) for every hand-derived gadget"""
    expected = EXPECTED[request.param]
    return request.param, expected.build(), expected


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_graphs():
    """A fixed batch of small random Hermitian gadgets"""
    rng = np.random.default_rng(12345)
    graphs = []
    for index in range(12):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(0, 5))
        graphs.append(random_gadget(rng, n, m, name=f"batch_{index}"))
    return graphs


@pytest.fixture
def builders():
    return {"g0": g0, "g1": g1, "g2": g2, "g3": g3, "g4": g4}
