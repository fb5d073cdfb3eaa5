import numpy as np
import pytest

from geometry_runtime import AffineMap
from tfc_corpus import CorpusLoader
from tfc_main_app import FormCompiler


@pytest.fixture
def corpus():
    return CorpusLoader()


@pytest.fixture
def compiler():
    return FormCompiler()


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def random_cells(rng):
    """Factory of seeded, well-shaped affine cells, half of them orientation-reversing"""
    def make(dimension, count):
        cells = []
        for _ in range(count):
            base = np.vstack([np.zeros(dimension), np.eye(dimension)])
            vertices = base + rng.uniform(-0.1, 0.1, size=base.shape)
            vertices = vertices * rng.uniform(0.5, 2.0) + rng.uniform(-1.0, 1.0, size=dimension)
            if rng.random() < 0.5:
                vertices[[1, 2]] = vertices[[2, 1]]
            cells.append(AffineMap(vertices))
        return cells
    return make
