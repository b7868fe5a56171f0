import numpy as np
import pytest

from graphonlab import rademacher_graphon, step_graphon


@pytest.fixture(scope="session")
def wr():
    return rademacher_graphon()


def random_step(rng: np.random.Generator, k: int, names=None):
    sizes = rng.dirichlet(np.ones(k) * 2)
    sizes[-1] = 1.0 - sizes[:-1].sum()
    m = rng.random((k, k))
    return step_graphon(sizes, (m + m.T) / 2, names)
