import numpy as np
import pytest

from spinbench.model import IsingModel


@pytest.fixture
def triangle_model() -> IsingModel:
    """Three-spin instance on K3: H = s1 - s2 + 1.5 s3 + s1 s2 + 0.5 s1 s3 - 0.75 s2 s3."""
    return IsingModel(
        num_spins=3,
        couplings={(1, 2): 1.0, (1, 3): 0.5, (2, 3): -0.75},
        fields={1: 1.0, 2: -1.0, 3: 1.5},
    )


def random_model(n: int, seed: int, edge_prob: float = 0.5,
                 with_fields: bool = True) -> IsingModel:
    rng = np.random.default_rng(seed)
    couplings = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < edge_prob:
                couplings[(i, j)] = float(rng.uniform(-1, 1))
    fields = {}
    if with_fields:
        fields = {i: float(rng.uniform(-1, 1)) for i in range(1, n + 1)}
    return IsingModel(n, couplings, fields)
