import numpy as np
import pytest

from pdcf import PDParams, RatingScale, RatingsMatrix, UserProfile

# Shared toy fixture: 3 users x 4 titles on the 0..5 scale. Chosen so the
# active profile below agrees strongly with user 0, weakly with user 2,
# and disagrees with user 1.
TOY_ENTRIES = {
    (0, 0): 4.0, (0, 1): 2.0, (0, 3): 5.0,
    (1, 0): 1.0, (1, 2): 3.0, (1, 3): 0.0,
    (2, 1): 2.0, (2, 2): 4.0,
}
TOY_ACTIVE = {0: 4.0, 2: 3.0}


@pytest.fixture
def scale05():
    return RatingScale.integer(0, 5)


@pytest.fixture
def toy_matrix(scale05):
    return RatingsMatrix(
        3, 4, [(i, j, v) for (i, j), v in TOY_ENTRIES.items()], scale05
    )


@pytest.fixture
def toy_active():
    return UserProfile(TOY_ACTIVE)


@pytest.fixture
def toy_params():
    return PDParams(1.0)


def random_instance(rng, n_max=6, m_max=6, scale=None, sigma_choices=(0.5, 1.0, 2.5)):
    """A random matrix / profile / params triple for property tests."""
    scale = scale or RatingScale.integer(0, 5)
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    vals = scale.array
    entries = []
    for i in range(n):
        for j in range(m):
            if rng.random() < 0.55:
                entries.append((i, j, float(vals[rng.integers(len(vals))])))
    matrix = RatingsMatrix(n, m, entries, scale)
    active = {
        j: float(vals[rng.integers(len(vals))])
        for j in range(m)
        if rng.random() < 0.5
    }
    sigma = float(sigma_choices[rng.integers(len(sigma_choices))])
    return matrix, UserProfile(active), PDParams(sigma)
