import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from matchfair import PreferenceProfile

# The worked 5x5 instance: men-optimal (2,3,1,4,5), women-optimal (4,2,5,3,1),
# a 6-element lattice with three rotations. 0-based throughout.
EX5_MEN = [
    [1, 3, 4, 0, 2],
    [2, 1, 3, 0, 4],
    [0, 4, 3, 2, 1],
    [3, 1, 2, 0, 4],
    [1, 2, 4, 0, 3],
]
EX5_WOMEN = [
    [3, 1, 0, 4, 2],
    [1, 3, 0, 4, 2],
    [3, 1, 0, 2, 4],
    [1, 0, 3, 4, 2],
    [0, 3, 1, 2, 4],
]

EX5_MU_M = (1, 2, 0, 3, 4)   # (w2, w3, w1, w4, w5)
EX5_MU_W = (3, 1, 4, 2, 0)   # (w4, w2, w5, w3, w1)
EX5_LATTICE = {
    (1, 2, 0, 3, 4),
    (3, 2, 0, 1, 4),
    (1, 2, 4, 3, 0),
    (3, 1, 0, 2, 4),
    (3, 2, 4, 1, 0),
    (3, 1, 4, 2, 0),
}
EX5_RHO1 = ((0, 1), (3, 3))  # (m1,w2)(m4,w4)
EX5_RHO2 = ((1, 2), (3, 1))  # (m2,w3)(m4,w2)
EX5_RHO3 = ((2, 0), (4, 4))  # (m3,w1)(m5,w5)


def mutual_first_profile(n):
    """Cyclic lists aligned so every (m_k, w_k) pair are mutual first choices:
    the one-matching market where everyone gets rank 1."""
    men = [[(m + j) % n for j in range(n)] for m in range(n)]
    women = [[(w + j) % n for j in range(n)] for w in range(n)]
    return PreferenceProfile(men, women)


def latin_square_profile(n):
    """Cyclic men, reverse-cyclic women: the classic many-stable-matchings family."""
    men = [[(m + j) % n for j in range(n)] for m in range(n)]
    women = [[(w - j) % n for j in range(n)] for w in range(n)]
    return PreferenceProfile(men, women)


@pytest.fixture
def ex5():
    return PreferenceProfile(EX5_MEN, EX5_WOMEN)


@pytest.fixture
def identity5():
    return PreferenceProfile.identity(5)
