from fractions import Fraction as F

import pytest

from martlab.prob import Partition, SampleSpace
from martlab.models import binary_tree_space, random_walk


@pytest.fixture
def uniform4():
    """Four equally likely outcomes a, b, c, d."""
    return SampleSpace.uniform(["a", "b", "c", "d"])


@pytest.fixture
def pair_partition(uniform4):
    return Partition([[0, 1], [2, 3]], uniform4.size)


@pytest.fixture
def two_flip():
    """Depth-2 fair coin tree: outcomes uu, ud, du, dd."""
    return binary_tree_space(2, F(1, 2))


@pytest.fixture
def walk2(two_flip):
    """The +-1 symmetric walk on the two-flip tree."""
    space, filtration = two_flip
    return random_walk(space, filtration, F(1, 2), 2)


@pytest.fixture
def walk3():
    space, filtration = binary_tree_space(3, F(1, 2))
    return random_walk(space, filtration, F(1, 2), 2)
