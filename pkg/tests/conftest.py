import pytest

from loctimes import Atom, DensityPiece, WeightedMeasure


@pytest.fixture
def delta0():
    return WeightedMeasure((Atom(0.0, 1.0),), ())


@pytest.fixture
def two_delta0():
    return WeightedMeasure((Atom(0.0, 2.0),), ())


@pytest.fixture
def uniform01():
    return WeightedMeasure((), (DensityPiece(0.0, 1.0, 1.0),))


@pytest.fixture
def mixed(delta0, uniform01):
    return delta0 + uniform01
