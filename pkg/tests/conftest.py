import numpy as np
import pytest

from rrcvrp.core import Instance


@pytest.fixture
def tiny_instance():
    """depot (0,0), c1 (0,1), c2 (1,0), unit demands, Q=2."""
    return Instance(
        name="tiny",
        depot=(0.0, 0.0),
        customers=np.array([[0.0, 1.0], [1.0, 0.0]]),
        demands=np.array([1.0, 1.0]),
        capacity=2.0,
    )


@pytest.fixture
def triangle_instance():
    """depot (0,0), c1 (3,4): the 3-4-5 case plus two unit-square points."""
    return Instance(
        name="triangle",
        depot=(0.0, 0.0),
        customers=np.array([[3.0, 4.0], [1.0, 0.0], [0.0, 1.0]]),
        demands=np.array([1.0, 1.0, 1.0]),
        capacity=10.0,
    )
