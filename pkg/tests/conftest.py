import os

import numpy as np
import pytest

from psatz.poly import AlgebraSpec, MatrixPoly
from psatz.quadratic_module import ConstraintSystem

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def line():
    return AlgebraSpec('poly', 1)


@pytest.fixture
def plane():
    return AlgebraSpec('poly', 2)


@pytest.fixture
def circle():
    return AlgebraSpec('torus', 1)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def scalar(algebra, coeffs):
    """Scalar polynomial from {exponents: coefficient}"""
    return MatrixPoly.scalar(algebra, coeffs)


@pytest.fixture
def interval(line):
    """S = {1 - x^2}"""
    return ConstraintSystem(line, 1, [scalar(line, {(0,): 1.0, (2,): -1.0})], ['interval'])


@pytest.fixture
def three_plus_x(line):
    return scalar(line, {(0,): 3.0, (1,): 1.0})
