import numpy as np
import pytest

from qdilate.optuple import OperatorTuple, generate_clock_shift, nilpotent_pair
from qdilate.qword import QSpec

NIL = np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.fixture
def nil_pair():
    return nilpotent_pair()


@pytest.fixture
def clock_shift():
    return generate_clock_shift(3, (0.6, 0.8))


def single(mat):
    return OperatorTuple([mat], QSpec(1))


def zero_tuple(d, k):
    return OperatorTuple([np.zeros((d, d))] * k, QSpec(k))
