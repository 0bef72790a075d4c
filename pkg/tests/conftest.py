import numpy as np
import pytest

from toda_tri.operator import TriangularOperator, random_operator

SHAPES = [(3, 1), (5, 1), (5, 2), (7, 1), (7, 2)]


@pytest.fixture
def trivial():
    return TriangularOperator(3, 1, np.ones((3, 1)))


def operators(count, shapes=SHAPES, seed=0, **kw):
    return [random_operator(*shapes[t % len(shapes)], [seed, t], **kw) for t in range(count)]


def dense_operator(L, N, bands=None):
    """``L`` acting on N-periodic sequences (N a multiple of n) as a dense matrix."""
    M = np.zeros((N, N), dtype=complex)
    for i in range(N):
        M[i, (i - L.k - 1) % N] += 1.0
        for j in range(1, L.k + 1):
            M[i, (i - j) % N] += L.coef(i, j)
    return M
