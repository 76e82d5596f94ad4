import numpy as np
import pytest

from nfwave import ArrayConfig, build_grid, build_steering_context
from nfwave.solver import init_waveform


def random_waveform(n, m, seed):
    return init_waveform(n, m, seed)


def commutation_dense(rows, cols):
    """Dense permutation with vec(V.T) = P @ vec(V) for V of shape (rows, cols)."""
    p = np.zeros((rows * cols, rows * cols))
    for r in range(rows):
        for c in range(cols):
            p[c + cols * r, r + rows * c] = 1.0
    return p


def dense_cell_matrix(alpha, fu, n, m):
    """Dense per-cell beampattern matrix from its Kronecker/commutation factorization."""
    perm = commutation_dense(n, m)
    left = np.kron(alpha[:, None], np.eye(n)) @ np.conj(fu)[:, None]  # (NM, 1)
    right = (alpha.conj()[None, :] @ np.kron(fu[None, :], np.eye(m))) @ perm  # (1, NM)
    return left @ right


@pytest.fixture(scope="session")
def tiny_context():
    """N=2, M=2, K1=K2=2 steering context for dense-oracle tests."""
    cfg = ArrayConfig(2, 2, 1.0e9, 2.0e8)
    grid = build_grid(2, 2, 2)
    return build_steering_context(cfg, grid)


@pytest.fixture(scope="session")
def small_context():
    """N=4, M=2, K1=K2=2 context used by the quartic-identity tests."""
    cfg = ArrayConfig(2, 4, 1.0e9, 2.0e8)
    grid = build_grid(2, 2, 4)
    return build_steering_context(cfg, grid)
