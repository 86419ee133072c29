"""Dirac matrix algebra in the standard representation and its two-body
Kronecker embedding.

Conventions: metric diag(+1,-1,-1,-1), gamma^0 = beta, gamma_vec = beta*alpha_vec.
Particle 1 occupies the left tensor factor, particle 2 the right one.
"""

from __future__ import annotations

import numpy as np

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
I16 = np.eye(16, dtype=complex)

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def beta() -> np.ndarray:
    """beta = diag(1,1,-1,-1)."""
    return np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)


def alpha(i: int) -> np.ndarray:
    """alpha_i = [[0, sigma_i], [sigma_i, 0]], i in 1..3."""
    if i not in (1, 2, 3):
        raise IndexError(f"alpha index must be 1..3, got {i}")
    s = PAULI[i - 1]
    out = np.zeros((4, 4), dtype=complex)
    out[:2, 2:] = s
    out[2:, :2] = s
    return out


def gamma(mu: int) -> np.ndarray:
    """gamma^mu in the standard representation; gamma^0 = beta, gamma^i = beta alpha_i."""
    if mu == 0:
        return beta()
    if mu in (1, 2, 3):
        return beta() @ alpha(mu)
    raise IndexError(f"gamma index must be 0..3, got {mu}")


ALPHAS = np.stack([alpha(i) for i in (1, 2, 3)])
BETA = beta()
GAMMAS = np.stack([gamma(mu) for mu in range(4)])


def embed(m: np.ndarray, particle: int) -> np.ndarray:
    """Kronecker embedding of a one-body 4x4 matrix into the 16-dim spin space."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    if particle == 1:
        return np.kron(m, I4)
    if particle == 2:
        return np.kron(I4, m)
    raise ValueError(f"particle must be 1 or 2, got {particle}")


def alpha_dot(v) -> np.ndarray:
    """alpha_vec . v for a 3-vector v (4x4 result)."""
    v = np.asarray(v)
    return np.einsum("i,iab->ab", v, ALPHAS)
