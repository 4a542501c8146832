"""Pauli matrices, ladder combinations and 2-D rotations.

Convention: sigma_plus = (sigma1 + i sigma2)/2 has its single 1 in the
upper-right corner, i.e. it maps the second basis vector onto the first.
"""

import numpy as np

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)

PAULI = (SIGMA0, SIGMA1, SIGMA2, SIGMA3)


def rotation(theta: float) -> np.ndarray:
    """2x2 rotation matrix acting on plane vectors."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def pauli_decompose(m: np.ndarray) -> np.ndarray:
    """Coefficients (h0, h1, h2, h3) with m = sum h_j sigma_j (m 2x2)."""
    return np.array([np.trace(p @ m) / 2.0 for p in PAULI])


def pauli_exp(h: np.ndarray, t: float | complex = 1.0) -> np.ndarray:
    """exp(-i t (h0 + h.sigma)) for stacked coefficient arrays.

    h has shape (..., 4) real; returns (..., 2, 2) complex.  Uses the
    closed form exp(-i t n.sigma) = cos(t|n|) I - i sin(t|n|) n.sigma/|n|.
    """
    h = np.asarray(h, dtype=float)
    h0 = h[..., 0]
    n = h[..., 1:]
    r = np.sqrt(np.sum(n * n, axis=-1))
    # sinc handles r -> 0 without branching
    c = np.cos(t * r)
    s = t * np.sinc(t * r / np.pi)  # sin(t r)/r
    out = np.zeros(h.shape[:-1] + (2, 2), dtype=complex)
    phase = np.exp(-1j * t * h0)
    out[..., 0, 0] = c - 1j * s * n[..., 2]
    out[..., 1, 1] = c + 1j * s * n[..., 2]
    out[..., 0, 1] = -1j * s * (n[..., 0] - 1j * n[..., 1])
    out[..., 1, 0] = -1j * s * (n[..., 0] + 1j * n[..., 1])
    return out * phase[..., None, None]
