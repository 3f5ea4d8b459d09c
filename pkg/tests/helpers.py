"""Random matrices with prescribed spectra for oracle comparisons."""
import numpy as np


def random_symmetric_with_spectrum(eigs, rng):
    """Q diag(eigs) Q^T for a random orthogonal Q."""
    d = len(eigs)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    return q @ np.diag(eigs) @ q.T


def random_with_singular_values(s, rng):
    d = len(s)
    u, _ = np.linalg.qr(rng.standard_normal((d, d)))
    v, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return u @ np.diag(s) @ v.T
