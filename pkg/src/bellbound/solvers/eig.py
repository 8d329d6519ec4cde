import numpy as np


class NotHermitian(ValueError):
    pass


def eig_hermitian(M, atol=1e-10):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotHermitian("matrix is not square")
    scale = max(1.0, float(np.abs(M).max()) if M.size else 1.0)
    if np.abs(M - M.conj().T).max(initial=0.0) > atol * scale:
        raise NotHermitian("matrix is not Hermitian")
    return np.linalg.eigh((M + M.conj().T) / 2)
