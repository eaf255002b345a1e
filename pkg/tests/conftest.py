import numpy as np


def random_rotation(d: int, seed) -> np.ndarray:
    """Haar-ish rotation via QR, determinant forced to +1."""
    rng = np.random.Generator(np.random.PCG64(seed))
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return q


def random_reflection(d: int, seed) -> np.ndarray:
    """Orthogonal matrix with determinant -1."""
    q = random_rotation(d, seed)
    q = q.copy()
    q[:, 0] = -q[:, 0]
    return q
