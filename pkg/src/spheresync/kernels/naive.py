"""Brute-force reference evaluation of the signature-coupled drive.

Every ordered tuple of d-1 distinct partner indices is enumerated per node,
its permutation signature computed by inversion counting, and the dual built
from determinant minors.  Nothing is shared with the wedge-table backends,
which makes this the ground truth they are tested against.  Cost grows as
(N-1)!/(N-d)! per node, so keep N small.
"""

from functools import lru_cache
from itertools import permutations

import numpy as np

from ..geometry import hodge_dual_batch


def tuple_signature(indices) -> int:
    """Parity of the permutation sorting a tuple of distinct integers.

    Returns +1 or -1, or 0 when an index repeats (the coupling vanishes on
    those tuples).
    """
    seq = tuple(indices)
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(
        1 for p in range(len(seq)) for q in range(p + 1, len(seq)) if seq[p] > seq[q]
    )
    return -1 if inversions & 1 else 1


def _signatures(tuples: np.ndarray) -> np.ndarray:
    """Vectorized tuple_signature for an integer array of shape (B, k)."""
    b, k = tuples.shape
    inversions = np.zeros(b, dtype=np.intp)
    for p in range(k):
        for q in range(p + 1, k):
            inversions += tuples[:, p] > tuples[:, q]
    return 1 - 2 * (inversions & 1)


@lru_cache(maxsize=None)
def _partner_orderings(n_partners: int, length: int) -> np.ndarray:
    return np.array(list(permutations(range(n_partners), length)), dtype=np.intp)


def signature_sum_naive(config) -> np.ndarray:
    """Per-node sum of signature-weighted duals over all ordered tuples."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    slots = _partner_orderings(n - 1, d - 1)
    out = np.empty_like(x)
    for i in range(n):
        partners = np.delete(np.arange(n), i)
        tuples = partners[slots]
        lead = np.full((tuples.shape[0], 1), i, dtype=np.intp)
        signs = _signatures(np.hstack([lead, tuples]))
        duals = hodge_dual_batch(x[tuples])
        out[i] = signs @ duals
    return out


def dbody_drive_naive(config) -> np.ndarray:
    """Drive Y_i: the signature sum scaled by the mean-field factor N^{1-d}."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    return signature_sum_naive(x) / float(n) ** (d - 1)


def potential_dbody_naive(config) -> float:
    """Signed-volume potential by full enumeration over all d-index tuples.

    O(N^d) determinants; test-scale only.
    """
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    grids = np.meshgrid(*[np.arange(n)] * d, indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)
    signs = _signatures(tuples)
    live = signs != 0
    mats = x[tuples[live]]  # (B, d, d) rows are the tuple vectors
    dets = np.linalg.det(np.swapaxes(mats, 1, 2))
    return float(signs[live] @ dets)
