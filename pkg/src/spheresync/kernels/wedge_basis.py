"""Index tables for the prefix/suffix elementary-wedge evaluation of the
signature-coupled drive.

The drive on node i is an antisymmetric sum of duals of (d-1)-fold wedge
products of the other node vectors.  Both the compiled and the pure NumPy
backend walk the same flat tables built here, so a single construction is
shared and cross-checked once.

Basis convention: the exterior power Lambda^k(R^d) is spanned by e_S for the
k-element subsets S of {0..d-1}, listed in lexicographic order.  A multivector
of mixed degree 0..d-1 is stored as one flat coefficient vector; block k
starts at ``offsets[k]``.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb, factorial

import numpy as np


def subset_basis(d: int, k: int) -> list[tuple[int, ...]]:
    """The k-subsets of {0..d-1} in lexicographic order."""
    return list(combinations(range(d), k))


def merge_parity(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    """Sign picked up when e_left ^ e_right is reordered to e_{left | right}.

    Both inputs are strictly increasing and disjoint.  The sign counts the
    transpositions moving each right element past the larger left elements,
    so it is (-1)**#{(a, b) in left x right : a > b}.
    """
    crossings = sum(1 for a in left for b in right if a > b)
    return -1 if crossings & 1 else 1


@dataclass(frozen=True)
class WedgePlan:
    """Flat update tables for one ambient dimension d.

    prefix rule   P[i+1][pre_out] += pre_sign * P[i][pre_in] * x_i[pre_axis]
    suffix rule   Q[i][suf_out]   += suf_sign * Q[i+1][suf_in] * x_i[suf_axis]
    combine rule  out[i][comb_component] += comb_coef * P[i][comb_p] * Q[i+1][comb_q]

    The combine table already folds in the alternating prefix-cardinality
    sign and the dual-pairing sign, so its output is a plain d-vector.
    ``scale`` is (d-1)!, the number of orderings collapsed per sorted tuple.
    """

    d: int
    length: int
    offsets: tuple[int, ...]
    pre_in: np.ndarray
    pre_axis: np.ndarray
    pre_out: np.ndarray
    pre_sign: np.ndarray
    suf_in: np.ndarray
    suf_axis: np.ndarray
    suf_out: np.ndarray
    suf_sign: np.ndarray
    comb_p: np.ndarray
    comb_q: np.ndarray
    comb_component: np.ndarray
    comb_coef: np.ndarray
    scale: float


def _int_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int32)


@lru_cache(maxsize=None)
def wedge_plan(d: int) -> WedgePlan:
    if d < 2:
        raise ValueError(f"ambient dimension must be at least 2, got {d}")

    offsets = []
    total = 0
    index = {}
    for k in range(d):
        offsets.append(total)
        for pos, subset in enumerate(subset_basis(d, k)):
            index[subset] = total + pos
        total += comb(d, k)

    pre_in, pre_axis, pre_out, pre_sign = [], [], [], []
    suf_in, suf_axis, suf_out, suf_sign = [], [], [], []
    for k in range(1, d):
        for subset in subset_basis(d, k - 1):
            for m in range(d):
                if m in subset:
                    continue
                target = tuple(sorted(subset + (m,)))
                # e_subset ^ e_m: move m left past the larger entries.
                above = sum(1 for s in subset if s > m)
                pre_in.append(index[subset])
                pre_axis.append(m)
                pre_out.append(index[target])
                pre_sign.append(-1.0 if above & 1 else 1.0)
                # e_m ^ e_subset: move m right past the smaller entries.
                below = sum(1 for s in subset if s < m)
                suf_in.append(index[subset])
                suf_axis.append(m)
                suf_out.append(index[target])
                suf_sign.append(-1.0 if below & 1 else 1.0)

    comb_p, comb_q, comb_component, comb_coef = [], [], [], []
    for a in range(d):
        b = d - 1 - a
        prefix_sign = -1.0 if a & 1 else 1.0
        for left in subset_basis(d, a):
            left_set = set(left)
            for right in subset_basis(d, b):
                if left_set & set(right):
                    continue
                union = tuple(sorted(left + right))
                missing = next(m for m in range(d) if m not in union)
                # Dual pairing of the top-degree basis element that omits
                # axis m contributes e_m with sign (-1)**m.
                dual_sign = -1.0 if missing & 1 else 1.0
                comb_p.append(index[left])
                comb_q.append(index[right])
                comb_component.append(missing)
                comb_coef.append(prefix_sign * merge_parity(left, right) * dual_sign)

    return WedgePlan(
        d=d,
        length=total,
        offsets=tuple(offsets),
        pre_in=_int_array(pre_in),
        pre_axis=_int_array(pre_axis),
        pre_out=_int_array(pre_out),
        pre_sign=np.asarray(pre_sign),
        suf_in=_int_array(suf_in),
        suf_axis=_int_array(suf_axis),
        suf_out=_int_array(suf_out),
        suf_sign=np.asarray(suf_sign),
        comb_p=_int_array(comb_p),
        comb_q=_int_array(comb_q),
        comb_component=_int_array(comb_component),
        comb_coef=np.asarray(comb_coef),
        scale=float(factorial(d - 1)),
    )
