"""Pure NumPy backend for the signature-coupled drive.

Same prefix/suffix elementary-wedge recursion as the compiled extension,
driven by the shared tables from ``wedge_basis``.  The sequential scans cost
O(N) small vector updates; the per-node combination is vectorized across
nodes.  Roughly two orders of magnitude slower than the compiled kernel but
always available.
"""

import numpy as np

from .wedge_basis import WedgePlan, wedge_plan


def elementary_wedge_tables(config, plan: WedgePlan | None = None):
    """Prefix and suffix accumulators of elementary wedge sums.

    Row i of the prefix table holds, per degree k, the sum of wedge products
    over all k-subsets of nodes 0..i-1; suffix row i covers nodes i..N-1.
    Degree 0 is the constant 1.  Returned as two (N+1, L) flat arrays.
    """
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if plan is None:
        plan = wedge_plan(x.shape[1])
    length = plan.length
    prefix = np.zeros((n + 1, length))
    suffix = np.zeros((n + 1, length))
    prefix[0, 0] = 1.0
    suffix[n, 0] = 1.0
    for i in range(n):
        grow = plan.pre_sign * prefix[i, plan.pre_in] * x[i, plan.pre_axis]
        prefix[i + 1] = prefix[i] + np.bincount(plan.pre_out, weights=grow, minlength=length)
    for i in range(n - 1, -1, -1):
        grow = plan.suf_sign * suffix[i + 1, plan.suf_in] * x[i, plan.suf_axis]
        suffix[i] = suffix[i + 1] + np.bincount(plan.suf_out, weights=grow, minlength=length)
    return prefix, suffix


def signature_sum(config) -> np.ndarray:
    """Per-node signature-weighted dual sum via the wedge recursion."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    plan = wedge_plan(d)
    prefix, suffix = elementary_wedge_tables(x, plan)
    before = prefix[:n]
    after = suffix[1:]
    out = np.zeros((n, d))
    for p, q, component, coef in zip(
        plan.comb_p, plan.comb_q, plan.comb_component, plan.comb_coef
    ):
        out[:, component] += coef * before[:, p] * after[:, q]
    out *= plan.scale
    return out
