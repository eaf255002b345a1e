"""Interaction kernels: pairwise mean field and the d-body signature drive.

At import a compiled wedge backend is preferred and a pure NumPy one is the
fallback; ``BACKEND`` records the choice.  Set SPHERESYNC_BACKEND=pure (or
compiled) to force one side, e.g. when benchmarking.
"""

import os
from itertools import combinations
from math import factorial

import numpy as np

from . import naive, pure
from .wedge_basis import wedge_plan

try:
    from . import _fastwedge
except ImportError:
    _fastwedge = None

_requested = os.environ.get("SPHERESYNC_BACKEND", "").strip().lower()
if _requested not in ("", "pure", "compiled"):
    raise ImportError(f"SPHERESYNC_BACKEND must be 'pure' or 'compiled', got {_requested!r}")
if _requested == "compiled" and _fastwedge is None:
    raise ImportError("SPHERESYNC_BACKEND=compiled but the extension is not built")
if _requested == "pure":
    BACKEND = "pure"
else:
    BACKEND = "compiled" if _fastwedge is not None else "pure"

COMPILED_AVAILABLE = _fastwedge is not None


def signature_sum_compiled(config) -> np.ndarray:
    """Signature-weighted dual sums via the compiled wedge kernel."""
    if _fastwedge is None:
        raise RuntimeError("compiled kernel backend is not available")
    x = np.ascontiguousarray(config, dtype=float)
    plan = wedge_plan(x.shape[1])
    return _fastwedge.signature_sum(
        x,
        plan.length,
        plan.pre_in, plan.pre_axis, plan.pre_out, plan.pre_sign,
        plan.suf_in, plan.suf_axis, plan.suf_out, plan.suf_sign,
        plan.comb_p, plan.comb_q, plan.comb_component, plan.comb_coef,
        plan.scale,
    )


signature_sum_pure = pure.signature_sum
signature_sum_naive = naive.signature_sum_naive
dbody_drive_naive = naive.dbody_drive_naive


def signature_sum(config, backend: str | None = None) -> np.ndarray:
    """Per-node sum over ordered partner tuples of signature-weighted duals.

    This is the raw steady-state quantity entering the lambda relations;
    divide by N^{d-1} for the drive.
    """
    choice = backend or BACKEND
    if choice == "compiled":
        return signature_sum_compiled(config)
    if choice == "pure":
        return signature_sum_pure(config)
    raise ValueError(f"unknown backend {choice!r}")


def dbody_drive_fast(config, backend: str | None = None) -> np.ndarray:
    """Drive Y_i = (signature sum)_i / N^{d-1} via the wedge recursion."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    return signature_sum(x, backend=backend) / float(n) ** (d - 1)


def pairwise_drive(config) -> np.ndarray:
    """Mean-field drive of the all-to-all pairwise coupling: the centroid."""
    x = np.asarray(config, dtype=float)
    return np.broadcast_to(x.mean(axis=0), x.shape)


def potential_pairwise(config, coupling: str = "global") -> float:
    """Sum of all pairwise dot products, self terms included.

    Only the global (all ones) coupling matrix is supported; the sum then
    collapses to |sum_i x_i|^2.
    """
    if coupling != "global":
        raise ValueError(f"only the global coupling is supported, got {coupling!r}")
    x = np.asarray(config, dtype=float)
    total = x.sum(axis=0)
    return float(total @ total)


def potential_dbody(config) -> float:
    """Signed-volume potential: sum over all d-index tuples of signature
    times determinant.

    Evaluated as d! times the sum over sorted index combinations, each an
    ordinary determinant; no unit-norm assumption, so finite differencing
    through it is legitimate.
    """
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    if n < d:
        return 0.0
    picks = np.array(list(combinations(range(n), d)), dtype=np.intp)
    mats = np.swapaxes(x[picks], 1, 2)  # tuple vectors as columns
    return float(factorial(d) * np.linalg.det(mats).sum())


def potential_dbody_from_sum(config, sig_sum=None) -> float:
    """Same potential through the kernel identity sum_i x_i . S_i."""
    x = np.asarray(config, dtype=float)
    if sig_sum is None:
        sig_sum = signature_sum(x)
    return float(np.sum(x * sig_sum))
