"""Timing the d-body kernel: compiled vs pure NumPy vs direct enumeration.

The direct enumerator visits every ordered (d-1)-tuple of partners per
node, so its cost grows like n * (n-1)! / (n-d)!. At d = 5, n = 40 that
is ~3.3e9 tuples; instead of waiting for it we time it at a small n and
extrapolate by the exact tuple-count ratio.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np

from . import kernels
from .geometry import random_unit_configuration


def tuple_count(d: int, n: int) -> int:
    """Ordered partner tuples the direct enumerator must visit."""
    return n * math.perm(n - 1, d - 1)


def _best_time(func, arg, repeats: int, min_time: float = 1e-4) -> float:
    """Best-of-``repeats`` wall time; fast calls are looped to beat timer noise."""
    best = math.inf
    for _ in range(repeats):
        loops = 1
        while True:
            start = time.perf_counter()
            for _ in range(loops):
                func(arg)
            elapsed = time.perf_counter() - start
            if elapsed >= min_time or loops >= 1 << 16:
                break
            loops *= 4
        best = min(best, elapsed / loops)
    return best


def run_benchmark(
    d: int = 5,
    n: int = 40,
    naive_n: int = 10,
    repeats: int = 5,
    seed: int = 0,
) -> dict:
    """Time all three kernel routes on one random configuration.

    The compiled and pure backends run at the full size; the enumerator
    runs at ``naive_n`` and its full-size cost is extrapolated from the
    tuple-count ratio (its per-tuple work is size-independent).
    """
    if naive_n < d:
        raise ValueError(f"naive_n must be at least d={d}")
    config = random_unit_configuration(d, n, seed)
    small = config[:naive_n]

    t_pure = _best_time(kernels.signature_sum_pure, config, repeats)
    t_compiled = None
    if kernels.COMPILED_AVAILABLE:
        t_compiled = _best_time(kernels.signature_sum_compiled, config, repeats)
    t_fast = t_compiled if t_compiled is not None else t_pure

    t_naive_small = _best_time(kernels.signature_sum_naive, small, repeats)
    scale = tuple_count(d, n) / tuple_count(d, naive_n)
    t_naive_full = t_naive_small * scale

    report = {
        "d": d,
        "n": n,
        "backend": kernels.BACKEND,
        "compiled_available": kernels.COMPILED_AVAILABLE,
        "time_pure_s": t_pure,
        "time_compiled_s": t_compiled,
        "time_fast_s": t_fast,
        "naive_n": naive_n,
        "time_naive_small_s": t_naive_small,
        "tuple_count_full": tuple_count(d, n),
        "tuple_count_small": tuple_count(d, naive_n),
        "time_naive_extrapolated_s": t_naive_full,
        "speedup_fast_vs_naive": t_naive_full / t_fast,
        "speedup_compiled_vs_pure": (
            t_pure / t_compiled if t_compiled is not None else None
        ),
    }
    return report


def format_report(report: dict) -> str:
    lines = [
        f"d-body kernel benchmark  d={report['d']} n={report['n']}  "
        f"(backend in use: {report['backend']})",
        f"  pure NumPy wedge scan : {report['time_pure_s'] * 1e3:10.3f} ms",
    ]
    if report["time_compiled_s"] is not None:
        lines.append(
            f"  compiled wedge scan   : {report['time_compiled_s'] * 1e3:10.3f} ms"
            f"   ({report['speedup_compiled_vs_pure']:.1f}x over pure)"
        )
    else:
        lines.append("  compiled wedge scan   : not built")
    lines.append(
        f"  direct enumeration    : {report['time_naive_small_s'] * 1e3:10.3f} ms at "
        f"n={report['naive_n']}, extrapolated "
        f"{report['time_naive_extrapolated_s']:.3g} s at n={report['n']} "
        f"({report['tuple_count_full']:,} tuples)"
    )
    lines.append(
        f"  fast vs enumeration   : {report['speedup_fast_vs_naive']:.0f}x"
    )
    return "\n".join(lines)


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
