"""Closed reduction of the three-node pure triple-interaction flow on S^2.

With zero frequencies the nine-dimensional three-node system collapses onto
two scalars: one pairwise overlap u = x_1 . x_2 and the signed volume
w = x_1 . (x_2 x x_3).  The other overlaps stay proportional to u with
constants c_1, c_2 fixed by the initial data, the volume squared equals a
cubic p(u), and the order of elimination leaves

    du/dt = -4 u w,        dw/dt = -2 u p'(u).

The volume is non-decreasing along the flow and u runs monotonically into
the appropriate root of p.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, isfinite

import numpy as np
from scipy.optimize import brentq

from .dynamics import ModelParams, simulate
from .geometry import as_configuration

CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class ReducedInvariants:
    """Initial overlap ratios and starting point of the reduced flow."""

    c1: float
    c2: float
    u0: float
    volume0: float


def constants_from_initial(x1, x2, x3) -> ReducedInvariants:
    """Extract (c1, c2, u0, w0) from three unit vectors.

    c1 and c2 are the ratios of the other two overlaps to u0; they are
    conserved.  A vanishing u0 makes the ratios undefined: if all overlaps
    vanish the triple already sits at the orthogonal steady state, otherwise
    relabel the nodes so the reference pair has nonzero overlap.
    """
    config = as_configuration(np.stack([x1, x2, x3]), d=3)
    a, b, c = config
    u0 = float(a @ b)
    x13 = float(a @ c)
    x23 = float(b @ c)
    if abs(u0) < 1e-12:
        if abs(x13) < 1e-12 and abs(x23) < 1e-12:
            raise ValueError(
                "all pairwise overlaps vanish: already at the orthogonal steady state"
            )
        raise ValueError(
            "x1 . x2 vanishes but other overlaps do not: relabel the nodes so the "
            "reference pair has nonzero overlap"
        )
    volume0 = float(a @ np.cross(b, c))
    return ReducedInvariants(c1=x23 / u0, c2=x13 / u0, u0=u0, volume0=volume0)


def cubic_p(u, c1: float, c2: float):
    """The cubic constraining the volume: w^2 = p(u)."""
    u = np.asarray(u, dtype=float)
    return 1.0 - (1.0 + c1 * c1 + c2 * c2) * u**2 + 2.0 * c1 * c2 * u**3


def cubic_p_prime(u, c1: float, c2: float):
    u = np.asarray(u, dtype=float)
    return -2.0 * (1.0 + c1 * c1 + c2 * c2) * u + 6.0 * c1 * c2 * u**2


def potential_v(u, c1: float, c2: float):
    """Effective potential 8 u^2 p(u); the overlap obeys (du/dt)^2 = 2 V."""
    u = np.asarray(u, dtype=float)
    return 8.0 * u**2 * cubic_p(u, c1, c2)


@dataclass(frozen=True)
class CubicRoots:
    """Roots of p: one in [-1, 0), one in (0, 1], and the spectator root
    outside [-1, 1] (infinite when the cubic degenerates to a quadratic)."""

    r_minus: float
    r_plus: float
    r_third: float


def _first_crossing(p, direction: float) -> float:
    """Smallest-magnitude zero of p between 0 and direction (+1 or -1).

    p(0) = 1 while p at either endpoint is nonpositive by algebra, so a
    crossing exists.  Walking a fixed grid outward from 0 and bisecting in
    the first nonpositive cell finds the crossing nearest the origin even
    when p returns to zero again at the endpoint (which happens whenever
    c1 = +/- c2).  If no interior cell goes nonpositive the endpoint value
    itself is a roundoff-level zero and the root sits there.
    """
    grid = np.linspace(0.0, direction, 513)
    for a, b in zip(grid[:-1], grid[1:]):
        pb = p(b)
        if pb <= 0.0:
            if pb == 0.0:
                return float(b)
            return float(brentq(p, min(a, b), max(a, b), xtol=1e-12))
    return float(direction)


def cubic_roots(c1: float, c2: float) -> CubicRoots:
    """Bracketed roots of p(u) on [-1, 1].

    r_minus and r_plus are the sign changes of p nearest the origin on
    either side; they bound the region the overlap can visit.
    """

    def p(u):
        return float(cubic_p(u, c1, c2))

    r_plus = _first_crossing(p, 1.0)
    r_minus = _first_crossing(p, -1.0)
    lead = 2.0 * c1 * c2
    if lead == 0.0:
        r_third = inf
    else:
        # Product of the three roots is -p(0)/lead.
        r_third = -1.0 / (lead * r_minus * r_plus)
    return CubicRoots(r_minus=r_minus, r_plus=r_plus, r_third=r_third)


@dataclass
class ReducedTrajectory:
    times: np.ndarray
    u: np.ndarray
    volume: np.ndarray
    invariants: ReducedInvariants


def evolve_reduced(
    invariants: ReducedInvariants,
    t_max: float,
    dt: float = 0.002,
    sample_stride: int = 1,
) -> ReducedTrajectory:
    """Integrate the two-variable reduced flow with fixed-step RK4.

    The initial data must satisfy the volume constraint w0^2 = p(u0) within
    a strict tolerance; the flow then conserves it automatically.
    """
    c1, c2 = invariants.c1, invariants.c2
    u, w = invariants.u0, invariants.volume0
    defect = abs(w * w - float(cubic_p(u, c1, c2)))
    if not isfinite(defect) or defect > CONSISTENCY_TOL:
        raise ValueError(f"inconsistent initial data: w0^2 - p(u0) = {defect:.3e}")

    def deriv(state):
        uu, ww = state
        return np.array(
            [-4.0 * uu * ww, -2.0 * uu * float(cubic_p_prime(uu, c1, c2))]
        )

    n_steps = max(1, int(round(t_max / dt)))
    state = np.array([u, w])
    times, us, ws = [0.0], [u], [w]
    for k in range(1, n_steps + 1):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * dt * k1)
        k3 = deriv(state + 0.5 * dt * k2)
        k4 = deriv(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % sample_stride == 0 or k == n_steps:
            times.append(k * dt)
            us.append(float(state[0]))
            ws.append(float(state[1]))
    return ReducedTrajectory(
        times=np.asarray(times),
        u=np.asarray(us),
        volume=np.asarray(ws),
        invariants=invariants,
    )


@dataclass
class ReductionComparison:
    times: np.ndarray
    u_full: np.ndarray
    u_reduced: np.ndarray
    volume_full: np.ndarray
    volume_reduced: np.ndarray
    max_dev_u: float
    max_dev_volume: float


def compare_with_full(
    x1, x2, x3, t_max: float, dt: float = 0.002, sample_stride: int = 5
) -> ReductionComparison:
    """Run the three-node simulation next to the reduced flow.

    The full run uses the pure triple coupling scaled so kappa/N^2 = 1,
    matching the unit-coefficient reduced equations.  Both integrations use
    the same step and sampling so the series compare pointwise.
    """
    config = as_configuration(np.stack([x1, x2, x3]), d=3)
    invariants = constants_from_initial(*config)

    params = ModelParams(d=3, n=3, kappa2=0.0, kappa_dbody=9.0)
    full = simulate(
        config,
        params,
        t_max=t_max,
        dt=dt,
        steady_tol=0.0,
        sample_stride=sample_stride,
        checkpoint_stride=sample_stride,
    )
    u_full, w_full, t_full = [], [], []
    for step_index, state in full.record.checkpoints:
        t_full.append(step_index * dt)
        u_full.append(float(state[0] @ state[1]))
        w_full.append(float(state[0] @ np.cross(state[1], state[2])))

    reduced = evolve_reduced(invariants, t_max=t_max, dt=dt, sample_stride=sample_stride)
    m = min(len(t_full), reduced.times.size)
    u_full = np.asarray(u_full)[:m]
    w_full = np.asarray(w_full)[:m]
    u_red = reduced.u[:m]
    w_red = reduced.volume[:m]
    return ReductionComparison(
        times=np.asarray(t_full)[:m],
        u_full=u_full,
        u_reduced=u_red,
        volume_full=w_full,
        volume_reduced=w_red,
        max_dev_u=float(np.max(np.abs(u_full - u_red))),
        max_dev_volume=float(np.max(np.abs(w_full - w_red))),
    )


def triple_from_invariants(
    u0: float, c1: float, c2: float, volume_sign: int = 1
) -> np.ndarray:
    """Construct three unit vectors realizing the given reduced data.

    Gauge choice: x1 at the pole, x2 in the xz-plane.  The volume magnitude
    follows from the constraint w^2 = p(u0); only its sign is free.
    """
    if not -1.0 < u0 < 1.0 or u0 == 0.0:
        raise ValueError(f"u0 must lie in (-1, 1) and be nonzero, got {u0}")
    p0 = float(cubic_p(u0, c1, c2))
    if p0 < 0.0:
        raise ValueError(f"p(u0) = {p0:.3e} < 0: no real triple exists")
    sin_a = np.sqrt(1.0 - u0 * u0)
    x1 = np.array([0.0, 0.0, 1.0])
    x2 = np.array([sin_a, 0.0, u0])
    if volume_sign not in (1, -1):
        raise ValueError("volume_sign must be +1 or -1")
    s3 = c2 * u0
    s1 = (c1 * u0 - c2 * u0 * u0) / sin_a
    s2 = volume_sign * np.sqrt(p0) / sin_a
    x3 = np.array([s1, s2, s3])
    norm_defect = abs(x3 @ x3 - 1.0)
    if norm_defect > 1e-9:
        raise ValueError(f"inconsistent invariants: |x3|^2 - 1 = {norm_defect:.3e}")
    return np.stack([x1, x2, x3 / np.linalg.norm(x3)])
