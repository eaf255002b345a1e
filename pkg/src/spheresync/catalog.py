"""Exact steady-state families for d = 2..5 and their coupling thresholds.

Each family is a one-parameter ring of equally spaced nodes (a splay state
for d = 2, a generalized-torus sequence for d = 4) whose asymptotic order
parameter and steady-state multipliers have closed forms.  Array index i
corresponds to node i+1 of the generating sequence, so the last row is the
node lying on the canonical meridian.

Sign conventions: specs store the engine couplings (kappa2, kappa_dbody).
For d >= 3 a negative d-body coupling stabilizes the mirror image of the
canonical state, so the catalog reflects it (odd d: global negation, even
d: last-axis flip; for even d the negation alone is a proper rotation and
flips nothing).  For d = 2 the handedness is already carried by the sign of
the spacing parameter alpha, so no extra reflection is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, least_squares

FAMILIES = (
    "d2_splay",
    "d2_combined",
    "d3_ring",
    "d3_combined",
    "d4_torus",
    "d4_combined",
    "d5_ring",
    "d5_combined",
    "basis",
)

# Maximum of the d=5 existence shape factor (1 - x^2)(5 x^2 - 1)/x on (0, 1),
# attained at x^2 = (3 + 2 sqrt(6))/15.
D5_SHAPE_ARGMAX = math.sqrt((3.0 + 2.0 * math.sqrt(6.0)) / 15.0)
D5_SHAPE_MAX = 8.0 * math.sqrt(4.0 * math.sqrt(6.0) - 9.0) / (3.0 * math.sqrt(5.0))


@dataclass(frozen=True)
class SteadyStateSpec:
    """One catalog entry: family, size, and the parameters fixing the state.

    ``alpha`` is the angular spacing multiplier (second-harmonic weight for
    d = 3, 5), ``beta``/``theta`` only apply to the d = 4 families, and
    ``phase0`` rotates the state about its symmetry axis.
    """

    family: str
    d: int
    n: int
    r_inf: float
    alpha: float = float("nan")
    beta: float = float("nan")
    theta: float = float("nan")
    phase0: float = 0.0
    kappa2: float = 0.0
    kappa_dbody: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < self.d:
            raise ValueError(f"need at least d={self.d} nodes, got N={self.n}")


def _require_family_dimension(family: str, d: int):
    wanted = {"d2": 2, "d3": 3, "d4": 4, "d5": 5}.get(family[:2])
    if wanted is not None and d != wanted:
        raise ValueError(f"family {family} lives in d={wanted}, got d={d}")


# -- constructors ----------------------------------------------------------


def ring_state(d: int, n: int, phase0: float = 0.0, kappa_dbody: float = 1.0) -> SteadyStateSpec:
    """The pure d-body equispaced family: splay, ring, or torus sequence."""
    if kappa_dbody == 0.0:
        raise ValueError("pure family needs a nonzero d-body coupling")
    family = {2: "d2_splay", 3: "d3_ring", 4: "d4_torus", 5: "d5_ring"}.get(d)
    if family is None:
        raise ValueError(f"no cataloged pure family for d={d}")
    alpha = {2: 1.0, 3: math.sqrt(2.0), 4: 1.0, 5: 2.0}[d]
    if d == 2 and kappa_dbody < 0.0:
        alpha = -alpha
    spec = SteadyStateSpec(
        family=family,
        d=d,
        n=n,
        r_inf=r_infinity(family, d, n),
        alpha=alpha,
        beta=1.0 if d == 4 else float("nan"),
        theta=math.pi / 4.0 if d == 4 else float("nan"),
        phase0=phase0,
        kappa2=0.0,
        kappa_dbody=kappa_dbody,
    )
    return spec


def basis_state(d: int) -> SteadyStateSpec:
    """N = d nodes on the coordinate axes; steady for any couplingless flow
    and for the pure d-body flow, with r = 1/sqrt(d)."""
    return SteadyStateSpec(family="basis", d=d, n=d, r_inf=1.0 / math.sqrt(d))


def combined_state(
    d: int, n: int, kappa2: float, kappa_dbody: float, phase0: float = 0.0
) -> SteadyStateSpec:
    """Equispaced steady state of the combined flow at the given couplings.

    The asymptotic order parameter follows from the coupling ratio; above
    the existence threshold (d = 3, 5 with attractive pairwise coupling)
    None is returned because the family has merged with complete sync.
    """
    if kappa_dbody == 0.0:
        raise ValueError("combined family needs a nonzero d-body coupling")
    ratio = kappa2 / abs(kappa_dbody)
    if d == 2:
        # Engine coupling to phase-model coupling: kappa_a = -kappa_dbody.
        alpha = arc_parameter_d2(kappa2, -kappa_dbody)
        r = splay_order_parameter(n, alpha)
        return SteadyStateSpec(
            family="d2_combined", d=2, n=n, r_inf=r, alpha=alpha,
            phase0=phase0, kappa2=kappa2, kappa_dbody=kappa_dbody,
        )
    if d == 3:
        r = r_infinity("d3_combined", 3, n, ratio)
    elif d == 5:
        r = r_infinity("d5_combined", 5, n, ratio)
    else:
        raise ValueError(f"no closed-form combined family for d={d}")
    if r is None:
        return None
    # Both d = 3 and d = 5 tie the harmonic weight to r via r^2 (1 + alpha^2) = 1.
    alpha = math.sqrt(max(1.0 / (r * r) - 1.0, 0.0))
    return SteadyStateSpec(
        family=f"d{d}_combined", d=d, n=n, r_inf=r, alpha=alpha,
        phase0=phase0, kappa2=kappa2, kappa_dbody=kappa_dbody,
    )


def d3_combined_from_r(n: int, r: float, kappa_dbody: float = 1.0) -> SteadyStateSpec:
    """d = 3 combined state at a prescribed order parameter; the pairwise
    coupling is back-solved from the existence balance."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"order parameter must lie in (0, 1), got {r}")
    kappa2 = abs(kappa_dbody) * (3.0 * r * r - 1.0) / (n * r * math.tan(math.pi / n))
    alpha = math.sqrt(1.0 / (r * r) - 1.0)
    return SteadyStateSpec(
        family="d3_combined", d=3, n=n, r_inf=r, alpha=alpha,
        kappa2=kappa2, kappa_dbody=kappa_dbody,
    )


def d5_combined_from_r(n: int, r: float, kappa_dbody: float = 1.0) -> SteadyStateSpec:
    """d = 5 combined state at a prescribed order parameter."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"order parameter must lie in (0, 1), got {r}")
    kappa2 = abs(kappa_dbody) * _d5_shape(r) * _d5_geometry(n)
    alpha = math.sqrt(1.0 / (r * r) - 1.0)
    return SteadyStateSpec(
        family="d5_combined", d=5, n=n, r_inf=r, alpha=alpha,
        kappa2=kappa2, kappa_dbody=kappa_dbody,
    )


def d4_state(
    n: int, alpha: float = 1.0, beta: float = 1.0, theta: float = math.pi / 4.0,
    phase0: float = 0.0, kappa_dbody: float = 1.0,
) -> SteadyStateSpec:
    """Generalized d = 4 torus sequence with explicit harmonics and mixing
    angle.  The homogeneous case alpha = beta = 1, theta = pi/4 is the pure
    family; other parameter values arise under combined couplings and are
    characterized numerically only."""
    r2 = d4_order_parameter_squared(n, alpha, beta, theta)
    family = "d4_torus" if (alpha == 1.0 and beta == 1.0 and theta == math.pi / 4.0) else "d4_combined"
    return SteadyStateSpec(
        family=family, d=4, n=n, r_inf=math.sqrt(r2), alpha=alpha, beta=beta,
        theta=theta, phase0=phase0, kappa2=0.0, kappa_dbody=kappa_dbody,
    )


# -- configurations --------------------------------------------------------


def exact_configuration(spec: SteadyStateSpec) -> np.ndarray:
    """Materialize the catalog entry as an (N, d) array of unit rows."""
    n = spec.n
    idx = np.arange(1, n + 1, dtype=float)
    if spec.family in ("d2_splay", "d2_combined"):
        ang = spec.phase0 + idx * spec.alpha * math.pi / n
        x = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    elif spec.family in ("d3_ring", "d3_combined"):
        ang = spec.phase0 + 2.0 * math.pi * idx / n
        r, a = spec.r_inf, spec.alpha
        x = np.stack(
            [r * a * np.cos(ang), r * a * np.sin(ang), np.full(n, r)], axis=1
        )
    elif spec.family in ("d4_torus", "d4_combined"):
        base = spec.phase0 + math.pi * idx / n
        ca, sa = math.cos(spec.theta), math.sin(spec.theta)
        x = np.stack(
            [
                ca * np.cos(spec.alpha * base),
                ca * np.sin(spec.alpha * base),
                sa * np.cos(3.0 * spec.beta * base),
                sa * np.sin(3.0 * spec.beta * base),
            ],
            axis=1,
        )
    elif spec.family in ("d5_ring", "d5_combined"):
        ang = spec.phase0 + 2.0 * math.pi * idx / n
        r, a = spec.r_inf, spec.alpha
        w = r * a / math.sqrt(2.0)
        x = np.stack(
            [
                w * np.cos(ang),
                w * np.sin(ang),
                w * np.cos(2.0 * ang),
                w * np.sin(2.0 * ang),
                np.full(n, r),
            ],
            axis=1,
        )
    elif spec.family == "basis":
        x = np.eye(spec.d)
    else:
        raise ValueError(f"unknown family {spec.family!r}")

    if spec.kappa_dbody < 0.0 and spec.d >= 3:
        if spec.d % 2 == 1:
            x = -x
        else:
            x = x.copy()
            x[:, -1] *= -1.0
    return x


def family_gram(spec: SteadyStateSpec) -> np.ndarray:
    """Closed-form Gram matrix of the family, element (i, j) depending only
    on the label difference.  Serves as the rotation-invariant oracle that
    ``exact_configuration`` is tested against."""
    n = spec.n
    k = np.arange(n)[:, None] - np.arange(n)[None, :]
    if spec.family in ("d2_splay", "d2_combined"):
        return np.cos(spec.alpha * math.pi * k / n)
    if spec.family in ("d3_ring", "d3_combined"):
        r2 = spec.r_inf**2
        return r2 * (1.0 + spec.alpha**2 * np.cos(2.0 * math.pi * k / n))
    if spec.family in ("d4_torus", "d4_combined"):
        ca2 = math.cos(spec.theta) ** 2
        sa2 = math.sin(spec.theta) ** 2
        return ca2 * np.cos(spec.alpha * math.pi * k / n) + sa2 * np.cos(
            3.0 * spec.beta * math.pi * k / n
        )
    if spec.family in ("d5_ring", "d5_combined"):
        r2, a2 = spec.r_inf**2, spec.alpha**2
        return r2 * (
            1.0
            + 0.5 * a2 * np.cos(2.0 * math.pi * k / n)
            + 0.5 * a2 * np.cos(4.0 * math.pi * k / n)
        )
    if spec.family == "basis":
        return np.eye(spec.d)
    raise ValueError(f"unknown family {spec.family!r}")


# -- order parameters and thresholds ---------------------------------------


def splay_order_parameter(n: int, alpha: float = 1.0) -> float:
    """r of the d = 2 splay family with spacing parameter alpha."""
    num = abs(math.sin(alpha * math.pi / 2.0))
    den = n * abs(math.sin(alpha * math.pi / (2.0 * n)))
    if den < 1e-300:
        return 1.0  # alpha -> 0: all phases coincide
    return num / den


def d4_order_parameter_squared(
    n: int, alpha: float = 1.0, beta: float = 1.0, theta: float = math.pi / 4.0
) -> float:
    """r^2 of the d = 4 torus family, harmonic by harmonic."""

    def harmonic(a: float) -> float:
        den = math.sin(a * math.pi / (2.0 * n))
        if abs(den) < 1e-12:
            return float(n * n)
        return (math.sin(a * math.pi / 2.0) / den) ** 2

    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    return (c2 * harmonic(alpha) + s2 * harmonic(3.0 * beta)) / (n * n)


def _d5_shape(r: float) -> float:
    return (1.0 - r * r) * (5.0 * r * r - 1.0) / r


def _d5_geometry(n: int) -> float:
    return 3.0 * math.cos(2.0 * math.pi / n) / (4.0 * n * n * math.sin(math.pi / n) ** 2)


def critical_ratio(d: int, n: int) -> float:
    """Largest kappa2/|kappa_d| for which the equispaced family exists.

    Continuous merger with complete sync for d = 3; saddle-node of the shape
    factor for d = 5.  No closed form is known for d = 4 and the d = 2
    family exists at every ratio, so both are rejected here.
    """
    if d == 3:
        return 2.0 / (n * math.tan(math.pi / n))
    if d == 5:
        return D5_SHAPE_MAX * _d5_geometry(n)
    raise ValueError(f"no closed-form critical ratio for d={d}")


def r_infinity(family: str, d: int, n: int, kappa_ratio: float = 0.0):
    """Asymptotic order parameter of a family at coupling ratio
    kappa2/|kappa_d|.  Returns None where the family does not exist."""
    _require_family_dimension(family, d)
    if family == "d2_splay":
        return splay_order_parameter(n, 1.0)
    if family == "d3_ring":
        return 1.0 / math.sqrt(3.0)
    if family == "d4_torus":
        return math.sqrt(d4_order_parameter_squared(n))
    if family == "d5_ring":
        return 1.0 / math.sqrt(5.0)
    if family == "basis":
        return 1.0 / math.sqrt(d)
    if family == "d2_combined":
        alpha = arc_parameter_d2(kappa_ratio, 1.0)
        return splay_order_parameter(n, alpha)
    if family == "d3_combined":
        if kappa_ratio > critical_ratio(3, n):
            return None
        t = kappa_ratio * n * math.tan(math.pi / n)
        return t / 6.0 + math.sqrt(t * t + 12.0) / 6.0
    if family == "d5_combined":
        return solve_d5_rinf(n, kappa_ratio)
    if family == "d4_combined":
        raise ValueError("the d=4 combined family is characterized numerically only")
    raise ValueError(f"unknown family {family!r}")


def solve_d5_rinf(n: int, kappa_ratio: float, tol: float = 1e-12):
    """Order parameter of the d = 5 family branch through r = 1/sqrt(5).

    Solves shape(r) * geometry(N) = ratio on the branch that continues the
    pure state; the branch folds at the shape maximum, beyond which None is
    returned (the transition is a jump to complete sync).
    """
    geom = _d5_geometry(n)
    target = kappa_ratio / geom
    top = D5_SHAPE_MAX
    if target > top:
        if target - top < 1e-9 * max(1.0, top):
            return D5_SHAPE_ARGMAX
        return None
    base = 1.0 / math.sqrt(5.0)
    if abs(target) < tol:
        return base
    if target > 0.0:
        lo, hi = base, D5_SHAPE_ARGMAX
        if _d5_shape(hi) <= target:
            return hi
    else:
        lo, hi = 1e-12, base
    return float(brentq(lambda r: _d5_shape(r) - target, lo, hi, xtol=tol))


def arc_parameter_d2(kappa_s: float, kappa_a: float) -> float:
    """Spacing parameter of the stable d = 2 splay family.

    Branch selection follows the signs of the two couplings; |alpha| < 2
    always.  kappa_s is the pairwise coupling, kappa_a the antisymmetric one
    (engine convention: kappa_a = -kappa_dbody).
    """
    if kappa_s == 0.0 and kappa_a == 0.0:
        raise ValueError("both couplings vanish: no preferred state")
    if kappa_s == 0.0:
        return -1.0 if kappa_a > 0.0 else 1.0
    base = -(2.0 / math.pi) * math.atan(kappa_a / kappa_s)
    if kappa_s > 0.0:
        return base
    if kappa_a > 0.0:
        return -2.0 + base
    if kappa_a < 0.0:
        return 2.0 + base
    return 2.0  # kappa_s < 0, kappa_a = 0: antiphase limit


# -- steady-state multiplier relations -------------------------------------


@dataclass(frozen=True)
class LambdaFit:
    """Least-squares multipliers of S_i = lambda1 x_i - lambda2 X_mean.

    ``residual`` is the misfit norm relative to the drive-sum magnitude.
    ``lambda2_expected`` is kappa2 N^{d-1} / kappa_d when couplings were
    supplied, else None.
    """

    lambda1: float
    lambda2: float
    residual: float
    lambda2_expected: float | None = None


def verify_lambda_relation(
    config, kappa2: float | None = None, kappa_dbody: float | None = None
) -> LambdaFit:
    """Fit the two steady-state multipliers of a static configuration."""
    from .kernels import signature_sum

    x = np.asarray(config, dtype=float)
    n, d = x.shape
    mean = x.mean(axis=0)
    target = signature_sum(x).ravel()
    design = np.stack([x.ravel(), -np.tile(mean, n)], axis=1)
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] < 1e-12 * max(sv[0], 1.0):
        raise ValueError("degenerate fit: all nodes parallel to the mean direction")
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    misfit = float(np.linalg.norm(target - design @ coef))
    scale = max(1.0, float(np.linalg.norm(target)))
    expected = None
    if kappa2 is not None and kappa_dbody not in (None, 0.0):
        expected = kappa2 * float(n) ** (d - 1) / kappa_dbody
    return LambdaFit(
        lambda1=float(coef[0]),
        lambda2=float(coef[1]),
        residual=misfit / scale,
        lambda2_expected=expected,
    )


def closed_form_lambdas(spec: SteadyStateSpec) -> tuple[float, float]:
    """Analytic multipliers (lambda1, lambda2) of a catalog entry.

    These multiply the raw signature sums, so they grow like N^{d-1}.  For
    the combined families lambda2 = kappa2 N^{d-1}/kappa_d holds by
    construction.
    """
    n = spec.n
    if spec.family in ("d2_splay", "d2_combined"):
        a = spec.alpha
        lam1 = 1.0 / math.tan(a * math.pi / (2.0 * n))
        lam2 = 0.0 if spec.family == "d2_splay" else n / math.tan(a * math.pi / 2.0)
        return lam1, lam2
    if spec.family == "d3_ring":
        return 2.0 * n / (math.sqrt(3.0) * math.tan(math.pi / n)), 0.0
    if spec.family == "d3_combined":
        r = spec.r_inf
        cot = 1.0 / math.tan(math.pi / n)
        return 2.0 * n * r * cot, n * cot * (3.0 * r * r - 1.0) / r
    if spec.family == "d4_torus":
        return (
            1.5 * n / (math.tan(3.0 * math.pi / (2.0 * n)) * math.tan(math.pi / (2.0 * n))),
            0.0,
        )
    if spec.family in ("d5_ring", "d5_combined"):
        r = spec.r_inf
        factor = 3.0 * n * n * math.cos(2.0 * math.pi / n) / math.sin(math.pi / n) ** 2
        lam1 = r * (1.0 - r * r) * factor
        lam2 = (1.0 - r * r) * (5.0 * r * r - 1.0) / r * factor / 4.0
        return lam1, lam2
    raise ValueError(f"no closed-form multipliers for family {spec.family!r}")


# -- d = 4 Gram fitting ----------------------------------------------------


@dataclass(frozen=True)
class D4Fit:
    alpha: float
    beta: float
    theta: float
    rms: float
    r_inf_predicted: float
    converged: bool
    message: str = ""


def fit_d4_parameters(config) -> D4Fit:
    """Recover (alpha, beta, theta) of the d = 4 family from a Gram matrix.

    Nonlinear least squares on the two-harmonic model of the label-difference
    profile.  The objective has many local minima, so the homogeneous seed is
    backed by a small grid of alternative starts and the best residual wins;
    ``converged`` additionally requires the winning fit to actually match the
    data.  A near-constant Gram (state collapsed to a point) has no
    identifiable harmonics and is reported as a degenerate, non-converged fit
    rather than raised.
    """
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if x.shape[1] != 4:
        raise ValueError("the torus fit applies to d=4 configurations")
    gram = x @ x.T
    rows, cols = np.triu_indices(n, k=1)
    data = gram[rows, cols]
    diffs = (rows - cols).astype(float)
    if float(np.max(data) - np.min(data)) < 1e-8:
        return D4Fit(
            alpha=float("nan"), beta=float("nan"), theta=float("nan"),
            rms=0.0, r_inf_predicted=1.0, converged=False,
            message="degenerate: Gram matrix is constant",
        )

    def model(params):
        a, b, th = params
        return (
            np.cos(th) ** 2 * np.cos(a * math.pi * diffs / n)
            + np.sin(th) ** 2 * np.cos(3.0 * b * math.pi * diffs / n)
            - data
        )

    starts = [(1.0, 1.0, math.pi / 4.0)]
    starts += [
        (a0, b0, t0)
        for a0 in (1.0, 2.0, 3.0)
        for b0 in (1.0, 2.0, 3.0)
        for t0 in (math.pi / 8.0, math.pi / 4.0, 3.0 * math.pi / 8.0)
    ]
    best = None
    for x0 in starts:
        result = least_squares(model, x0=x0, method="lm")
        rms = float(np.sqrt(np.mean(result.fun**2)))
        if best is None or rms < best[0]:
            best = (rms, result)
        if rms < 1e-10:
            break
    rms, result = best
    a, b, th = result.x
    a, b = abs(a), abs(b)
    th = math.atan2(abs(math.sin(th)), abs(math.cos(th)))
    good = bool(result.success) and rms < 1e-6
    return D4Fit(
        alpha=float(a),
        beta=float(b),
        theta=float(th),
        rms=rms,
        r_inf_predicted=math.sqrt(d4_order_parameter_squared(n, a, b, th)),
        converged=good,
        message="" if good else (str(result.message) if not result.success else "poor fit"),
    )


def matching_params(spec: SteadyStateSpec):
    """ModelParams under which the catalog entry is a steady state."""
    from .dynamics import ModelParams

    return ModelParams(
        d=spec.d, n=spec.n, kappa2=spec.kappa2, kappa_dbody=spec.kappa_dbody
    )


def with_phase(spec: SteadyStateSpec, phase0: float) -> SteadyStateSpec:
    return replace(spec, phase0=phase0)
