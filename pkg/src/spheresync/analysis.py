"""Order parameters, final-state classification, and trigonometric oracles.

The trig oracle suite re-derives every finite sum the closed-form catalogs
lean on, by direct enumeration, so a silent algebra slip in the catalog
cannot survive the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import catalog
from .dynamics import ModelParams, SimulationResult, rhs

PRACTICAL_BAND = 0.05
COMPLETE_TOL = 1e-4
BALANCED_TOL = 1e-4
SPACING_TOL = 1e-5

CLASSIFICATIONS = (
    "complete",
    "ring_equispaced",
    "balanced",
    "practical",
    "asynchronous",
    "unstable_start",
)


def order_parameter(config) -> float:
    """Norm of the centroid; 1 at complete sync, 0 for balanced states."""
    x = np.asarray(config, dtype=float)
    return float(np.linalg.norm(x.mean(axis=0)))


def trailing_band(series: np.ndarray, fraction: float = 0.1) -> float:
    """Max minus min over the trailing fraction of a sampled series."""
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        return 0.0
    tail = s[-max(2, int(math.ceil(fraction * s.size))):]
    return float(np.max(tail) - np.min(tail))


def spacing_profile(config) -> np.ndarray:
    """Distances between consecutively labeled nodes."""
    x = np.asarray(config, dtype=float)
    return np.linalg.norm(np.diff(x, axis=0), axis=1)


@dataclass
class SpacingStats:
    median: float
    max_deviation: float
    wrap_closed_deviation: float
    wrap_reflected_deviation: float

    @property
    def equispaced(self) -> bool:
        return self.max_deviation < SPACING_TOL


def equal_spacing_stats(config) -> SpacingStats:
    """Uniformity of consecutive spacings plus the two wrap conventions.

    Closed sequences (d = 3, 5 rings) come back to the first node; the
    d = 2, 4 sequences return to its antipode instead, which shows up as a
    small ``wrap_reflected_deviation``.
    """
    x = np.asarray(config, dtype=float)
    gaps = spacing_profile(x)
    med = float(np.median(gaps))
    closed = abs(float(np.linalg.norm(x[0] - x[-1])) - med)
    reflected = abs(float(np.linalg.norm(x[0] + x[-1])) - med)
    return SpacingStats(
        median=med,
        max_deviation=float(np.max(np.abs(gaps - med))) if gaps.size else 0.0,
        wrap_closed_deviation=closed,
        wrap_reflected_deviation=reflected,
    )


def phase_velocities(config, params: ModelParams) -> np.ndarray:
    """Signed angular rates of a d = 2 state under the given model."""
    x = np.asarray(config, dtype=float)
    if x.shape[1] != 2:
        raise ValueError("phase velocities are defined for d=2 states")
    tangents = np.stack([-x[:, 1], x[:, 0]], axis=1)
    return np.einsum("ij,ij->i", tangents, rhs(x, params))


def splay_alpha_from_r(n: int, r: float) -> float:
    """Invert the d = 2 splay order parameter for |alpha| in (0, 2)."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"order parameter must lie in [0, 1], got {r}")

    def gap(alpha):
        return catalog.splay_order_parameter(n, alpha) - r

    lo, hi = 1e-9, 2.0 - 1e-12
    if gap(lo) < 0.0:
        return 0.0
    if gap(hi) > 0.0:
        return 2.0
    return float(brentq(gap, lo, hi, xtol=1e-12))


# -- final-state classification --------------------------------------------


@dataclass
class SummaryReport:
    """Everything the CLI writes about one finished run."""

    classification: str
    steady: bool
    t_final: float
    n_steps: int
    r_final: float
    r_band: float
    lambda1: float | None = None
    lambda2: float | None = None
    lambda_residual: float | None = None
    family: str | None = None
    family_params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "steady": self.steady,
            "t_final": self.t_final,
            "n_steps": self.n_steps,
            "r_final": self.r_final,
            "r_band": self.r_band,
            "practical_band_threshold": PRACTICAL_BAND,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda_residual": self.lambda_residual,
            "family": self.family,
            "family_params": self.family_params,
            "checks": self.checks,
        }


def _pure_complete_sync_is_unstable(params: ModelParams) -> bool:
    if params.kappa_dbody == 0.0 or params.d < 3:
        return False
    ratio = params.kappa2 / abs(params.kappa_dbody)
    if params.d in (3, 5):
        return ratio < catalog.critical_ratio(params.d, params.n)
    return params.kappa2 <= 0.0


def _family_fit(final: np.ndarray, params: ModelParams, r_final: float) -> tuple[str | None, dict]:
    d, n = params.d, params.n
    if d == 2:
        alpha = splay_alpha_from_r(n, r_final)
        return "d2_combined" if params.kappa2 != 0.0 else "d2_splay", {"alpha": alpha}
    if d == 3:
        alpha = math.sqrt(max(1.0 / (r_final * r_final) - 1.0, 0.0)) if r_final > 0 else float("inf")
        spec = catalog.SteadyStateSpec(
            family="d3_combined", d=3, n=n, r_inf=r_final, alpha=alpha
        )
        dev = float(np.max(np.abs(final @ final.T - catalog.family_gram(spec))))
        return "d3_combined" if params.kappa2 != 0.0 else "d3_ring", {
            "alpha": alpha,
            "gram_deviation": dev,
        }
    if d == 4:
        fit = catalog.fit_d4_parameters(final)
        homogeneous = (
            fit.converged
            and abs(fit.alpha - 1.0) < 1e-3
            and abs(fit.beta - 1.0) < 1e-3
            and abs(fit.theta - math.pi / 4.0) < 1e-3
        )
        return "d4_torus" if homogeneous else "d4_combined", {
            "alpha": fit.alpha,
            "beta": fit.beta,
            "theta": fit.theta,
            "rms": fit.rms,
            "r_inf_predicted": fit.r_inf_predicted,
        }
    if d == 5:
        alpha = math.sqrt(max(1.0 / (r_final * r_final) - 1.0, 0.0)) if r_final > 0 else float("inf")
        spec = catalog.SteadyStateSpec(
            family="d5_combined", d=5, n=n, r_inf=r_final, alpha=alpha
        )
        dev = float(np.max(np.abs(final @ final.T - catalog.family_gram(spec))))
        return "d5_combined" if params.kappa2 != 0.0 else "d5_ring", {
            "alpha": alpha,
            "gram_deviation": dev,
        }
    return None, {}


def classify_final(result: SimulationResult) -> SummaryReport:
    """Assign one of the cataloged outcome classes to a finished run.

    Static states are split by order parameter and spacing uniformity;
    non-static runs count as practically synchronized when the trailing
    order-parameter band is narrower than ``PRACTICAL_BAND``.
    """
    params = result.params
    final = result.final_state
    r_final = order_parameter(final)
    band = trailing_band(result.record.order_parameter)
    spacing = equal_spacing_stats(final)

    lam1 = lam2 = lam_res = None
    family = None
    family_params: dict = {}

    if result.steady:
        if r_final > 1.0 - COMPLETE_TOL:
            classification = "complete"
            if result.n_steps == 0 and _pure_complete_sync_is_unstable(params):
                classification = "unstable_start"
        elif spacing.equispaced:
            classification = "ring_equispaced"
            family, family_params = _family_fit(final, params, r_final)
        elif r_final < BALANCED_TOL:
            classification = "balanced"
        else:
            # A frozen state off the catalog (e.g. a lock under distributed
            # frequencies with zero mean) still holds r in a zero-width band.
            classification = "practical"
        if classification in ("ring_equispaced", "balanced"):
            try:
                fit = catalog.verify_lambda_relation(
                    final, kappa2=params.kappa2, kappa_dbody=params.kappa_dbody
                )
                lam1, lam2, lam_res = fit.lambda1, fit.lambda2, fit.residual
            except ValueError:
                pass
    else:
        classification = "practical" if band < PRACTICAL_BAND else "asynchronous"

    return SummaryReport(
        classification=classification,
        steady=result.steady,
        t_final=result.t_final,
        n_steps=result.n_steps,
        r_final=r_final,
        r_band=band,
        lambda1=lam1,
        lambda2=lam2,
        lambda_residual=lam_res,
        family=family,
        family_params=family_params,
        checks={
            "spacing_median": spacing.median,
            "spacing_max_deviation": spacing.max_deviation,
            "wrap_closed_deviation": spacing.wrap_closed_deviation,
            "wrap_reflected_deviation": spacing.wrap_reflected_deviation,
        },
    )


# -- trigonometric oracle suite --------------------------------------------


@dataclass(frozen=True)
class TrigCheck:
    name: str
    n: int
    params: dict
    enumerated: complex
    closed_form: complex
    error: float

    @property
    def ok(self) -> bool:
        return self.error < 1e-9


def _pair_sign_product(*index_arrays) -> np.ndarray:
    """Generalized signature of index tuples as the product of pairwise
    sign differences; zero whenever two indices coincide."""
    sign = None
    k = len(index_arrays)
    for p in range(k):
        for q in range(p + 1, k):
            factor = np.sign(index_arrays[q] - index_arrays[p])
            sign = factor if sign is None else sign * factor
    return sign


def _closed_cos_sum(alpha: float, n: int) -> float:
    half = alpha * math.pi / (2.0 * n)
    return 0.5 * (-1.0 + math.cos(alpha * math.pi) + math.sin(alpha * math.pi) / math.tan(half))


def _closed_sin_sum(alpha: float, n: int) -> float:
    half = alpha * math.pi / (2.0 * n)
    return (
        math.sin(alpha * math.pi / 2.0)
        * math.sin(alpha * (n + 1) * math.pi / (2.0 * n))
        / math.sin(half)
    )


def _check(name, n, params, enumerated, closed) -> TrigCheck:
    return TrigCheck(
        name=name,
        n=n,
        params=params,
        enumerated=enumerated,
        closed_form=closed,
        error=float(abs(enumerated - closed)),
    )


def trig_oracles() -> list[TrigCheck]:
    """Every closed-form finite sum, checked against direct enumeration."""
    checks: list[TrigCheck] = []

    # Single sums of cos/sin(alpha pi j / N), integer and fractional alpha.
    for n in range(3, 65):
        j = np.arange(1, n + 1)
        for alpha in (1.0, 2.0, 3.0, 4.0, 5.0, 0.5, math.sqrt(2.0)):
            if abs(alpha) % (2 * n) == 0:
                continue
            ang = alpha * math.pi * j / n
            checks.append(
                _check("cos_sum", n, {"alpha": alpha}, float(np.sum(np.cos(ang))), _closed_cos_sum(alpha, n))
            )
            checks.append(
                _check("sin_sum", n, {"alpha": alpha}, float(np.sum(np.sin(ang))), _closed_sin_sum(alpha, n))
            )
        # Parity shortcuts: even harmonics cancel, odd ones leave a cotangent.
        for m in range(1, 7):
            if m >= 2 * n:
                continue
            ang = m * math.pi * j / n
            cos_sum = float(np.sum(np.cos(ang)))
            sin_sum = float(np.sum(np.sin(ang)))
            if m % 2 == 0:
                checks.append(_check("cos_sum_even", n, {"m": m}, cos_sum, 0.0))
                checks.append(_check("sin_sum_even", n, {"m": m}, sin_sum, 0.0))
            else:
                checks.append(_check("cos_sum_odd", n, {"m": m}, cos_sum, -1.0))
                checks.append(
                    _check("sin_sum_odd", n, {"m": m}, sin_sum, 1.0 / math.tan(m * math.pi / (2.0 * n)))
                )

    # Double sum of the phase differences: the squared-sinc order parameter.
    for n in (3, 5, 8, 13, 40, 64):
        i = np.arange(1, n + 1)
        for alpha in (1.0, 3.0, 0.5, math.sqrt(2.0)):
            diff = alpha * math.pi * (i[None, :] - i[:, None]) / n
            enumerated = float(np.sum(np.cos(diff)))
            closed = (math.sin(alpha * math.pi / 2.0) / math.sin(alpha * math.pi / (2.0 * n))) ** 2
            checks.append(_check("double_cos_sum", n, {"alpha": alpha}, enumerated, closed))

    # Three-index signature sum against its rational closed form.
    for n in (3, 5, 8, 13, 21, 40):
        zeta = np.exp(1j * math.pi / n)
        k = np.arange(1, n + 1)
        for i in (1, 2, n // 2, n):
            for j in (1, 3, n):
                signs = _pair_sign_product(float(i), float(j), k.astype(float))
                enumerated = complex(np.sum(signs * zeta ** (-2.0 * k)))
                closed = (
                    (1.0 + zeta**2)
                    * (zeta ** (-2.0 * i) - zeta ** (-2.0 * j))
                    / (1.0 - zeta**2)
                )
                checks.append(
                    _check("signature_sum_3", n, {"i": i, "j": j}, enumerated, complex(closed))
                )

    # Four-index signature double sum, odd harmonics.
    for n in (4, 6, 9, 12):
        zeta = np.exp(1j * math.pi / n)
        k = np.arange(1.0, n + 1)
        kk, ll = np.meshgrid(k, k, indexing="ij")
        for i, j in ((1, 2), (2, 5 % n + 1), (1, n)):
            for alpha, beta in ((1, 3), (3, 1), (1, 1), (3, -1), (-1, 3)):
                signs = _pair_sign_product(float(i), float(j), kk, ll)
                enumerated = complex(np.sum(signs * zeta ** (alpha * kk + beta * ll)))
                za, zb = zeta**alpha, zeta**beta
                closed = (
                    (1.0 + za)
                    * (1.0 + zb)
                    / ((1.0 - za) * (1.0 - zb))
                    * (zeta ** (alpha * j + beta * i) - zeta ** (alpha * i + beta * j))
                )
                checks.append(
                    _check(
                        "signature_sum_4",
                        n,
                        {"i": i, "j": j, "alpha": alpha, "beta": beta},
                        enumerated,
                        complex(closed),
                    )
                )

    # Triple sum with one free index: the d = 4 multiplier backbone.
    for n in (4, 6, 8, 10):
        zeta = np.exp(1j * math.pi / n)
        k = np.arange(1.0, n + 1)
        jj, kk, ll = np.meshgrid(k, k, k, indexing="ij")
        cot1 = 1.0 / math.tan(math.pi / (2.0 * n))
        cot3 = 1.0 / math.tan(3.0 * math.pi / (2.0 * n))
        for i in (1, 2, n):
            signs = _pair_sign_product(float(i), jj, kk, ll)
            enumerated = complex(np.sum(signs * zeta ** (3.0 * jj - kk - 3.0 * ll)))
            closed = n * cot1 * cot3 * zeta ** (-float(i))
            checks.append(_check("signature_sum_d4", n, {"i": i}, enumerated, complex(closed)))
            real_part = float(np.sum(signs * np.cos((3.0 * jj - 3.0 * ll - kk) * math.pi / n)))
            closed_real = n * cot1 * cot3 * math.cos(i * math.pi / n)
            checks.append(
                _check("signature_sum_d4_real", n, {"i": i}, real_part, closed_real)
            )

    # Fully summed four-index cosine sum: the d = 5 multiplier backbone.
    for n in (4, 6, 8, 10):
        k = np.arange(1.0, n + 1)
        jj, kk, ll, mm = np.meshgrid(k, k, k, k, indexing="ij")
        signs = _pair_sign_product(jj, kk, ll, mm)
        enumerated = float(np.sum(signs * np.cos((4.0 * jj - 2.0 * kk - 4.0 * ll) * math.pi / n)))
        closed = 0.5 * n * n * math.cos(2.0 * math.pi / n) / math.sin(math.pi / n) ** 2
        checks.append(_check("signature_sum_d5", n, {}, enumerated, closed))

    return checks
