"""Allocation criteria: loss functions and the asymmetry calibration.

Pointwise losses (squared distance, Aitchison distance, the convex
infinite-bounds penalisation ``(p-g)^2 / (p^a (1-p)^(2-a))``, the EWOC hinge
loss and the BLRM interval loss) are plain vectorised functions.  The
criterion classes wrap them with the evaluation rule a design uses to score
each dose: either the loss at the posterior-mean toxicity (squared distance)
or the posterior expectation of the loss (everything else).

``calibrate_asymmetry`` maps an indifference half-width ``theta`` around the
target to the asymmetry parameter ``a`` for which the penalisation is equal
at ``gamma - theta`` and ``gamma + theta``; as ``theta -> 0`` this tends to
``2 * gamma``, and smaller values of ``a`` penalise overdosing harder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logit
from sklearn.base import BaseEstimator

from .posterior import post_expect, post_mean_tox
from .validation import check_open_unit, check_probability

# Probability floor applied before evaluating unbounded losses; keeps the
# infinite-bounds penalty finite on quadrature nodes where the model
# saturates (the mathematical expectation diverges without it).
DEFAULT_FLOOR = 1e-12

# Interval loss for a 0.33 target: (low, high, loss) triples partitioning [0, 1].
BLRM_TABLE_033 = ((0.0, 0.26, 1.0), (0.26, 0.41, 0.0), (0.41, 0.66, 1.0), (0.66, 1.0, 2.0))


def sq_distance(p, gamma):
    """Squared distance ``(p - gamma)^2``."""
    p = np.asarray(p, dtype=float)
    out = (p - gamma) ** 2
    return float(out) if out.ndim == 0 else out


def aitchison_distance(p, gamma):
    """Distance between probabilities on the logit scale, ``|logit p - logit gamma|``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("aitchison_distance requires p strictly inside (0, 1)")
    gamma = check_open_unit(gamma, "gamma")
    out = np.abs(logit(p) - logit(gamma))
    return float(out) if out.ndim == 0 else out


def cibp(p, gamma, a):
    """Convex infinite-bounds penalisation ``(p-gamma)^2 / (p^a (1-p)^(2-a))``.

    Zero exactly at ``p = gamma`` and divergent toward both endpoints, so
    doses believed to sit near certain toxicity or certain safety are never
    attractive.  ``a`` in (0, 2) tilts the penalty: values below ``2*gamma``
    punish overdosing more than underdosing.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("cibp requires p strictly inside (0, 1); the loss diverges at the bounds")
    gamma = check_probability(gamma, "gamma")
    a = float(a)
    if not 0.0 < a < 2.0:
        raise ValueError(f"asymmetry parameter a must lie in (0, 2); got {a!r}")
    out = (p - gamma) ** 2 / (p**a * (1.0 - p) ** (2.0 - a))
    return float(out) if out.ndim == 0 else out


def calibrate_asymmetry(gamma, theta):
    """Asymmetry parameter equalising the penalty at ``gamma +- theta``.

    Solves cibp(gamma-theta) == cibp(gamma+theta) for ``a``:

        A = log((g-t)/(g+t)) / log((1-g-t)/(1-g+t)),  a = 2 / (1 + A)
    """
    gamma = check_open_unit(gamma, "gamma", upper=0.5)
    theta = float(theta)
    if not 0.0 < theta < gamma:
        raise ValueError(f"theta must lie in (0, gamma) = (0, {gamma}); got {theta!r}")
    ratio_num = math.log((gamma - theta) / (gamma + theta))
    ratio_den = math.log((1.0 - gamma - theta) / (1.0 - gamma + theta))
    return 2.0 / (1.0 + ratio_num / ratio_den)


def ewoc_loss_point(p, gamma, alpha):
    """Asymmetric hinge loss ``alpha*(gamma-p)+ + (1-alpha)*(p-gamma)+``."""
    p = np.asarray(p, dtype=float)
    gamma = check_probability(gamma, "gamma")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1); got {alpha!r}")
    out = alpha * np.maximum(0.0, gamma - p) + (1.0 - alpha) * np.maximum(0.0, p - gamma)
    return float(out) if out.ndim == 0 else out


def tr_alpha(patient_index, alpha_start=0.25, step=0.05, cap=0.50, plateau_end=9):
    """Patient-indexed feasibility bound: flat early, then linear to a cap."""
    if patient_index < 1:
        raise ValueError(f"patient_index must be >= 1; got {patient_index!r}")
    if patient_index <= plateau_end:
        return float(alpha_start)
    return float(min(alpha_start + step * (patient_index - plateau_end), cap))


def tdfb_alpha(alpha_min, scale, n, dlt_total):
    """Toxicity-dependent feasibility bound after ``n`` observed patients.

    ``alpha_min + (0.5 - alpha_min) * (n - 1 - dlt_total) / scale``, floored
    at ``alpha_min`` and capped at 0.5; grows with the number of patients
    who did not experience a DLT.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive; got {scale!r}")
    if not 0 <= dlt_total <= n:
        raise ValueError(f"dlt_total must lie in [0, n]; got {dlt_total!r} with n={n!r}")
    raw = alpha_min + (0.5 - alpha_min) * (n - 1 - dlt_total) / scale
    return float(min(0.5, max(alpha_min, raw)))


def _check_loss_table(table):
    rows = [(float(lo), float(hi), float(loss)) for lo, hi, loss in table]
    if not rows:
        raise ValueError("loss table must be non-empty")
    rows.sort(key=lambda r: r[0])
    if rows[0][0] != 0.0 or rows[-1][1] != 1.0:
        raise ValueError("loss table intervals must span [0, 1]")
    for (lo, hi, loss) in rows:
        if hi <= lo:
            raise ValueError(f"empty or inverted interval ({lo}, {hi}) in loss table")
        if loss < 0 or not np.isfinite(loss):
            raise ValueError(f"losses must be finite and non-negative; got {loss!r}")
    for (_, hi, _), (lo, _, _) in zip(rows, rows[1:]):
        if not math.isclose(hi, lo, abs_tol=1e-12):
            raise ValueError(f"loss table intervals have a gap or overlap at {hi} vs {lo}")
    return rows


def blrm_loss_point(p, loss_table=BLRM_TABLE_033):
    """Piecewise-constant interval loss lookup (upper interval is closed)."""
    rows = _check_loss_table(loss_table)
    p = np.asarray(p, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("p must lie in [0, 1]")
    edges = np.array([lo for lo, _, _ in rows][1:])
    losses = np.array([loss for _, _, loss in rows])
    out = losses[np.searchsorted(edges, p, side="right")]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TargetConfig:
    """Target toxicity plus the asymmetry parameter, optionally calibrated.

    When ``theta`` is given, ``a`` must equal ``calibrate_asymmetry(gamma,
    theta)`` to within 1e-12; construct via :meth:`from_halfwidth` to get
    that for free.
    """

    gamma: float
    a: float
    theta: float | None = None

    def __post_init__(self):
        check_open_unit(self.gamma, "gamma", upper=0.5)
        if not 0.0 < self.a < 2.0:
            raise ValueError(f"a must lie in (0, 2); got {self.a!r}")
        if self.theta is not None:
            expected = calibrate_asymmetry(self.gamma, self.theta)
            if abs(expected - self.a) > 1e-12:
                raise ValueError(
                    f"a={self.a!r} is inconsistent with calibrate_asymmetry({self.gamma}, {self.theta}) = {expected!r}"
                )

    @classmethod
    def from_halfwidth(cls, gamma, theta):
        return cls(gamma=gamma, a=calibrate_asymmetry(gamma, theta), theta=theta)


class AllocationCriterion(BaseEstimator):
    """Base class: score every dose given the current posterior."""

    kind = None

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        raise NotImplementedError


class SquaredDistance(AllocationCriterion):
    """Squared distance of the posterior-mean toxicity from the target."""

    kind = "sq-distance"

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        return sq_distance(post_mean_tox(posterior, model, doses), gamma)


class Cibp(AllocationCriterion):
    """Posterior expectation of the infinite-bounds penalisation."""

    kind = "cibp"

    def __init__(self, a=0.3, floor=DEFAULT_FLOOR):
        self.a = a
        self.floor = floor

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        return post_expect(
            posterior, model, doses, lambda p: cibp(p, gamma, self.a),
            floor=self.floor, cache_token=("cibp", self.a, gamma),
        )


class AitchisonCriterion(AllocationCriterion):
    """Posterior expectation of the logit-scale distance from the target."""

    kind = "aitchison"

    def __init__(self, floor=DEFAULT_FLOOR):
        self.floor = floor

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        return post_expect(
            posterior, model, doses, lambda p: aitchison_distance(p, gamma),
            floor=self.floor, cache_token=("aitchison", gamma),
        )


class _EwocBase(AllocationCriterion):
    def feasibility_alpha(self, n_treated, n_dlt):
        raise NotImplementedError

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        # linear in alpha, so the two hinge expectations are computed once
        # per grid and recombined as the feasibility bound evolves
        alpha = self.feasibility_alpha(n_treated, n_dlt)
        under = post_expect(
            posterior, model, doses, lambda p: np.maximum(0.0, gamma - p), cache_token=("hinge-under", gamma)
        )
        over = post_expect(
            posterior, model, doses, lambda p: np.maximum(0.0, p - gamma), cache_token=("hinge-over", gamma)
        )
        return alpha * np.asarray(under) + (1.0 - alpha) * np.asarray(over)


class EwocFixed(_EwocBase):
    """EWOC with a fixed feasibility bound."""

    kind = "ewoc-fixed"

    def __init__(self, alpha=0.25):
        self.alpha = alpha

    def feasibility_alpha(self, n_treated, n_dlt):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5]; got {self.alpha!r}")
        return float(self.alpha)


class EwocTR(_EwocBase):
    """EWOC with the patient-indexed feasibility-bound schedule."""

    kind = "ewoc-tr"

    def __init__(self, alpha_start=0.25, step=0.05, cap=0.50, plateau_end=9):
        self.alpha_start = alpha_start
        self.step = step
        self.cap = cap
        self.plateau_end = plateau_end

    def feasibility_alpha(self, n_treated, n_dlt):
        # Bound for the next patient, whose 1-based index is n_treated + 1.
        return tr_alpha(n_treated + 1, self.alpha_start, self.step, self.cap, self.plateau_end)


class EwocTdfb(_EwocBase):
    """EWOC with the toxicity-dependent feasibility bound."""

    kind = "ewoc-tdfb"

    def __init__(self, alpha_min=0.25, scale=38.0 / 3.0):
        self.alpha_min = alpha_min
        self.scale = scale

    def feasibility_alpha(self, n_treated, n_dlt):
        return tdfb_alpha(self.alpha_min, self.scale, n_treated, n_dlt)


class BlrmLoss(AllocationCriterion):
    """Posterior expected interval loss (the BLRM decision rule)."""

    kind = "blrm-loss"

    def __init__(self, table=BLRM_TABLE_033):
        self.table = table

    def per_dose_values(self, posterior, model, doses, gamma, *, n_treated=0, n_dlt=0):
        return post_expect(
            posterior, model, doses, lambda p: blrm_loss_point(p, self.table),
            cache_token=("blrm", self.table),
        )


CRITERION_KINDS = {
    cls.kind: cls
    for cls in (SquaredDistance, Cibp, AitchisonCriterion, EwocFixed, EwocTR, EwocTdfb, BlrmLoss)
}
