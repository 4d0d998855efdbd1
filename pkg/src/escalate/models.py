"""Dose-toxicity model functions and skeleton calibration.

Two working models are provided:

* a one-parameter power model ``p = d^exp(beta)`` with a normal prior on
  ``beta`` (the workhorse of continual-reassessment designs), and
* a two-parameter logistic model ``p = expit(b1 + b2 * d)`` with a bivariate
  normal prior, optionally placed on ``(b1, log b2)`` so the slope stays
  positive and dose-toxicity curves stay monotone.

Standardised dose values are derived from the skeleton (the vector of prior
DLT-probability guesses): the power model uses the skeleton values directly,
so the curve at ``beta = 0`` reproduces the prior guesses, and the logistic
model uses their logits.  ``calibrate_skeleton`` builds a skeleton from an
indifference-interval half-width, anchoring the prior MTD at the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit
from scipy.stats import multivariate_normal
from sklearn.base import BaseEstimator

from .validation import (
    check_increasing,
    check_index,
    check_open_unit,
    check_positive_int,
    check_probability_vector,
)

# Grid half-width in prior standard deviations per parameter dimension.
GRID_SPAN_SD = 8.0


@dataclass(frozen=True)
class Skeleton:
    """Ordered prior DLT-probability guesses, one per dose.

    ``prior_mtd_index`` is the 1-based index of the dose believed, a priori,
    to sit at the target toxicity.
    """

    values: tuple
    prior_mtd_index: int

    def __post_init__(self):
        arr = check_probability_vector(self.values, "skeleton values")
        check_increasing(arr, "skeleton values")
        check_index(self.prior_mtd_index, "prior_mtd_index", arr.size)
        object.__setattr__(self, "values", tuple(float(v) for v in arr))

    def __len__(self):
        return len(self.values)

    def as_array(self):
        return np.asarray(self.values, dtype=float)


def power_prob(dose, beta):
    """DLT probability under the one-parameter power model, ``d^exp(beta)``.

    ``dose`` must lie strictly in (0, 1); ``beta`` may be a scalar or array.
    The result is strictly increasing in ``dose`` and, because the base is
    below one, strictly decreasing in ``beta``.
    """
    d = np.asarray(dose, dtype=float)
    if np.any(d <= 0.0) or np.any(d >= 1.0):
        raise ValueError(f"dose must lie strictly in (0, 1); got {dose!r}")
    b = np.asarray(beta, dtype=float)
    out = d ** np.exp(b)
    return float(out) if out.ndim == 0 else out


def logistic2_prob(dose, beta1, beta2):
    """DLT probability under the two-parameter logistic model.

    Computes ``expit(beta1 + beta2 * dose)``; saturates smoothly toward 0/1
    for extreme linear predictors instead of overflowing.
    """
    eta = np.asarray(beta1, dtype=float) + np.asarray(beta2, dtype=float) * np.asarray(dose, dtype=float)
    out = expit(eta)
    return float(out) if np.ndim(out) == 0 else out


def calibrate_skeleton(n_doses, prior_mtd, gamma, halfwidth):
    """Build a skeleton from an indifference-interval half-width.

    The prior-MTD entry is anchored at ``gamma``; neighbours follow the
    recursion in which two adjacent doses sit at ``gamma - halfwidth`` and
    ``gamma + halfwidth`` for the same model parameter:

    upward   v[i+1] = (gamma+hw) ** (log v[i] / log(gamma-hw))
    downward v[i-1] = (gamma-hw) ** (log v[i] / log(gamma+hw))

    The result is strictly increasing with all values in (0, 1).
    """
    n_doses = check_positive_int(n_doses, "n_doses")
    prior_mtd = check_index(prior_mtd, "prior_mtd", n_doses)
    gamma = check_open_unit(gamma, "gamma")
    halfwidth = float(halfwidth)
    if not 0.0 < halfwidth < min(gamma, 1.0 - gamma):
        raise ValueError(
            f"halfwidth must lie in (0, min(gamma, 1-gamma)) = (0, {min(gamma, 1.0 - gamma)}); got {halfwidth!r}"
        )
    lo, hi = gamma - halfwidth, gamma + halfwidth
    underflow = ValueError(
        "skeleton values underflow double precision; reduce halfwidth or the "
        "number of doses below the prior MTD"
    )
    values = np.empty(n_doses)
    values[prior_mtd - 1] = gamma
    for i in range(prior_mtd - 1, n_doses - 1):
        values[i + 1] = hi ** (math.log(values[i]) / math.log(lo))
        if values[i + 1] >= 1.0:
            raise underflow
    for i in range(prior_mtd - 1, 0, -1):
        values[i - 1] = lo ** (math.log(values[i]) / math.log(hi))
        if values[i - 1] <= 0.0:
            # wide halfwidths shrink low-dose guesses double-exponentially;
            # the exact value is positive but below the tiniest float
            raise underflow
    return Skeleton(values=tuple(values), prior_mtd_index=prior_mtd)


class PowerModel(BaseEstimator):
    """One-parameter power model with a normal prior on the exponent.

    Parameters
    ----------
    prior_mean, prior_var : float
        Normal prior on ``beta``; the conventional least-informative choice
        is mean 0 and variance 1.34.
    slope_scale : float
        Exponent applied to the skeleton values when forming standardised
        doses (``d_i = s_i ** slope_scale``).  With the default 1.0 the
        curve at ``beta = 0`` equals the skeleton; values below 1 mimic
        implementations that rescale doses by the prior mean of
        ``exp(beta)``.
    """

    n_params = 1

    def __init__(self, prior_mean=0.0, prior_var=1.34, slope_scale=1.0):
        self.prior_mean = prior_mean
        self.prior_var = prior_var
        self.slope_scale = slope_scale

    def _check(self):
        if self.prior_var <= 0:
            raise ValueError(f"prior_var must be positive; got {self.prior_var!r}")
        if self.slope_scale <= 0:
            raise ValueError(f"slope_scale must be positive; got {self.slope_scale!r}")

    def standardized_doses(self, skeleton: Skeleton):
        self._check()
        return skeleton.as_array() ** float(self.slope_scale)

    def grid(self, n_nodes):
        """Equally spaced nodes over mean +- 8 sd with prior log-density."""
        self._check()
        n_nodes = check_positive_int(n_nodes, "n_nodes")
        sd = math.sqrt(self.prior_var)
        nodes = np.linspace(self.prior_mean - GRID_SPAN_SD * sd, self.prior_mean + GRID_SPAN_SD * sd, n_nodes)
        log_prior = -0.5 * (nodes - self.prior_mean) ** 2 / self.prior_var
        return nodes.reshape(-1, 1), log_prior

    def prob(self, doses, nodes):
        """Toxicity matrix with one row per dose, one column per node."""
        d = np.atleast_1d(np.asarray(doses, dtype=float))
        return d[:, None] ** np.exp(nodes[:, 0])[None, :]


class TwoParamLogisticModel(BaseEstimator):
    """Two-parameter logistic model with a bivariate normal prior.

    With ``log_slope=True`` (default) the prior is placed on
    ``(b1, log b2)``, so every parameter node has a positive slope and the
    induced curves are monotone in dose.  Standardised doses are the logits
    of the skeleton values, which anchors the prior-median curve at the
    skeleton when the prior means are zero.
    """

    n_params = 2

    def __init__(self, prior_mean=(0.0, 0.0), prior_cov=((1.34, 0.0), (0.0, 1.0)), log_slope=True):
        self.prior_mean = prior_mean
        self.prior_cov = prior_cov
        self.log_slope = log_slope

    def _checked_prior(self):
        mean = np.asarray(self.prior_mean, dtype=float)
        cov = np.asarray(self.prior_cov, dtype=float)
        if mean.shape != (2,):
            raise ValueError(f"prior_mean must have length 2; got {self.prior_mean!r}")
        if cov.shape != (2, 2):
            raise ValueError(f"prior_cov must be 2x2; got {self.prior_cov!r}")
        if not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) <= 0):
            raise ValueError("prior_cov must be symmetric positive-definite")
        return mean, cov

    def standardized_doses(self, skeleton: Skeleton):
        return logit(skeleton.as_array())

    def grid(self, n_nodes):
        """Tensor grid, ``n_nodes`` points per dimension over mean +- 8 sd."""
        mean, cov = self._checked_prior()
        n_nodes = check_positive_int(n_nodes, "n_nodes")
        axes = [
            np.linspace(mean[k] - GRID_SPAN_SD * math.sqrt(cov[k, k]), mean[k] + GRID_SPAN_SD * math.sqrt(cov[k, k]), n_nodes)
            for k in range(2)
        ]
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        nodes = np.column_stack([g1.ravel(), g2.ravel()])
        log_prior = multivariate_normal(mean=mean, cov=cov).logpdf(nodes)
        return nodes, log_prior

    def prob(self, doses, nodes):
        d = np.atleast_1d(np.asarray(doses, dtype=float))
        slope = np.exp(nodes[:, 1]) if self.log_slope else nodes[:, 1]
        return expit(nodes[:, 0][None, :] + slope[None, :] * d[:, None])
