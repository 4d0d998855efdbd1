"""Sequential dose-escalation design as a scikit-learn style estimator.

``DoseEscalationDesign`` holds the design parameters (skeleton, target,
model, allocation criterion, cohorting rules); ``fit``/``partial_fit``
ingest the accrued (dose, outcome) history; ``next_dose``/``predict``
recommend the next allocation and ``select_mtd`` picks the final dose.
Designs are cheap to ``clone``, which is how the simulator runs thousands
of independent replicates of one configuration.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import posterior as post_ops
from .criteria import SquaredDistance, sq_distance
from .models import PowerModel, Skeleton
from .validation import check_binary_outcomes, check_index, check_open_unit, check_positive_int


class TrialCompleteError(RuntimeError):
    """Raised when an action requires an open trial but the trial is over."""


class InsufficientDataError(RuntimeError):
    """Raised when a selection is requested before any outcome is recorded."""


def _as_skeleton(skeleton, gamma):
    if isinstance(skeleton, Skeleton):
        return skeleton
    values = np.asarray(skeleton, dtype=float)
    prior_mtd = int(np.argmin(np.abs(values - gamma))) + 1
    return Skeleton(values=tuple(values), prior_mtd_index=prior_mtd)


class DoseEscalationDesign(BaseEstimator):
    """Model-based sequential dose-escalation design.

    Parameters
    ----------
    skeleton : Skeleton or sequence of float
        Prior DLT-probability guesses per dose, strictly increasing.
    gamma : float, default=0.25
        Target DLT probability, in (0, 0.5).
    model : object, default=PowerModel()
        Dose-toxicity model providing standardised doses, a parameter grid
        and a probability matrix (see :mod:`escalate.models`).
    criterion : AllocationCriterion, default=SquaredDistance()
        Rule scoring each dose from the current posterior; the admissible
        dose with the smallest score is recommended.
    cohort_size : int, default=3
        Patients allocated per decision.
    max_patients : int, default=30
        Trial sample size; a final short cohort is truncated to fit.
    no_skip : bool, default=True
        Restrict recommendations to at most one level above the highest
        dose tried so far (de-escalation is never restricted).
    start_dose : int, default=1
        1-based dose forced for the first cohort.
    grid_nodes : int, optional
        Per-dimension quadrature nodes (model default when omitted).

    Attributes
    ----------
    posterior_ : PosteriorRep
        Discretised posterior after the recorded history.
    history_ : list of (dose_index, outcome)
        Per-patient record in administration order (1-based dose indices).
    n_treated_, n_dlt_, highest_tried_ : int
        Running totals; ``highest_tried_`` is 0 until the first cohort.

    Examples
    --------
    >>> design = DoseEscalationDesign(skeleton=(0.2, 0.3, 0.4), gamma=0.3)
    >>> design.fit()                      # fresh trial
    DoseEscalationDesign(gamma=0.3, skeleton=(0.2, 0.3, 0.4))
    >>> design.next_dose()                # first cohort forced to start_dose
    1
    >>> design.record_cohort(1, [0, 0, 0]).next_dose()
    2
    """

    def __init__(
        self,
        skeleton,
        gamma=0.25,
        model=None,
        criterion=None,
        cohort_size=3,
        max_patients=30,
        no_skip=True,
        start_dose=1,
        grid_nodes=None,
    ):
        self.skeleton = skeleton
        self.gamma = gamma
        self.model = model
        self.criterion = criterion
        self.cohort_size = cohort_size
        self.max_patients = max_patients
        self.no_skip = no_skip
        self.start_dose = start_dose
        self.grid_nodes = grid_nodes

    # -- lifecycle -----------------------------------------------------

    def fit(self, doses=None, outcomes=None):
        """Reset the trial and replay ``(doses, outcomes)`` if given.

        ``doses`` are 1-based per-patient dose indices; ``outcomes`` are
        the matching binary DLT indicators.
        """
        check_open_unit(self.gamma, "gamma", upper=0.5)
        check_positive_int(self.cohort_size, "cohort_size")
        check_positive_int(self.max_patients, "max_patients")
        self.model_ = self.model if self.model is not None else PowerModel()
        self.criterion_ = self.criterion if self.criterion is not None else SquaredDistance()
        self.skeleton_ = _as_skeleton(self.skeleton, self.gamma)
        self.n_doses_ = len(self.skeleton_)
        check_index(self.start_dose, "start_dose", self.n_doses_)
        self.doses_ = self.model_.standardized_doses(self.skeleton_)
        self.prior_ = post_ops.build_grid(self.model_, self.grid_nodes)
        self.posterior_ = self.prior_
        self.history_ = []
        self.n_treated_ = 0
        self.n_dlt_ = 0
        self.highest_tried_ = 0
        self.terminated_ = False
        if doses is not None or outcomes is not None:
            self.partial_fit(doses, outcomes)
        return self

    def partial_fit(self, doses, outcomes):
        """Append per-patient observations to the trial history."""
        if not hasattr(self, "posterior_"):
            self.fit()
        doses = np.atleast_1d(np.asarray(doses, dtype=int))
        outcomes = check_binary_outcomes(np.atleast_1d(outcomes))
        if doses.shape != outcomes.shape:
            raise ValueError(f"doses and outcomes differ in length ({doses.size} vs {outcomes.size})")
        if self.terminated_:
            raise TrialCompleteError("trial was terminated; no further outcomes can be recorded")
        if self.n_treated_ + doses.size > self.max_patients:
            raise TrialCompleteError(
                f"recording {doses.size} outcomes would exceed max_patients={self.max_patients} "
                f"(already treated {self.n_treated_})"
            )
        for dose, outcome in zip(doses, outcomes):
            dose = check_index(int(dose), "dose index", self.n_doses_)
            self.posterior_ = post_ops.update(self.posterior_, self.model_, self.doses_[dose - 1], outcome)
            self.history_.append((dose, int(outcome)))
            self.n_treated_ += 1
            self.n_dlt_ += int(outcome)
            self.highest_tried_ = max(self.highest_tried_, dose)
        return self

    def record_cohort(self, dose, outcomes):
        """Record one cohort treated at a single dose."""
        outcomes = np.atleast_1d(outcomes)
        return self.partial_fit(np.full(outcomes.size, int(dose)), outcomes)

    def terminate(self):
        """Mark the trial as externally stopped (a clinician's decision)."""
        self._require_fitted()
        self.terminated_ = True
        return self

    # -- queries ---------------------------------------------------------

    def is_complete(self):
        self._require_fitted()
        return self.terminated_ or self.n_treated_ >= self.max_patients

    def posterior_mean_tox(self):
        """Posterior mean DLT probability at every dose."""
        self._require_fitted()
        return post_ops.post_mean_tox(self.posterior_, self.model_, self.doses_)

    def criterion_values(self):
        """Allocation-criterion value at every dose (lower is better)."""
        self._require_fitted()
        return np.asarray(
            self.criterion_.per_dose_values(
                self.posterior_, self.model_, self.doses_, self.gamma,
                n_treated=self.n_treated_, n_dlt=self.n_dlt_,
            ),
            dtype=float,
        )

    def next_dose(self):
        """Recommended 1-based dose for the next cohort.

        The first cohort is forced to ``start_dose``; afterwards the
        admissible dose (no skipping when ``no_skip``) minimising the
        criterion is returned, ties going to the lower dose.
        """
        self._require_fitted()
        if self.is_complete():
            raise TrialCompleteError("trial is complete; no further allocation")
        if self.n_treated_ == 0:
            return int(self.start_dose)
        values = self.criterion_values()
        if self.no_skip:
            top = min(self.n_doses_, self.highest_tried_ + 1)
            values = values[:top]
        return int(np.argmin(values)) + 1

    def predict(self):
        """Alias for :meth:`next_dose`, for estimator-style call sites."""
        return self.next_dose()

    def select_mtd(self):
        """Final MTD: squared distance on posterior means over all doses."""
        self._require_fitted()
        if self.n_treated_ == 0:
            raise InsufficientDataError("cannot select an MTD before any outcome is recorded")
        return int(np.argmin(sq_distance(self.posterior_mean_tox(), self.gamma))) + 1

    def _require_fitted(self):
        if not hasattr(self, "posterior_"):
            raise NotFittedError("this DoseEscalationDesign has not been fitted; call fit() first")
