import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from escalate.criteria import Cibp, EwocTR, EwocTdfb, SquaredDistance
from escalate.designs import DoseEscalationDesign, InsufficientDataError, TrialCompleteError
from escalate.models import PowerModel


def quadrature_oracle_means(history, skeleton, prior_var, slope_scale, n_nodes=4001):
    """Independent posterior-mean computation (fresh quadrature code path)."""
    sd = np.sqrt(prior_var)
    beta = np.linspace(-8 * sd, 8 * sd, n_nodes)
    doses = np.asarray(skeleton) ** slope_scale
    psi = np.clip(doses[:, None] ** np.exp(beta)[None, :], 1e-300, 1 - 1e-16)
    log_w = -0.5 * beta**2 / prior_var
    for dose_idx, outcome in history:
        row = psi[dose_idx - 1]
        log_w = log_w + (np.log(row) if outcome else np.log1p(-row))
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    return psi @ w


class TestEstimatorContract:
    def test_get_set_params_roundtrip(self, everolimus_cibp):
        params = everolimus_cibp.get_params(deep=False)
        rebuilt = DoseEscalationDesign(**params)
        assert rebuilt.get_params(deep=False) == params

    def test_nested_params_exposed(self, everolimus_cibp):
        deep = everolimus_cibp.get_params(deep=True)
        assert deep["criterion__a"] == 0.3
        assert deep["model__prior_var"] == 1.9

    def test_clone_produces_independent_trial(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        fresh = clone(everolimus_cibp).fit()
        assert fresh.n_treated_ == 0
        assert everolimus_cibp.n_treated_ == 3

    def test_unfitted_access_raises(self):
        design = DoseEscalationDesign(skeleton=(0.2, 0.3, 0.4), gamma=0.3)
        with pytest.raises(NotFittedError):
            design.next_dose()

    def test_predict_is_next_dose(self, everolimus_crm):
        assert everolimus_crm.predict() == everolimus_crm.next_dose() == 1


class TestAllocation:
    def test_first_cohort_forced_to_start_dose(self, everolimus_cibp):
        assert everolimus_cibp.next_dose() == 1
        other = clone(everolimus_cibp).set_params(start_dose=2).fit()
        assert other.next_dose() == 2

    def test_no_skip_blocks_global_minimiser(self, everolimus_crm):
        # after a clean first cohort the top dose scores best, but only one
        # level of escalation is admissible
        everolimus_crm.record_cohort(1, [0, 0, 0])
        values = everolimus_crm.criterion_values()
        assert values.argmin() == 2
        assert everolimus_crm.next_dose() == 2

    def test_skipping_allowed_when_disabled(self, everolimus_crm):
        free = clone(everolimus_crm).set_params(no_skip=False).fit()
        free.record_cohort(1, [0, 0, 0])
        assert free.next_dose() == 3

    def test_conduct_trajectory_matches_published_narrative(self, everolimus_crm, everolimus_cibp):
        for design in (everolimus_crm, everolimus_cibp):
            design.record_cohort(1, [0, 0, 0])
            assert design.next_dose() == 2
        everolimus_crm.record_cohort(2, [1, 0, 0])
        everolimus_cibp.record_cohort(2, [1, 0, 0])
        assert everolimus_crm.next_dose() == 2   # stays after 1/3 DLT
        assert everolimus_cibp.next_dose() == 1  # de-escalates

    def test_tie_breaks_to_lower_dose(self, everolimus_crm, monkeypatch):
        everolimus_crm.record_cohort(1, [0, 0, 0])
        monkeypatch.setattr(everolimus_crm, "criterion_values", lambda: np.array([0.5, 0.5, 0.5]))
        assert everolimus_crm.next_dose() == 1

    def test_smaller_asymmetry_never_allocates_higher(self, everolimus_cibp):
        # identical history prefix, identical posterior inputs: the more
        # conservative penalisation cannot recommend a strictly higher dose
        template = clone(everolimus_cibp).set_params(max_patients=30)
        for k1 in range(4):
            for k2 in range(4):
                history_doses = [1] * 3 + [2] * 3
                history_outcomes = [1] * k1 + [0] * (3 - k1) + [1] * k2 + [0] * (3 - k2)
                recs = {}
                for a in (0.3, 0.5):
                    d = clone(template).set_params(criterion=Cibp(a=a, floor=1.2e-6)).fit(
                        history_doses, history_outcomes
                    )
                    recs[a] = d.next_dose()
                assert recs[0.3] <= recs[0.5], (k1, k2, recs)


class TestRecording:
    def test_cohort_advances_counters(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 1, 0])
        assert everolimus_cibp.n_treated_ == 3
        assert everolimus_cibp.n_dlt_ == 1
        assert everolimus_cibp.highest_tried_ == 1

    def test_history_roundtrip(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 1, 0])
        everolimus_cibp.record_cohort(2, [1, 1, 0])
        assert everolimus_cibp.history_ == [(1, 0), (1, 1), (1, 0), (2, 1), (2, 1), (2, 0)]

    def test_posterior_equals_batch_replay(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 0, 1])
        everolimus_cibp.record_cohort(2, [1, 0, 0])
        doses = [d for d, _ in everolimus_cibp.history_]
        outcomes = [y for _, y in everolimus_cibp.history_]
        replay = clone(everolimus_cibp).fit(doses, outcomes)
        assert np.array_equal(replay.posterior_.weights, everolimus_cibp.posterior_.weights)

    def test_rejects_overfull_cohort(self, everolimus_cibp):
        everolimus_cibp.set_params(max_patients=5).fit()
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        with pytest.raises(TrialCompleteError):
            everolimus_cibp.record_cohort(2, [0, 0, 0])

    def test_rejects_recording_after_termination(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        everolimus_cibp.terminate()
        with pytest.raises(TrialCompleteError):
            everolimus_cibp.record_cohort(2, [0, 0, 0])

    def test_rejects_bad_dose_index(self, everolimus_cibp):
        with pytest.raises(ValueError):
            everolimus_cibp.record_cohort(4, [0, 0, 0])

    def test_rejects_non_binary_outcomes(self, everolimus_cibp):
        with pytest.raises(ValueError):
            everolimus_cibp.record_cohort(1, [0, 2, 0])


class TestCompletion:
    def test_fresh_trial_not_complete(self, everolimus_cibp):
        assert not everolimus_cibp.is_complete()

    def test_complete_at_max_patients(self, everolimus_cibp):
        everolimus_cibp.set_params(max_patients=3).fit()
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        assert everolimus_cibp.is_complete()
        with pytest.raises(TrialCompleteError):
            everolimus_cibp.next_dose()

    def test_external_termination_allows_partial_selection(self, everolimus_cibp):
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        everolimus_cibp.terminate()
        assert everolimus_cibp.is_complete()
        assert everolimus_cibp.select_mtd() in (1, 2, 3)

    def test_truncated_final_cohort(self, everolimus_cibp):
        everolimus_cibp.set_params(max_patients=4).fit()
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        everolimus_cibp.record_cohort(everolimus_cibp.next_dose(), [0])
        assert everolimus_cibp.is_complete()
        assert everolimus_cibp.n_treated_ == 4


class TestSelectMtd:
    def test_requires_data(self, everolimus_cibp):
        with pytest.raises(InsufficientDataError):
            everolimus_cibp.select_mtd()

    def test_exact_target_dose_wins(self, everolimus_cibp, monkeypatch):
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        monkeypatch.setattr(everolimus_cibp, "posterior_mean_tox", lambda: np.array([0.1, 0.3, 0.5]))
        assert everolimus_cibp.select_mtd() == 2

    def test_tie_goes_to_lower_dose(self, everolimus_cibp, monkeypatch):
        everolimus_cibp.record_cohort(1, [0, 0, 0])
        monkeypatch.setattr(everolimus_cibp, "posterior_mean_tox", lambda: np.array([0.25, 0.35, 0.5]))
        assert everolimus_cibp.select_mtd() == 1

    def test_brute_force_on_random_histories(self, rng):
        design = DoseEscalationDesign(
            skeleton=(0.2, 0.3, 0.4),
            gamma=0.3,
            model=PowerModel(prior_var=1.9, slope_scale=0.44),
            criterion=SquaredDistance(),
            max_patients=60,
        )
        for _ in range(100):
            n = int(rng.integers(1, 15))
            doses = rng.integers(1, 4, n).tolist()
            outcomes = rng.integers(0, 2, n).tolist()
            fitted = clone(design).fit(doses, outcomes)
            means = quadrature_oracle_means(list(zip(doses, outcomes)), (0.2, 0.3, 0.4), 1.9, 0.44)
            expected = int(np.argmin((means - 0.3) ** 2)) + 1
            assert fitted.select_mtd() == expected

    def test_full_conduct_replay_concludes_at_lowest_dose(self, everolimus_crm, everolimus_cibp):
        # CRM path: 7 cohorts ending in de-escalation to the lowest dose
        crm_trace = [(1, [0, 0, 0]), (2, [1, 0, 0]), (2, [0, 0, 0]), (3, [1, 1, 1]),
                     (2, [1, 0, 0]), (2, [1, 1, 0]), (1, [1, 1, 1])]
        for dose, outcomes in crm_trace:
            everolimus_crm.record_cohort(dose, outcomes)
        assert everolimus_crm.is_complete()
        assert everolimus_crm.select_mtd() == 1
        # conservative path terminates early with the same conclusion
        for dose, outcomes in [(1, [0, 0, 0]), (2, [1, 0, 0]), (1, [1, 1, 1])]:
            everolimus_cibp.record_cohort(dose, outcomes)
        everolimus_cibp.terminate()
        assert everolimus_cibp.select_mtd() == 1


class TestFeasibilityBoundCriteria:
    def test_tr_alpha_depends_on_patient_count(self, everolimus_cibp):
        design = clone(everolimus_cibp).set_params(criterion=EwocTR(), cohort_size=1, max_patients=30).fit()
        assert design.criterion_.feasibility_alpha(0, 0) == 0.25
        assert design.criterion_.feasibility_alpha(9, 0) == pytest.approx(0.30)
        assert design.criterion_.feasibility_alpha(19, 0) == 0.50

    def test_tdfb_alpha_tracks_non_dlt_count(self, everolimus_cibp):
        design = clone(everolimus_cibp).set_params(criterion=EwocTdfb(), cohort_size=1, max_patients=30).fit()
        low = design.criterion_.feasibility_alpha(10, 8)
        high = design.criterion_.feasibility_alpha(10, 0)
        assert 0.25 <= low <= high <= 0.5
