"""Monte Carlo study runner and operating-characteristic metrics.

Replication ``r`` of study cell ``c`` (one design on one scenario) draws its
outcomes from an independent RNG substream seeded by ``(master_seed, c, r)``,
so results are bit-identical regardless of how replications are chunked
across worker processes.  Aggregation is integer counting, which keeps the
emitted CSV/JSON reports byte-stable for a fixed configuration and seed.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .validation import check_index, check_probability_vector

CHUNK_REPS = 250


@dataclass(frozen=True)
class ScenarioSpec:
    """True per-dose DLT probabilities with the designated MTD index."""

    name: str
    true_tox: tuple
    mtd_index: int

    def __post_init__(self):
        arr = check_probability_vector(self.true_tox, f"scenario {self.name!r} true_tox")
        if np.any(np.diff(arr) < 0):
            raise ValueError(f"scenario {self.name!r} true_tox must be non-decreasing")
        check_index(self.mtd_index, f"scenario {self.name!r} mtd_index", arr.size)
        object.__setattr__(self, "true_tox", tuple(float(v) for v in arr))

    def validate_for_gamma(self, gamma):
        """Check the designated MTD is (one of) the closest dose(s) to gamma."""
        dist = np.abs(np.asarray(self.true_tox) - gamma)
        closest = np.flatnonzero(dist <= dist.min() + 1e-12) + 1
        if self.mtd_index not in closest:
            raise ValueError(
                f"scenario {self.name!r}: mtd_index={self.mtd_index} but dose(s) {closest.tolist()} "
                f"are closest to gamma={gamma}"
            )
        if closest.size > 1:
            warnings.warn(
                f"scenario {self.name!r}: doses {closest.tolist()} tie as closest to gamma={gamma}",
                stacklevel=2,
            )


@dataclass(frozen=True)
class CohortRecord:
    dose: int
    outcomes: tuple
    alpha: float | None = None


@dataclass(frozen=True)
class TrialResult:
    selected: int
    dlt_count: int
    n_treated: int
    trace: tuple


def rng_for(master_seed, cell_index, rep):
    """Deterministic, platform-independent substream for one replication."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(master_seed, cell_index, rep)))


def simulate_trial(scenario, design, rng):
    """Run one trial of ``design`` against ``scenario`` to completion.

    Each patient's outcome is an independent Bernoulli draw at the true
    toxicity of the allocated dose.  The returned trace records one entry
    per cohort, including the feasibility bound for criteria that use one.
    """
    trial = clone(design).fit()
    if len(scenario.true_tox) != trial.n_doses_:
        raise ValueError(
            f"scenario {scenario.name!r} has {len(scenario.true_tox)} doses but the design has {trial.n_doses_}"
        )
    trace = []
    while not trial.is_complete():
        dose = trial.next_dose()
        size = min(trial.cohort_size, trial.max_patients - trial.n_treated_)
        alpha = None
        if hasattr(trial.criterion_, "feasibility_alpha"):
            alpha = trial.criterion_.feasibility_alpha(trial.n_treated_, trial.n_dlt_)
        outcomes = (rng.random(size) < scenario.true_tox[dose - 1]).astype(int)
        trial.record_cohort(dose, outcomes)
        trace.append(CohortRecord(dose=dose, outcomes=tuple(int(o) for o in outcomes), alpha=alpha))
    return TrialResult(
        selected=trial.select_mtd(),
        dlt_count=trial.n_dlt_,
        n_treated=trial.n_treated_,
        trace=tuple(trace),
    )


def _run_chunk(args):
    design, scenario, master_seed, cell_index, rep_start, rep_stop = args
    n_doses = len(scenario.true_tox)
    selections = np.zeros(n_doses, dtype=np.int64)
    dlt_total = 0
    patients_total = 0
    for rep in range(rep_start, rep_stop):
        result = simulate_trial(scenario, design, rng_for(master_seed, cell_index, rep))
        selections[result.selected - 1] += 1
        dlt_total += result.dlt_count
        patients_total += result.n_treated
    return cell_index, selections, dlt_total, patients_total


def accuracy_index(selection_probs, scenario, gamma):
    """Selection-quality index ``1 - m * sum(d_i * pi_i) / sum(d_i)``.

    ``d_i = (p_i - gamma)^2``.  Equals 1 when all mass sits on a dose with
    true toxicity exactly at the target, 0 for uniform selection, and can
    be negative for concentrations on badly misplaced doses.
    """
    pi = np.asarray(selection_probs, dtype=float)
    p = np.asarray(scenario.true_tox, dtype=float)
    if pi.shape != p.shape:
        raise ValueError("selection_probs and scenario must have the same number of doses")
    if abs(pi.sum() - 1.0) > 1e-8:
        raise ValueError(f"selection_probs must sum to 1; got {pi.sum()!r}")
    denom = ((p - gamma) ** 2).sum()
    if denom == 0.0:
        raise ValueError("degenerate scenario: every dose sits exactly at the target")
    return float(1.0 - p.size * ((p - gamma) ** 2 * pi).sum() / denom)


@dataclass(frozen=True)
class CellResult:
    design: str
    scenario: str
    reps: int
    selection_counts: tuple
    dlt_total: int
    patients_total: int
    selection_pct: tuple
    pcs: float
    dlt_pct: float
    mean_dlt_count: float
    accuracy: float


@dataclass
class StudyReport:
    cells: list
    reps: int
    master_seed: int
    design_names: list
    scenario_names: list
    summary: dict = field(default_factory=dict)
    runtime_seconds: float | None = None  # manifest-only; never serialized in the report


def run_study(designs, scenarios, reps, master_seed, parallelism=None):
    """Operating characteristics for every (design, scenario) cell.

    ``designs`` is a list of ``(name, DoseEscalationDesign)`` pairs.  The
    report is independent of ``parallelism``; only wall time changes.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1; got {reps!r}")
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative; got {master_seed!r}")
    designs = list(designs)
    scenarios = list(scenarios)
    for _, design in designs:
        for scenario in scenarios:
            scenario.validate_for_gamma(design.gamma)

    tasks = []
    for d_idx, (_, design) in enumerate(designs):
        for s_idx, scenario in enumerate(scenarios):
            cell = d_idx * len(scenarios) + s_idx
            for start in range(0, reps, CHUNK_REPS):
                tasks.append((design, scenario, master_seed, cell, start, min(start + CHUNK_REPS, reps)))

    n_cells = len(designs) * len(scenarios)
    selections = [None] * n_cells
    dlt_totals = np.zeros(n_cells, dtype=np.int64)
    patient_totals = np.zeros(n_cells, dtype=np.int64)

    if parallelism and parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_chunk, tasks, chunksize=1))
    else:
        results = [_run_chunk(t) for t in tasks]
    for cell, sel, dlt, patients in results:
        selections[cell] = sel if selections[cell] is None else selections[cell] + sel
        dlt_totals[cell] += dlt
        patient_totals[cell] += patients

    cells = []
    for d_idx, (name, design) in enumerate(designs):
        for s_idx, scenario in enumerate(scenarios):
            cell = d_idx * len(scenarios) + s_idx
            counts = selections[cell]
            pct = counts / reps * 100.0
            cells.append(
                CellResult(
                    design=name,
                    scenario=scenario.name,
                    reps=reps,
                    selection_counts=tuple(int(c) for c in counts),
                    dlt_total=int(dlt_totals[cell]),
                    patients_total=int(patient_totals[cell]),
                    selection_pct=tuple(float(p) for p in pct),
                    pcs=float(pct[scenario.mtd_index - 1]),
                    dlt_pct=float(dlt_totals[cell] / patient_totals[cell] * 100.0),
                    mean_dlt_count=float(dlt_totals[cell] / reps),
                    accuracy=accuracy_index(counts / reps, scenario, design.gamma),
                )
            )
    report = StudyReport(
        cells=cells,
        reps=reps,
        master_seed=master_seed,
        design_names=[name for name, _ in designs],
        scenario_names=[s.name for s in scenarios],
    )
    report.summary = summarize(report)
    return report


def summarize(report):
    """Per-design averages across scenarios.

    The geometric mean of the accuracy indices is reported only when all of
    them are strictly positive; otherwise it is flagged unavailable.
    """
    out = {}
    for name in report.design_names:
        rows = [c for c in report.cells if c.design == name]
        acc = np.array([c.accuracy for c in rows])
        geo = float(np.exp(np.mean(np.log(acc)))) if np.all(acc > 0) else None
        out[name] = {
            "mean_accuracy": float(acc.mean()),
            "geometric_mean_accuracy": geo,
            "geometric_mean_available": bool(np.all(acc > 0)),
            "mean_dlt_count": float(np.mean([c.mean_dlt_count for c in rows])),
            "mean_dlt_pct": float(np.mean([c.dlt_pct for c in rows])),
        }
    return out


def report_to_dict(report, config_echo=None):
    """JSON-ready dict; excludes wall time so reruns are byte-identical."""
    payload = {
        "reps": report.reps,
        "seed": report.master_seed,
        "designs": report.design_names,
        "scenarios": report.scenario_names,
        "cells": [
            {
                "design": c.design,
                "scenario": c.scenario,
                "reps": c.reps,
                "selection_counts": list(c.selection_counts),
                "selection_pct": list(c.selection_pct),
                "pcs": c.pcs,
                "dlt_total": c.dlt_total,
                "patients_total": c.patients_total,
                "dlt_pct": c.dlt_pct,
                "mean_dlt_count": c.mean_dlt_count,
                "accuracy": c.accuracy,
            }
            for c in report.cells
        ],
        "summary": report.summary,
    }
    if config_echo is not None:
        payload["config"] = config_echo
    return payload


def write_report_json(report, path, config_echo=None):
    with open(path, "w") as fh:
        json.dump(report_to_dict(report, config_echo), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report, path):
    """Long-format table: one row per (design, scenario, dose)."""
    with open(path, "w") as fh:
        fh.write("design,scenario,dose,selection_pct,pcs,dlt_pct,accuracy,reps,seed\n")
        for c in report.cells:
            for dose, pct in enumerate(c.selection_pct, start=1):
                fh.write(
                    f"{c.design},{c.scenario},{dose},{pct!r},{c.pcs!r},{c.dlt_pct!r},"
                    f"{c.accuracy!r},{c.reps},{report.master_seed}\n"
                )
