"""HTTP conduct service: interactive trials over an append-only event log.

Every trial session is one JSON-lines file under the data directory; the
in-memory state is always a pure fold of that file, so killing and
restarting the process reproduces every session exactly.  Writes are
fsynced before the response is sent.
"""

from __future__ import annotations

import json
import os
import re
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .config import ConfigError, parse_design, resolved_design_dict
from .validation import check_binary_outcomes

_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


def _now():
    return datetime.now(timezone.utc).isoformat()


@dataclass
class TrialSession:
    """One trial: resolved design payload, event log, derived design state."""

    trial_id: str
    design_payload: dict
    design: object
    events: list = field(default_factory=list)

    @property
    def n_cohorts(self):
        return sum(1 for e in self.events if e["type"] == "cohort")

    def admissible_doses(self):
        design = self.design
        if design.n_treated_ == 0:
            return [int(design.start_dose)]
        top = min(design.n_doses_, design.highest_tried_ + 1) if design.no_skip else design.n_doses_
        return list(range(1, top + 1))

    def view(self):
        design = self.design
        complete = design.is_complete()
        has_data = design.n_treated_ > 0
        return {
            "id": self.trial_id,
            "design": self.design_payload,
            "patients_treated": design.n_treated_,
            "dlt_total": design.n_dlt_,
            "highest_tried": design.highest_tried_,
            "complete": complete,
            "terminated": design.terminated_,
            "history": [[dose, outcome] for dose, outcome in design.history_],
            "cohorts": [e for e in self.events if e["type"] == "cohort"],
            "posterior_mean_tox": [float(x) for x in design.posterior_mean_tox()],
            "criterion_values": [float(x) for x in design.criterion_values()],
            "admissible_doses": self.admissible_doses() if not complete else [],
            "recommendation": None if complete else design.next_dose(),
            "mtd": design.select_mtd() if (complete and has_data) else None,
        }


def _fold(trial_id, events):
    created = events[0]
    if created["type"] != "created":
        raise ValueError(f"corrupt event log for {trial_id}: first event is {created['type']!r}")
    _, design = parse_design(created["design"], where=f"trial {trial_id} design")
    session = TrialSession(trial_id=trial_id, design_payload=created["design"], design=design, events=list(events))
    for event in events[1:]:
        if event["type"] == "cohort":
            design.record_cohort(event["dose"], event["outcomes"])
        elif event["type"] == "terminated":
            design.terminate()
        else:
            raise ValueError(f"corrupt event log for {trial_id}: unknown event {event['type']!r}")
    return session


class TrialStore:
    """Durable session registry; one append-only JSONL file per trial."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions = {}
        self._locks = {}
        self._registry_lock = threading.Lock()

    def _path(self, trial_id):
        return self.data_dir / f"{trial_id}.jsonl"

    def lock_for(self, trial_id):
        with self._registry_lock:
            return self._locks.setdefault(trial_id, threading.Lock())

    def _append(self, trial_id, event):
        with open(self._path(trial_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def exists(self, trial_id):
        return trial_id in self._sessions or self._path(trial_id).exists()

    def create(self, design_payload, trial_id=None):
        trial_id = trial_id or uuid.uuid4().hex[:12]
        if not _ID_RE.match(trial_id):
            raise ConfigError(f"trial id must match {_ID_RE.pattern}; got {trial_id!r}")
        name, design = parse_design(design_payload, where="design")
        resolved = resolved_design_dict(name, design)
        with self._registry_lock:
            if trial_id in self._sessions or self._path(trial_id).exists():
                raise FileExistsError(trial_id)
            self._locks.setdefault(trial_id, threading.Lock())
        event = {"type": "created", "design": resolved, "time": _now()}
        self._append(trial_id, event)
        session = TrialSession(trial_id=trial_id, design_payload=resolved, design=design, events=[event])
        self._sessions[trial_id] = session
        return session

    def get(self, trial_id):
        session = self._sessions.get(trial_id)
        if session is not None:
            return session
        path = self._path(trial_id)
        if not path.exists():
            raise KeyError(trial_id)
        events = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        session = _fold(trial_id, events)
        self._sessions[trial_id] = session
        return session

    def post_cohort(self, trial_id, dose, outcomes, override=False, cohort_index=None):
        with self.lock_for(trial_id):
            session = self.get(trial_id)
            design = session.design
            if design.is_complete():
                raise TrialClosed("trial is complete; no further cohorts can be recorded")
            if cohort_index is not None and cohort_index != session.n_cohorts:
                raise SlotConflict(
                    f"cohort_index {cohort_index} does not match the next slot {session.n_cohorts}"
                )
            outcomes = [int(o) for o in check_binary_outcomes(outcomes)]
            if design.n_treated_ + len(outcomes) > design.max_patients:
                raise TrialClosed(
                    f"recording {len(outcomes)} outcomes would exceed max_patients={design.max_patients}"
                )
            dose = int(dose)
            if dose < 1 or dose > design.n_doses_:
                raise ConfigError(f"dose must lie in [1, {design.n_doses_}]; got {dose}")
            recommended = design.next_dose()
            if dose not in session.admissible_doses() and not override:
                raise Inadmissible(
                    f"dose {dose} is not admissible (allowed: {session.admissible_doses()}); "
                    "set override=true to record it anyway"
                )
            event = {
                "type": "cohort",
                "index": session.n_cohorts,
                "dose": dose,
                "outcomes": outcomes,
                "recommended": recommended,
                "override": dose != recommended,
                "time": _now(),
            }
            self._append(trial_id, event)
            design.record_cohort(dose, outcomes)
            session.events.append(event)
            return session

    def terminate(self, trial_id, reason):
        with self.lock_for(trial_id):
            session = self.get(trial_id)
            if not session.design.terminated_:
                event = {"type": "terminated", "reason": reason, "time": _now()}
                self._append(trial_id, event)
                session.design.terminate()
                session.events.append(event)
            return session


class TrialClosed(RuntimeError):
    pass


class SlotConflict(RuntimeError):
    pass


class Inadmissible(RuntimeError):
    pass


def create_app(data_dir=None):
    data_dir = data_dir or os.environ.get("ESCALATE_DATA_DIR", "escalate-data")
    store = TrialStore(data_dir)
    app = FastAPI(title="escalate conduct service", version="1")
    # the conduct console may be served from a different origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    app.state.store = store

    @app.post("/v1/trials", status_code=201)
    def create_trial(payload: dict = Body(...)):
        design_payload = payload.get("design")
        if design_payload is None:
            raise HTTPException(400, "body must contain a 'design' object")
        try:
            session = store.create(design_payload, trial_id=payload.get("id"))
        except FileExistsError as exc:
            raise HTTPException(409, f"trial id {exc.args[0]!r} already exists") from exc
        except (ConfigError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return session.view()

    def _session_or_404(trial_id):
        try:
            return store.get(trial_id)
        except KeyError:
            raise HTTPException(404, f"no trial with id {trial_id!r}") from None

    @app.get("/v1/trials/{trial_id}")
    def get_state(trial_id: str):
        return _session_or_404(trial_id).view()

    @app.get("/v1/trials/{trial_id}/recommendation")
    def get_recommendation(trial_id: str):
        view = _session_or_404(trial_id).view()
        return {
            "id": trial_id,
            "complete": view["complete"],
            "recommendation": view["recommendation"],
            "mtd": view["mtd"],
        }

    @app.post("/v1/trials/{trial_id}/cohorts")
    def post_cohort(trial_id: str, payload: dict = Body(...)):
        _session_or_404(trial_id)
        for key in ("dose", "outcomes"):
            if key not in payload:
                raise HTTPException(400, f"body must contain {key!r}")
        try:
            session = store.post_cohort(
                trial_id,
                payload["dose"],
                payload["outcomes"],
                override=bool(payload.get("override", False)),
                cohort_index=payload.get("cohort_index"),
            )
        except (TrialClosed, SlotConflict) as exc:
            raise HTTPException(409, str(exc)) from exc
        except Inadmissible as exc:
            raise HTTPException(422, str(exc)) from exc
        except (ConfigError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return session.view()

    @app.post("/v1/trials/{trial_id}/terminate")
    def terminate(trial_id: str, payload: dict = Body(default={})):
        _session_or_404(trial_id)
        session = store.terminate(trial_id, reason=str(payload.get("reason", "")))
        return session.view()

    return app
