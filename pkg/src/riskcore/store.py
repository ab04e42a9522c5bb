"""Workspace persistence: documents, transactions, audit trail, hazard log.

A workspace is a directory of plain files.  The behavior specification is
DSL text; everything else is JSON validated against the versioned schemas
shipped with the package::

    spec/current.bspec      behavior specification (DSL text)
    catalog/scenarios.json  use cases, agents, scenarios, parameter tables
    hazards/hazards.json    harms and hazards
    criteria/criteria.json  risk acceptance criteria
    goals/goals.json        safety goals
    measures/measures.json  safety measures and behavioral requirements
    hazard-log.json         per-hazard lifecycle entries + identified events
    reports/                analysis outputs (written by the engine)
    version                 monotonic workspace version counter
    audit.log               append-only JSON-lines change journal

Every mutation goes through :meth:`Workspace.transact`, which validates
the candidate state up front, then applies it under an undo journal: the
prior contents of all touched files (version and audit log included) are
written to ``.journal`` first, the new contents after, and the journal is
deleted last.  Deleting the journal is the commit point; a crash anywhere
earlier leaves a journal whose priors any reader overlays and the next
locked operation restores, so torn states are never observed.
"""

from __future__ import annotations

import enum
import fcntl
import hashlib
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping

import jsonschema

from .dsl import SpecError, parse_spec
from .estimation import (
    BaselineExposure,
    EstimationError,
    FleetExposure,
    RiskParameterEntry,
)
from .evaluation import AscriptionRule
from .model import (
    BehavioralSafetyRequirement,
    Harm,
    Hazard,
    HazardousEvent,
    RiskAcceptanceCriterion,
    SafetyGoal,
    SafetyMeasure,
    Scenario,
    UseCase,
    ValidationReport,
    WorkspaceModel,
    validate_model,
)
from .model import Agent as AgentModel

SPEC_PATH = "spec/current.bspec"
CATALOG_PATH = "catalog/scenarios.json"
HAZARDS_PATH = "hazards/hazards.json"
CRITERIA_PATH = "criteria/criteria.json"
GOALS_PATH = "goals/goals.json"
MEASURES_PATH = "measures/measures.json"
HAZARD_LOG_PATH = "hazard-log.json"

DOCUMENT_PATHS = (
    SPEC_PATH,
    CATALOG_PATH,
    HAZARDS_PATH,
    CRITERIA_PATH,
    GOALS_PATH,
    MEASURES_PATH,
    HAZARD_LOG_PATH,
)

VERSION_PATH = "version"
AUDIT_PATH = "audit.log"
JOURNAL_PATH = ".journal"
LOCK_PATH = ".lock"
REPORTS_DIR = "reports"

_RESERVED = {VERSION_PATH, AUDIT_PATH, JOURNAL_PATH, LOCK_PATH}

_SCHEMA_DIR = Path(__file__).parent / "schemas" / "v1"

_SCHEMA_BY_PATH = {
    CATALOG_PATH: "catalog.schema.json",
    HAZARDS_PATH: "hazards.schema.json",
    CRITERIA_PATH: "criteria.schema.json",
    GOALS_PATH: "goals.schema.json",
    MEASURES_PATH: "measures.schema.json",
    HAZARD_LOG_PATH: "hazard-log.schema.json",
    f"{REPORTS_DIR}/state.json": "state.schema.json",
}


class StoreError(Exception):
    """A workspace could not be read, written, or locked."""


class WorkspaceNotFoundError(StoreError):
    pass


class WorkspaceExistsError(StoreError):
    pass


class WorkspaceLockedError(StoreError):
    pass


class ValidationFailedError(StoreError):
    """A transaction would have left the workspace invalid; nothing was written."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(str(report))


# ============================================================
# Schemas
# ============================================================

_schema_cache: dict[str, dict] = {}


def _schema(name: str) -> dict:
    if name not in _schema_cache:
        _schema_cache[name] = json.loads((_SCHEMA_DIR / name).read_text())
    return _schema_cache[name]


def schema_for(rel_path: str) -> dict | None:
    """The JSON schema governing a workspace file, if it has one."""
    name = _SCHEMA_BY_PATH.get(rel_path)
    if name is None and rel_path.startswith(f"{REPORTS_DIR}/") and rel_path.endswith(
        ".report.json"
    ):
        name = "report.schema.json"
    if name is None:
        return None
    return _schema(name)


def check_document(rel_path: str, doc: Any) -> list[str]:
    """Schema violations for one document, as human-readable strings."""
    schema = schema_for(rel_path)
    if schema is None:
        return []
    validator = jsonschema.Draft202012Validator(schema)
    problems = []
    for error in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in error.absolute_path) or "(root)"
        problems.append(f"{rel_path}: {where}: {error.message}")
    return problems


# ============================================================
# Document assembly
# ============================================================

def empty_documents() -> dict[str, Any]:
    """A blank but valid workspace: no spec text, empty registries."""
    return {
        SPEC_PATH: "",
        CATALOG_PATH: {
            "schema_version": 1,
            "use_cases": [],
            "agents": [],
            "scenarios": [],
            "risk_parameters": [],
            "ascription_rules": [],
            "conflicting_actions": [],
        },
        HAZARDS_PATH: {"schema_version": 1, "harms": [], "hazards": []},
        CRITERIA_PATH: {"schema_version": 1, "criteria": []},
        GOALS_PATH: {"schema_version": 1, "goals": []},
        MEASURES_PATH: {"schema_version": 1, "measures": [], "requirements": []},
        HAZARD_LOG_PATH: {"schema_version": 1, "entries": [], "events": []},
    }


def _registry(items: list, from_doc: Callable, kind: str) -> dict:
    out: dict[str, Any] = {}
    for doc in items:
        entity = from_doc(doc)
        if entity.id in out:
            raise StoreError(f"duplicate {kind} id {entity.id!r}")
        out[entity.id] = entity
    return out


def model_from_documents(documents: Mapping[str, Any]) -> WorkspaceModel:
    """Assemble the in-memory model from raw workspace documents.

    Raises :class:`SpecError`, :class:`EstimationError`, or
    :class:`StoreError` when a document cannot even be interpreted;
    referential problems are left to :func:`validate_model`.
    """
    model = WorkspaceModel()
    spec_text = documents.get(SPEC_PATH)
    if spec_text is not None:
        model.spec = parse_spec(spec_text)

    catalog = documents.get(CATALOG_PATH) or {}
    model.use_cases = _registry(catalog.get("use_cases", []), UseCase.from_doc, "use case")
    model.agents = _registry(catalog.get("agents", []), AgentModel.from_doc, "agent")
    model.scenarios = _registry(catalog.get("scenarios", []), Scenario.from_doc, "scenario")
    model.risk_parameters = [
        RiskParameterEntry.from_doc(doc) for doc in catalog.get("risk_parameters", [])
    ]
    model.ascription_rules = [
        AscriptionRule.from_doc(doc) for doc in catalog.get("ascription_rules", [])
    ]
    model.conflicting_actions = [
        frozenset(pair) for pair in catalog.get("conflicting_actions", [])
    ]
    if catalog.get("fleet_exposure"):
        model.fleet_exposure = FleetExposure.from_doc(catalog["fleet_exposure"])
    if catalog.get("baseline_exposure"):
        model.baseline_exposure = BaselineExposure.from_doc(catalog["baseline_exposure"])

    hazards = documents.get(HAZARDS_PATH) or {}
    model.harms = _registry(hazards.get("harms", []), Harm.from_doc, "harm")
    model.hazards = _registry(hazards.get("hazards", []), Hazard.from_doc, "hazard")

    criteria = documents.get(CRITERIA_PATH) or {}
    model.criteria = _registry(
        criteria.get("criteria", []), RiskAcceptanceCriterion.from_doc, "criterion"
    )

    goals = documents.get(GOALS_PATH) or {}
    model.goals = _registry(goals.get("goals", []), SafetyGoal.from_doc, "goal")

    measures = documents.get(MEASURES_PATH) or {}
    model.measures = _registry(
        measures.get("measures", []), SafetyMeasure.from_doc, "measure"
    )
    model.requirements = _registry(
        measures.get("requirements", []),
        BehavioralSafetyRequirement.from_doc,
        "requirement",
    )

    log = documents.get(HAZARD_LOG_PATH) or {}
    model.events = _registry(
        log.get("events", []), HazardousEvent.from_doc, "hazardous event"
    )
    return model


def validate_documents(documents: Mapping[str, Any]) -> ValidationReport:
    """Full workspace validation: schemas, assembly, model, hazard log."""
    report = ValidationReport()
    for rel_path, doc in documents.items():
        if rel_path == SPEC_PATH:
            continue
        for problem in check_document(rel_path, doc):
            report.add("document", rel_path, "schema", problem)
    if not report.ok:
        return report

    try:
        model = model_from_documents(documents)
    except (SpecError, EstimationError, StoreError, ValueError, KeyError, TypeError) as err:
        report.add("document", "workspace", "assembly", str(err))
        return report

    report = validate_model(model)

    log = documents.get(HAZARD_LOG_PATH) or {}
    seen: set[str] = set()
    for doc in log.get("entries", []):
        entry = HazardLogEntry.from_doc(doc)
        if entry.hazard_id in seen:
            report.add(
                "hazard_log", entry.hazard_id, "entries",
                f"duplicate hazard log entry for {entry.hazard_id!r}",
            )
        seen.add(entry.hazard_id)
        if entry.hazard_id not in model.hazards:
            report.add(
                "hazard_log", entry.hazard_id, "hazard_id",
                f"hazard log entry references unknown hazard {entry.hazard_id!r}",
            )
        for event_id in entry.hazardous_event_ids:
            if event_id not in model.events:
                report.add(
                    "hazard_log", entry.hazard_id, "hazardous_event_ids",
                    f"hazard log entry references unknown event {event_id!r}",
                )
    for hazard_id in model.hazards:
        if hazard_id not in seen:
            report.add(
                "hazard_log", hazard_id, "entries",
                f"hazard {hazard_id!r} has no hazard log entry",
            )
    return report


# ============================================================
# Hazard log lifecycle
# ============================================================

class HazardLogStatus(str, enum.Enum):
    OPEN = "open"
    GOAL_ASSIGNED = "goal_assigned"
    MEASURES_SPECIFIED = "measures_specified"
    ACCEPTED = "accepted"


# open hazards may be accepted directly when their risk needs no treatment
_FORWARD_TRANSITIONS = {
    HazardLogStatus.OPEN: {HazardLogStatus.GOAL_ASSIGNED, HazardLogStatus.ACCEPTED},
    HazardLogStatus.GOAL_ASSIGNED: {HazardLogStatus.MEASURES_SPECIFIED},
    HazardLogStatus.MEASURES_SPECIFIED: {HazardLogStatus.ACCEPTED},
    HazardLogStatus.ACCEPTED: set(),
}


@dataclass(frozen=True)
class HazardLogEntry:
    """Lifecycle record for one hazard; history rows carry the workspace
    version at which each transition happened, never wall-clock time."""

    hazard_id: str
    status: HazardLogStatus = HazardLogStatus.OPEN
    hazardous_event_ids: tuple[str, ...] = ()
    history: tuple[Mapping[str, Any], ...] = ()

    def advance(
        self, to: HazardLogStatus, version: int, note: str = ""
    ) -> "HazardLogEntry":
        """Move to the next lifecycle stage, or roll back to open with a note."""
        if to is HazardLogStatus.OPEN and self.status is not HazardLogStatus.OPEN:
            if not note:
                raise ValueError(
                    f"rolling {self.hazard_id!r} back to open requires a note"
                )
        elif to not in _FORWARD_TRANSITIONS[self.status]:
            raise ValueError(
                f"hazard {self.hazard_id!r} cannot go from "
                f"{self.status.value} to {to.value}"
            )
        row: dict[str, Any] = {"status": to.value, "version": version}
        if note:
            row["note"] = note
        return replace(self, status=to, history=self.history + (row,))

    def with_events(self, event_ids: Iterable[str]) -> "HazardLogEntry":
        return replace(self, hazardous_event_ids=tuple(event_ids))

    def to_doc(self) -> dict[str, Any]:
        return {
            "hazard_id": self.hazard_id,
            "status": self.status.value,
            "hazardous_event_ids": list(self.hazardous_event_ids),
            "history": [dict(row) for row in self.history],
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "HazardLogEntry":
        return cls(
            hazard_id=doc["hazard_id"],
            status=HazardLogStatus(doc["status"]),
            hazardous_event_ids=tuple(doc.get("hazardous_event_ids", [])),
            history=tuple(doc.get("history", [])),
        )


def hazard_log_report(documents: Mapping[str, Any]) -> str:
    """Deterministic plain-text summary of the hazard log."""
    log = documents.get(HAZARD_LOG_PATH) or {}
    entries = [HazardLogEntry.from_doc(d) for d in log.get("entries", [])]
    lines = [f"hazard log: {len(entries)} entries"]
    for entry in sorted(entries, key=lambda e: e.hazard_id):
        last_note = next(
            (row["note"] for row in reversed(entry.history) if row.get("note")), ""
        )
        line = (
            f"  {entry.hazard_id}: {entry.status.value}, "
            f"{len(entry.hazardous_event_ids)} events"
        )
        if last_note:
            line += f" ({last_note})"
        lines.append(line)
    return "\n".join(lines)


# ============================================================
# Serialization
# ============================================================

def _serialize(rel_path: str, content: Any) -> str:
    if rel_path.endswith(".json"):
        return json.dumps(content, indent=2, sort_keys=True) + "\n"
    if not isinstance(content, str):
        raise StoreError(f"{rel_path}: expected text content")
    return content


def _deserialize(rel_path: str, text: str) -> Any:
    if rel_path.endswith(".json"):
        return json.loads(text)
    return text


# ============================================================
# Workspace
# ============================================================

@dataclass(frozen=True)
class TransactionResult:
    version: int
    writes: tuple[str, ...]


class Transaction:
    """Mutable view over the workspace files within one transaction."""

    def __init__(self, read_document: Callable[[str], Any]):
        self._read = read_document
        self._writes: dict[str, Any] = {}

    def read(self, rel_path: str) -> Any:
        if rel_path in self._writes:
            return self._writes[rel_path]
        return self._read(rel_path)

    def write(self, rel_path: str, content: Any) -> None:
        if rel_path in _RESERVED or rel_path.startswith("."):
            raise StoreError(f"{rel_path!r} is managed by the store")
        self._writes[rel_path] = content

    @property
    def writes(self) -> dict[str, Any]:
        return dict(self._writes)


class Workspace:
    """Handle to one workspace directory.

    ``io_hook`` is called as ``io_hook(op, rel_path)`` immediately before
    every durable filesystem operation; tests inject faults through it.
    ``clock`` supplies audit timestamps.
    """

    def __init__(
        self,
        root: str | Path,
        io_hook: Callable[[str, str], None] | None = None,
        clock: Callable[[], str] | None = None,
    ):
        self.root = Path(root)
        self._io_hook = io_hook or (lambda op, rel: None)
        self._clock = clock or (
            lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
        )

    # ---- existence ----

    def exists(self) -> bool:
        return (self.root / VERSION_PATH).is_file() or (
            self.root / JOURNAL_PATH
        ).is_file()

    def require(self) -> "Workspace":
        if not self.exists():
            raise WorkspaceNotFoundError(f"no workspace at {self.root}")
        return self

    # ---- low-level io ----

    def _write_file(self, rel_path: str, text: str) -> None:
        self._io_hook("write", rel_path)
        path = self.root / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)

    def _remove_file(self, rel_path: str) -> None:
        self._io_hook("remove", rel_path)
        (self.root / rel_path).unlink()

    def _journal(self) -> dict | None:
        path = self.root / JOURNAL_PATH
        if not path.is_file():
            return None
        return json.loads(path.read_text())

    def _raw_read(self, rel_path: str, journal: dict | None) -> str | None:
        """File text as of the last commit: journal priors win over disk."""
        if journal is not None and rel_path in journal["priors"]:
            return journal["priors"][rel_path]
        path = self.root / rel_path
        if not path.is_file():
            return None
        return path.read_text()

    # ---- reading ----

    def read_text(self, rel_path: str) -> str | None:
        return self._raw_read(rel_path, self._journal())

    def read_document(self, rel_path: str) -> Any:
        text = self.read_text(rel_path)
        if text is None:
            return None
        return _deserialize(rel_path, text)

    def documents(self) -> dict[str, Any]:
        journal = self._journal()
        out: dict[str, Any] = {}
        for rel_path in DOCUMENT_PATHS:
            text = self._raw_read(rel_path, journal)
            if text is not None:
                out[rel_path] = _deserialize(rel_path, text)
        return out

    def version(self) -> int:
        text = self.read_text(VERSION_PATH)
        if text is None:
            raise WorkspaceNotFoundError(f"no workspace at {self.root}")
        return int(text.strip())

    def model(self) -> WorkspaceModel:
        return model_from_documents(self.documents())

    def report_paths(self) -> list[str]:
        reports = self.root / REPORTS_DIR
        if not reports.is_dir():
            return []
        journal = self._journal()
        out = []
        for path in sorted(reports.glob("*.report.json")):
            rel = f"{REPORTS_DIR}/{path.name}"
            if journal and journal["priors"].get(rel, "") is None:
                continue  # created by an uncommitted transaction
            out.append(rel)
        return out

    # ---- locking ----

    @contextmanager
    def lock(self, timeout: float | None = None) -> Iterator[None]:
        self.root.mkdir(parents=True, exist_ok=True)
        handle = open(self.root / LOCK_PATH, "a+")
        try:
            if timeout is None:
                fcntl.flock(handle, fcntl.LOCK_EX)
            else:
                deadline = time.monotonic() + timeout
                while True:
                    try:
                        fcntl.flock(handle, fcntl.LOCK_EX | fcntl.LOCK_NB)
                        break
                    except OSError:
                        if time.monotonic() >= deadline:
                            raise WorkspaceLockedError(
                                f"workspace {self.root} is locked"
                            ) from None
                        time.sleep(0.01)
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)
            handle.close()

    # ---- recovery ----

    def recover(self) -> bool:
        """Restore priors from a leftover journal.  True when one was found.

        Call only while holding the lock.
        """
        journal = self._journal()
        if journal is None:
            return False
        for rel_path, prior in sorted(journal["priors"].items()):
            if prior is None:
                path = self.root / rel_path
                if path.is_file():
                    self._remove_file(rel_path)
            else:
                self._write_file(rel_path, prior)
        self._remove_file(JOURNAL_PATH)
        return True

    # ---- transactions ----

    def transact(
        self,
        action: str,
        mutate: Callable[[Transaction], None],
        *,
        validate: bool = True,
        note: str = "",
    ) -> TransactionResult:
        """Apply one atomic, validated, audited change set."""
        with self.lock():
            self.recover()
            current_version = self.version()
            documents = self.documents()
            tx = Transaction(self.read_document)
            mutate(tx)
            writes = tx.writes
            if not writes:
                return TransactionResult(current_version, ())

            candidate = dict(documents)
            serialized: dict[str, str] = {}
            for rel_path, content in writes.items():
                serialized[rel_path] = _serialize(rel_path, content)
                if rel_path in DOCUMENT_PATHS:
                    candidate[rel_path] = content

            if validate:
                schema_report = ValidationReport()
                for rel_path, content in writes.items():
                    if rel_path == SPEC_PATH:
                        continue
                    for problem in check_document(rel_path, content):
                        schema_report.add("document", rel_path, "schema", problem)
                if not schema_report.ok:
                    raise ValidationFailedError(schema_report)
                report = validate_documents(candidate)
                if not report.ok:
                    raise ValidationFailedError(report)

            new_version = current_version + 1
            journal = self._journal()
            priors: dict[str, str | None] = {}
            for rel_path in [*sorted(serialized), VERSION_PATH, AUDIT_PATH]:
                priors[rel_path] = self._raw_read(rel_path, journal)

            audit_entry = {
                "seq": self._last_seq() + 1,
                "version": new_version,
                "action": action,
                "at": self._clock(),
                "writes": sorted(serialized),
                "sha256": {
                    rel: hashlib.sha256(text.encode()).hexdigest()
                    for rel, text in serialized.items()
                },
            }
            if note:
                audit_entry["note"] = note

            self._write_file(
                JOURNAL_PATH,
                json.dumps({"version": current_version, "priors": priors}) + "\n",
            )
            for rel_path in sorted(serialized):
                self._write_file(rel_path, serialized[rel_path])
            prior_audit = priors[AUDIT_PATH] or ""
            self._write_file(
                AUDIT_PATH, prior_audit + json.dumps(audit_entry, sort_keys=True) + "\n"
            )
            self._write_file(VERSION_PATH, f"{new_version}\n")
            self._remove_file(JOURNAL_PATH)
            return TransactionResult(new_version, tuple(sorted(serialized)))

    # ---- audit ----

    def audit_entries(self) -> list[dict]:
        text = self.read_text(AUDIT_PATH) or ""
        return [json.loads(line) for line in text.splitlines() if line.strip()]

    def _last_seq(self) -> int:
        entries = self.audit_entries()
        return entries[-1]["seq"] if entries else 0

    def verify_audit(self) -> list[str]:
        """Replay the audit trail against the workspace; [] when consistent."""
        problems: list[str] = []
        entries = self.audit_entries()
        if not entries:
            return ["audit log is empty"]
        latest: dict[str, str] = {}
        for position, entry in enumerate(entries, start=1):
            if entry["seq"] != position:
                problems.append(
                    f"audit entry {position} has sequence {entry['seq']}"
                )
            if position > 1 and entry["version"] != entries[position - 2]["version"] + 1:
                problems.append(
                    f"audit entry {position} version {entry['version']} does not "
                    f"follow {entries[position - 2]['version']}"
                )
            latest.update(entry.get("sha256", {}))
        if entries[-1]["version"] != self.version():
            problems.append(
                f"workspace version {self.version()} does not match last audited "
                f"version {entries[-1]['version']}"
            )
        for rel_path, digest in sorted(latest.items()):
            text = self.read_text(rel_path)
            if text is None:
                problems.append(f"{rel_path}: audited file is missing")
            elif hashlib.sha256(text.encode()).hexdigest() != digest:
                problems.append(f"{rel_path}: content differs from audit trail")
        return problems


# ============================================================
# Initialization
# ============================================================

def init_workspace(
    root: str | Path,
    documents: Mapping[str, Any] | None = None,
    *,
    force: bool = False,
    io_hook: Callable[[str, str], None] | None = None,
    clock: Callable[[], str] | None = None,
) -> Workspace:
    """Create a workspace, seeded with ``documents`` (default: blank)."""
    workspace = Workspace(root, io_hook=io_hook, clock=clock)
    if workspace.exists() and not force:
        raise WorkspaceExistsError(f"workspace already exists at {workspace.root}")
    docs = dict(documents) if documents is not None else empty_documents()
    report = validate_documents(docs)
    if not report.ok:
        raise ValidationFailedError(report)

    workspace.root.mkdir(parents=True, exist_ok=True)
    reports_dir = workspace.root / REPORTS_DIR
    reports_dir.mkdir(exist_ok=True)
    if force:
        for stale in reports_dir.glob("*.json"):
            stale.unlink()
        journal = workspace.root / JOURNAL_PATH
        if journal.is_file():
            journal.unlink()
    with workspace.lock():
        serialized = {rel: _serialize(rel, content) for rel, content in docs.items()}
        audit_entry = {
            "seq": 1,
            "version": 1,
            "action": "init",
            "at": workspace._clock(),
            "writes": sorted(serialized),
            "sha256": {
                rel: hashlib.sha256(text.encode()).hexdigest()
                for rel, text in serialized.items()
            },
        }
        for rel_path in sorted(serialized):
            workspace._write_file(rel_path, serialized[rel_path])
        workspace._write_file(AUDIT_PATH, json.dumps(audit_entry, sort_keys=True) + "\n")
        workspace._write_file(VERSION_PATH, "1\n")
    return workspace
