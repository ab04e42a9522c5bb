"""Workspace persistence: atomicity, audit trail, hazard log lifecycle."""

import json
from pathlib import Path

import pytest

from riskcore.fixtures import HAZARD_ID, seed_documents
from riskcore.store import (
    AUDIT_PATH,
    CATALOG_PATH,
    CRITERIA_PATH,
    DOCUMENT_PATHS,
    HAZARD_LOG_PATH,
    SPEC_PATH,
    HazardLogEntry,
    HazardLogStatus,
    StoreError,
    ValidationFailedError,
    Workspace,
    WorkspaceExistsError,
    WorkspaceLockedError,
    WorkspaceNotFoundError,
    empty_documents,
    hazard_log_report,
    init_workspace,
    model_from_documents,
    validate_documents,
)

FIXED_CLOCK = lambda: "2024-01-01T00:00:00+00:00"  # noqa: E731


def make_workspace(tmp_path, documents=None, **kwargs):
    return init_workspace(
        tmp_path / "ws",
        documents if documents is not None else seed_documents(),
        clock=FIXED_CLOCK,
        **kwargs,
    )


def bump_criteria_description(tx):
    doc = tx.read(CRITERIA_PATH)
    doc["criteria"][0]["description"] = "updated"
    tx.write(CRITERIA_PATH, doc)


# ============================================================
# Initialization and reading
# ============================================================

def test_init_reads_back_what_was_seeded(tmp_path):
    ws = make_workspace(tmp_path)
    docs = ws.documents()
    assert set(docs) == set(DOCUMENT_PATHS)
    assert docs[CRITERIA_PATH] == seed_documents()[CRITERIA_PATH]
    assert docs[SPEC_PATH] == seed_documents()[SPEC_PATH]
    assert ws.version() == 1
    entries = ws.audit_entries()
    assert len(entries) == 1
    assert entries[0]["action"] == "init"
    assert ws.verify_audit() == []


def test_init_refuses_to_clobber(tmp_path):
    make_workspace(tmp_path)
    with pytest.raises(WorkspaceExistsError):
        make_workspace(tmp_path)
    ws = make_workspace(tmp_path, force=True)
    assert ws.version() == 1


def test_blank_workspace_is_valid(tmp_path):
    ws = make_workspace(tmp_path, documents=empty_documents())
    assert ws.model().spec is not None
    assert ws.model().scenarios == {}


def test_invalid_seed_writes_nothing(tmp_path):
    docs = seed_documents()
    docs[CATALOG_PATH]["scenarios"][0]["use_case"] = "nowhere"
    with pytest.raises(ValidationFailedError):
        init_workspace(tmp_path / "ws", docs)
    assert not (tmp_path / "ws").exists()


def test_missing_workspace_raises(tmp_path):
    with pytest.raises(WorkspaceNotFoundError):
        Workspace(tmp_path / "nothing").version()


# ============================================================
# Transactions
# ============================================================

def test_transaction_applies_and_audits(tmp_path):
    ws = make_workspace(tmp_path)
    result = ws.transact("edit criteria", bump_criteria_description)
    assert result.version == 2
    assert result.writes == (CRITERIA_PATH,)
    assert ws.version() == 2
    assert ws.read_document(CRITERIA_PATH)["criteria"][0]["description"] == "updated"
    entries = ws.audit_entries()
    assert [e["seq"] for e in entries] == [1, 2]
    assert entries[1]["action"] == "edit criteria"
    assert ws.verify_audit() == []


def test_rejected_transaction_leaves_no_trace(tmp_path):
    ws = make_workspace(tmp_path)
    before = ws.documents()

    def break_reference(tx):
        doc = tx.read(CATALOG_PATH)
        doc["scenarios"][0]["use_case"] = "nowhere"
        tx.write(CATALOG_PATH, doc)

    with pytest.raises(ValidationFailedError) as err:
        ws.transact("break it", break_reference)
    assert "nowhere" in str(err.value)
    assert ws.version() == 1
    assert ws.documents() == before
    assert len(ws.audit_entries()) == 1


def test_schema_violations_are_reported_with_path(tmp_path):
    ws = make_workspace(tmp_path)

    def drop_required_key(tx):
        doc = tx.read(CRITERIA_PATH)
        del doc["criteria"][0]["weighing_policy"]
        tx.write(CRITERIA_PATH, doc)

    with pytest.raises(ValidationFailedError) as err:
        ws.transact("bad schema", drop_required_key)
    assert "weighing_policy" in str(err.value)
    assert CRITERIA_PATH in str(err.value)


def test_draft_mode_skips_validation(tmp_path):
    ws = make_workspace(tmp_path)
    ws.transact(
        "draft spec",
        lambda tx: tx.write(SPEC_PATH, "fact broken"),
        validate=False,
    )
    assert ws.read_document(SPEC_PATH) == "fact broken"
    assert ws.version() == 2


def test_store_managed_files_cannot_be_written(tmp_path):
    ws = make_workspace(tmp_path)
    with pytest.raises(StoreError):
        ws.transact("sneaky", lambda tx: tx.write("version", "99\n"))
    with pytest.raises(StoreError):
        ws.transact("sneaky", lambda tx: tx.write(".journal", "{}"))


def test_empty_transaction_is_a_no_op(tmp_path):
    ws = make_workspace(tmp_path)
    result = ws.transact("nothing", lambda tx: None)
    assert result.version == 1
    assert result.writes == ()
    assert len(ws.audit_entries()) == 1


# ============================================================
# Crash atomicity
# ============================================================

class CrashAfter:
    def __init__(self, ops):
        self.ops = ops
        self.seen = 0
        self.log = []

    def __call__(self, op, rel_path):
        self.seen += 1
        self.log.append((op, rel_path))
        if self.seen > self.ops:
            raise RuntimeError("injected crash")


def two_document_change(tx):
    doc = tx.read(CRITERIA_PATH)
    doc["criteria"][0]["description"] = "updated"
    tx.write(CRITERIA_PATH, doc)
    log = tx.read(HAZARD_LOG_PATH)
    log["entries"][0]["hazardous_event_ids"] = []
    log["entries"][0]["history"] = [{"status": "open", "version": 2}]
    tx.write(HAZARD_LOG_PATH, log)


def test_crash_at_every_write_leaves_old_or_new_state(tmp_path):
    # one clean run to count the io operations of this transaction
    probe = CrashAfter(ops=10**6)
    ws = make_workspace(tmp_path)
    Workspace(ws.root, io_hook=probe, clock=FIXED_CLOCK).transact(
        "probe", two_document_change
    )
    total_ops = probe.seen
    assert total_ops >= 5  # journal, two documents, audit, version, unjournal

    for crash_point in range(total_ops):
        root = tmp_path / f"crash-{crash_point}"
        ws = init_workspace(root, seed_documents(), clock=FIXED_CLOCK)
        before = ws.documents()
        faulty = Workspace(root, io_hook=CrashAfter(crash_point), clock=FIXED_CLOCK)
        with pytest.raises(RuntimeError):
            faulty.transact("crashing", two_document_change)

        # the hook raises before the journal removal too, so every crash
        # point in range leaves the transaction uncommitted
        observer = Workspace(root)
        seen = observer.documents()
        assert seen == before
        assert observer.version() == 1

        with observer.lock():
            observer.recover()
        assert not (root / ".journal").exists()
        assert observer.documents() == seen
        assert observer.verify_audit() == []

        # the workspace stays fully usable after recovery
        observer.transact("after crash", bump_criteria_description)
        assert (
            observer.read_document(CRITERIA_PATH)["criteria"][0]["description"]
            == "updated"
        )

    # one op past the last crash point the transaction goes through whole
    root = tmp_path / "committed"
    init_workspace(root, seed_documents(), clock=FIXED_CLOCK)
    Workspace(root, io_hook=CrashAfter(total_ops), clock=FIXED_CLOCK).transact(
        "complete", two_document_change
    )
    observer = Workspace(root)
    assert observer.version() == 2
    assert observer.read_document(CRITERIA_PATH)["criteria"][0]["description"] == "updated"
    assert observer.verify_audit() == []


def test_readers_never_see_an_uncommitted_transaction(tmp_path):
    # count the transaction's io operations on a throwaway copy
    counter = CrashAfter(ops=10**6)
    scratch = init_workspace(tmp_path / "count", seed_documents(), clock=FIXED_CLOCK)
    Workspace(scratch.root, io_hook=counter, clock=FIXED_CLOCK).transact(
        "probe", two_document_change
    )

    # crash right before the journal removal: everything written, not committed
    ws = make_workspace(tmp_path)
    before = ws.documents()
    faulty = Workspace(ws.root, io_hook=CrashAfter(counter.seen - 1), clock=FIXED_CLOCK)
    with pytest.raises(RuntimeError):
        faulty.transact("crashing", two_document_change)
    assert (ws.root / ".journal").exists()

    reader = Workspace(ws.root)
    assert reader.documents() == before
    assert reader.version() == 1
    # the next transaction recovers and proceeds
    reader.transact("next", bump_criteria_description)
    assert reader.version() == 2
    assert not (ws.root / ".journal").exists()


def test_lock_times_out_when_held(tmp_path):
    ws = make_workspace(tmp_path)
    other = Workspace(ws.root)
    with ws.lock():
        with pytest.raises(WorkspaceLockedError):
            with other.lock(timeout=0.05):
                pass


# ============================================================
# Audit trail
# ============================================================

def test_audit_detects_out_of_band_edits(tmp_path):
    ws = make_workspace(tmp_path)
    ws.transact("edit", bump_criteria_description)
    path = ws.root / CRITERIA_PATH
    doc = json.loads(path.read_text())
    doc["criteria"][0]["description"] = "tampered"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    problems = ws.verify_audit()
    assert any("differs from audit trail" in p for p in problems)


def test_audit_detects_version_drift(tmp_path):
    ws = make_workspace(tmp_path)
    (ws.root / "version").write_text("41\n")
    problems = ws.verify_audit()
    assert any("does not match" in p for p in problems)


def test_audit_records_are_json_lines_with_hashes(tmp_path):
    ws = make_workspace(tmp_path)
    ws.transact("edit", bump_criteria_description, note="why not")
    lines = (ws.root / AUDIT_PATH).read_text().splitlines()
    assert len(lines) == 2
    entry = json.loads(lines[1])
    assert entry["writes"] == [CRITERIA_PATH]
    assert entry["note"] == "why not"
    assert entry["at"] == FIXED_CLOCK()
    assert len(entry["sha256"][CRITERIA_PATH]) == 64


# ============================================================
# Hazard log lifecycle
# ============================================================

def test_lifecycle_walks_forward_only(tmp_path):
    entry = HazardLogEntry(hazard_id="H")
    entry = entry.advance(HazardLogStatus.GOAL_ASSIGNED, version=2)
    entry = entry.advance(HazardLogStatus.MEASURES_SPECIFIED, version=3)
    entry = entry.advance(HazardLogStatus.ACCEPTED, version=5, note="converged")
    assert entry.status is HazardLogStatus.ACCEPTED
    assert [row["version"] for row in entry.history] == [2, 3, 5]
    assert entry.history[-1]["note"] == "converged"


def test_untreated_hazards_can_be_accepted_directly():
    entry = HazardLogEntry(hazard_id="H")
    assert (
        entry.advance(HazardLogStatus.ACCEPTED, version=2).status
        is HazardLogStatus.ACCEPTED
    )


def test_stages_cannot_be_skipped_or_repeated():
    entry = HazardLogEntry(hazard_id="H")
    with pytest.raises(ValueError):
        entry.advance(HazardLogStatus.MEASURES_SPECIFIED, version=2)
    advanced = entry.advance(HazardLogStatus.GOAL_ASSIGNED, version=2)
    with pytest.raises(ValueError):
        advanced.advance(HazardLogStatus.GOAL_ASSIGNED, version=3)


def test_rollback_requires_a_note():
    entry = HazardLogEntry(hazard_id="H").advance(
        HazardLogStatus.GOAL_ASSIGNED, version=2
    )
    with pytest.raises(ValueError):
        entry.advance(HazardLogStatus.OPEN, version=3)
    rolled = entry.advance(HazardLogStatus.OPEN, version=3, note="spec rework")
    assert rolled.status is HazardLogStatus.OPEN
    assert rolled.history[-1]["note"] == "spec rework"


def test_entry_docs_round_trip():
    entry = HazardLogEntry(
        hazard_id="H",
        status=HazardLogStatus.GOAL_ASSIGNED,
        hazardous_event_ids=("e1",),
        history=({"status": "goal_assigned", "version": 2},),
    )
    assert HazardLogEntry.from_doc(entry.to_doc()) == entry


def test_hazard_log_report_is_deterministic():
    docs = seed_documents()
    text = hazard_log_report(docs)
    assert text == hazard_log_report(seed_documents())
    assert HAZARD_ID in text
    assert "open" in text


# ============================================================
# Assembly and workspace validation
# ============================================================

def test_fixture_documents_assemble_and_validate():
    docs = seed_documents()
    report = validate_documents(docs)
    assert report.ok, str(report)
    model = model_from_documents(docs)
    assert set(model.scenarios) == {"base", "variant"}
    assert HAZARD_ID in model.hazards
    assert model.spec is not None and len(model.spec.facts) == 8
    assert len(model.risk_parameters) == 3
    assert model.fleet_exposure is not None


def test_duplicate_ids_in_one_document_are_rejected():
    docs = seed_documents()
    docs["hazards/hazards.json"]["hazards"].append(
        docs["hazards/hazards.json"]["hazards"][0]
    )
    with pytest.raises(StoreError):
        model_from_documents(docs)
    report = validate_documents(docs)
    assert not report.ok


def test_hazard_log_linkage_is_checked():
    docs = seed_documents()
    docs[HAZARD_LOG_PATH]["entries"][0]["hazard_id"] = "H-GHOST"
    report = validate_documents(docs)
    assert not report.ok
    messages = str(report)
    assert "H-GHOST" in messages  # entry points nowhere
    assert HAZARD_ID in messages  # hazard lost its entry


def test_unknown_event_reference_in_log_is_reported():
    docs = seed_documents()
    docs[HAZARD_LOG_PATH]["entries"][0]["hazardous_event_ids"] = ["he:ghost"]
    report = validate_documents(docs)
    assert any("he:ghost" in v.message for v in report.violations)
