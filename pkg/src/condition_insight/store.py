"""Content-addressed file store and the immutable run record.

Layout under the store root: objects/<sha256>.json holds one document per
blob; index/<entity>.json maps natural keys to blob digests. Everything is
plain JSON on disk, so a run is auditable with nothing but a text editor.
Commits serialize through a process-local lock; reads are lock-free.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnknownAsset

ENTITY_TYPES = ("assets", "workorders", "meters", "fmea", "alerts", "runs", "evaluations")


def _document_bytes(document: dict[str, object]) -> bytes:
    return json.dumps(document, sort_keys=True, separators=(",", ":")).encode("utf-8")


def document_digest(document: dict[str, object]) -> str:
    return hashlib.sha256(_document_bytes(document)).hexdigest()


class FileStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        (self.root / "index").mkdir(parents=True, exist_ok=True)

    def _index_path(self, entity: str) -> Path:
        return self.root / "index" / f"{entity}.json"

    def _load_index(self, entity: str) -> dict[str, str]:
        path = self._index_path(entity)
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_index(self, entity: str, index: dict[str, str]) -> None:
        path = self._index_path(entity)
        path.write_text(
            json.dumps(index, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    def put(self, entity: str, key: str, document: dict[str, object]) -> tuple[str, bool]:
        """Persist one document under its natural key.

        Returns (digest, was_duplicate): a re-put of identical content is a
        no-op flagged as duplicate; changed content under the same key
        replaces the mapping (the old blob stays for auditability).
        """
        digest = document_digest(document)
        with self._lock:
            index = self._load_index(entity)
            if index.get(key) == digest:
                return digest, True
            blob = self.root / "objects" / f"{digest}.json"
            if not blob.exists():
                blob.write_bytes(_document_bytes(document))
            index[key] = digest
            self._write_index(entity, index)
        return digest, False

    def get(self, entity: str, key: str) -> dict[str, object] | None:
        index = self._load_index(entity)
        digest = index.get(key)
        if digest is None:
            return None
        blob = self.root / "objects" / f"{digest}.json"
        return json.loads(blob.read_text(encoding="utf-8"))

    def keys(self, entity: str) -> list[str]:
        return sorted(self._load_index(entity))

    def items(self, entity: str) -> list[tuple[str, dict[str, object]]]:
        index = self._load_index(entity)
        out = []
        for key in sorted(index):
            blob = self.root / "objects" / f"{index[key]}.json"
            out.append((key, json.loads(blob.read_text(encoding="utf-8"))))
        return out

    def documents(self, entity: str) -> list[dict[str, object]]:
        return [doc for _, doc in self.items(entity)]

    def require_asset(self, asset_number: str) -> dict[str, object]:
        record = self.get("assets", asset_number)
        if record is None:
            raise UnknownAsset(asset_number)
        return record


@dataclass(frozen=True)
class RunRecord:
    """Everything needed to reconstruct and audit one pipeline run."""

    run_id: str
    asset_number: str
    config_digest: str
    prompt_mode: str
    evidence_scope: str
    facts_text: str
    prompts: tuple[tuple[str, str], ...]
    raw_responses: tuple[str, ...]
    summary_text: str
    verification: dict[str, object]
    timings: dict[str, float] = field(default_factory=dict)
    audit: dict[str, object] | None = None


def run_identity(record: RunRecord) -> dict[str, object]:
    """The run's reproducible content: everything except wall-clock data."""
    return {
        "asset_number": record.asset_number,
        "config_digest": record.config_digest,
        "evidence_scope": record.evidence_scope,
        "facts_text": record.facts_text,
        "prompt_mode": record.prompt_mode,
        "prompts": [[s, u] for s, u in record.prompts],
        "raw_responses": list(record.raw_responses),
        "summary_text": record.summary_text,
        "verification": record.verification,
    }


def make_run_id(record_identity: dict[str, object]) -> str:
    """Content-derived run id: identical runs share an id across sessions."""
    return document_digest(record_identity)[:16]


def run_record_document(record: RunRecord) -> dict[str, object]:
    document = run_identity(record)
    document["run_id"] = record.run_id
    document["timings"] = dict(record.timings)
    document["audit"] = record.audit
    return document


def run_record_from_document(document: dict[str, object]) -> RunRecord:
    return RunRecord(
        run_id=str(document["run_id"]),
        asset_number=str(document["asset_number"]),
        config_digest=str(document["config_digest"]),
        prompt_mode=str(document["prompt_mode"]),
        evidence_scope=str(document["evidence_scope"]),
        facts_text=str(document["facts_text"]),
        prompts=tuple((pair[0], pair[1]) for pair in document["prompts"]),
        raw_responses=tuple(document["raw_responses"]),
        summary_text=str(document["summary_text"]),
        verification=dict(document["verification"]),
        timings={k: float(v) for k, v in dict(document.get("timings") or {}).items()},
        audit=dict(document["audit"]) if document.get("audit") else None,
    )
