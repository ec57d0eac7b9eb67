"""On-disk store: one directory per paper (document, bundle, meta).

Bundles are written canonically with a sha256 checksum in the meta file;
loads verify the checksum before parsing so truncated or edited files
surface as integrity errors without touching other papers.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .bundle import AugmentationBundle, bundle_from_dict, serialize_bundle
from .document import Paper, parse_document, serialize_document
from .errors import BundleIntegrityError, BundleNotFoundError

STATUS_INGESTED = "ingested"
STATUS_ASSEMBLING = "assembling"
STATUS_READY = "ready"
STATUS_FAILED = "failed"


@dataclass
class PaperMeta:
    paper_id: str
    title: str
    status: str
    created_at: str = ""
    bundle_checksum: str = ""
    error: str = ""


class BundleStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "papers").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _paper_dir(self, paper_id: str) -> Path:
        if not paper_id or any(c in paper_id for c in "/\\."):
            raise BundleNotFoundError(f"invalid paper id {paper_id!r}")
        return self.root / "papers" / paper_id

    # -- documents -----------------------------------------------------------

    def save_document(self, paper: Paper, created_at: str = "") -> str:
        """Idempotent: the id is derived from document content."""
        directory = self._paper_dir(paper.id)
        with self._lock:
            directory.mkdir(parents=True, exist_ok=True)
            doc_path = directory / "document.json"
            if not doc_path.exists():
                _atomic_write(doc_path, serialize_document(paper))
                self._write_meta(
                    PaperMeta(paper.id, paper.title, STATUS_INGESTED, created_at)
                )
        return paper.id

    def load_document(self, paper_id: str) -> Paper:
        path = self._paper_dir(paper_id) / "document.json"
        if not path.exists():
            raise BundleNotFoundError(f"no document for paper {paper_id!r}")
        return parse_document(path.read_bytes())

    # -- meta ----------------------------------------------------------------

    def _write_meta(self, meta: PaperMeta):
        path = self._paper_dir(meta.paper_id) / "meta.json"
        _atomic_write(
            path,
            json.dumps(
                {
                    "paper_id": meta.paper_id,
                    "title": meta.title,
                    "status": meta.status,
                    "created_at": meta.created_at,
                    "bundle_checksum": meta.bundle_checksum,
                    "error": meta.error,
                },
                sort_keys=True,
                ensure_ascii=False,
            ).encode("utf-8"),
        )

    def meta(self, paper_id: str) -> PaperMeta:
        path = self._paper_dir(paper_id) / "meta.json"
        if not path.exists():
            raise BundleNotFoundError(f"unknown paper {paper_id!r}")
        raw = json.loads(path.read_text("utf-8"))
        return PaperMeta(
            paper_id=raw["paper_id"],
            title=raw["title"],
            status=raw["status"],
            created_at=raw.get("created_at", ""),
            bundle_checksum=raw.get("bundle_checksum", ""),
            error=raw.get("error", ""),
        )

    def set_status(self, paper_id: str, status: str, error: str = ""):
        with self._lock:
            meta = self.meta(paper_id)
            meta.status = status
            meta.error = error
            self._write_meta(meta)

    def list_papers(self) -> list[PaperMeta]:
        metas = []
        for directory in sorted((self.root / "papers").iterdir()):
            if (directory / "meta.json").exists():
                metas.append(self.meta(directory.name))
        return metas

    # -- bundles -------------------------------------------------------------

    def save_bundle(self, bundle: AugmentationBundle) -> str:
        payload = serialize_bundle(bundle)
        checksum = hashlib.sha256(payload).hexdigest()
        directory = self._paper_dir(bundle.paper_id)
        with self._lock:
            directory.mkdir(parents=True, exist_ok=True)
            _atomic_write(directory / "bundle.json", payload)
            try:
                meta = self.meta(bundle.paper_id)
            except BundleNotFoundError:
                meta = PaperMeta(bundle.paper_id, bundle.paper.title, STATUS_READY)
            meta.status = STATUS_READY
            meta.bundle_checksum = checksum
            meta.error = ""
            self._write_meta(meta)
        return bundle.paper_id

    def load_bundle_bytes(self, paper_id: str) -> bytes:
        """Raw canonical bundle bytes, checksum-verified."""
        directory = self._paper_dir(paper_id)
        path = directory / "bundle.json"
        if not path.exists():
            raise BundleNotFoundError(f"no bundle for paper {paper_id!r}")
        payload = path.read_bytes()
        meta = self.meta(paper_id)
        if meta.bundle_checksum:
            digest = hashlib.sha256(payload).hexdigest()
            if digest != meta.bundle_checksum:
                raise BundleIntegrityError(
                    f"bundle for {paper_id!r} fails checksum "
                    f"(expected {meta.bundle_checksum[:12]}..., got {digest[:12]}...)"
                )
        return payload

    def load_bundle(self, paper_id: str) -> AugmentationBundle:
        payload = self.load_bundle_bytes(paper_id)
        try:
            data = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise BundleIntegrityError(f"bundle for {paper_id!r} is not valid JSON: {exc}") from None
        return bundle_from_dict(data)

    # -- sessions ------------------------------------------------------------

    def session_log_path(self, session_id: str) -> Path:
        directory = self.root / "sessions"
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{session_id}.jsonl"

    def list_sessions(self) -> list[str]:
        directory = self.root / "sessions"
        if not directory.exists():
            return []
        return sorted(p.stem for p in directory.glob("*.jsonl"))


def _atomic_write(path: Path, payload: bytes):
    tmp = path.with_name(path.name + f".tmp-{threading.get_ident()}")
    tmp.write_bytes(payload)
    tmp.replace(path)
