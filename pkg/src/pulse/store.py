"""The data layer: a local directory tree of checksummed documents with an
append-only segment log per session.

Layout:
    store/index.doc
    store/<session_id>/session.doc
    store/<session_id>/segments.log       (JSONL, append-only)
    store/<session_id>/snapshots/<version>.doc
    store/<session_id>/tags.doc
    store/<session_id>/report.doc
    store/<session_id>/audio/<seq>.pcm

Writes are temp-then-rename; the segment log tolerates a torn trailing line.
The index is rebuilt from artifacts on open whenever it is missing or
inconsistent, so a crash can never leave dangling references.
"""

from __future__ import annotations

import json
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from . import docs
from .analysis import AnalysisSnapshot, TaggedSentence, ThematicReport
from .errors import (
    IntegrityError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from .ingest import Sentence, TranscriptSegment
from .session import SessionState, StateChange

_LEGAL_EVENTS = {"auth", "start", "stop"}


@dataclass
class SessionRecord:
    """Everything stored for one interview session."""

    session_id: str
    created_at: int
    title: str = ""
    state: SessionState = SessionState.LOCKED
    history: list[StateChange] = field(default_factory=list)
    started_at: int | None = None
    stopped_at: int | None = None
    taxonomy_version: int = 1
    transcription_provider: str = "inline"
    analysis_provider: str = "rule_based"
    segments: list[TranscriptSegment] = field(default_factory=list)
    sentences: list[Sentence] = field(default_factory=list)
    snapshots: list[AnalysisSnapshot] = field(default_factory=list)
    snapshot_refs: list[int] = field(default_factory=list)
    tags: list[TaggedSentence] | None = None
    report: ThematicReport | None = None

    def validate(self) -> None:
        if not self.session_id:
            raise ValidationError("session_id must be non-empty")
        versions = [s.version for s in self.snapshots]
        if versions != sorted(versions) or len(set(versions)) != len(versions):
            raise ValidationError("snapshot versions must be strictly increasing")
        if sorted(self.snapshot_refs) != sorted(versions):
            missing = sorted(set(self.snapshot_refs) - set(versions))
            raise ValidationError(
                f"snapshot refs {missing} have no stored snapshot",
                dangling=missing,
            )
        seqs = [s.seq for s in self.segments]
        if seqs != sorted(seqs):
            raise ValidationError("segments must be ordered by seq")
        known_sentences = {s.sentence_id for s in self.sentences}
        if self.tags is not None:
            dangling = [t.sentence_id for t in self.tags if t.sentence_id not in known_sentences]
            if dangling:
                raise ValidationError(
                    f"tags reference unknown sentences {dangling[:3]}",
                    dangling=dangling,
                )
        for h in self.history:
            if h.event not in _LEGAL_EVENTS:
                raise ValidationError(f"unknown history event '{h.event}'")

    def metadata(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "title": self.title,
            "state": self.state.value,
            "history": docs.history_to_list(self.history),
            "started_at": self.started_at,
            "stopped_at": self.stopped_at,
            "taxonomy_version": self.taxonomy_version,
            "transcription_provider": self.transcription_provider,
            "analysis_provider": self.analysis_provider,
            "snapshot_refs": sorted(self.snapshot_refs),
            "sentences": [docs.sentence_to_dict(s) for s in self.sentences],
        }


@dataclass(frozen=True)
class IndexEntry:
    session_id: str
    created_at: int
    title: str
    state: str
    segment_count: int
    latest_snapshot_version: int | None


def atomic_write_text(path: Path, text: str) -> None:
    """Temp-then-rename in the target directory, fsynced before the swap."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"write failed for {path}: {exc}") from exc


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._rebuild_index_if_stale()

    # -- paths ------------------------------------------------------------

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _index_path(self) -> Path:
        return self.root / "index.doc"

    # -- save / load ------------------------------------------------------

    def save_session(self, record: SessionRecord) -> str:
        record.validate()
        sdir = self._dir(record.session_id)
        sdir.mkdir(parents=True, exist_ok=True)

        for snap in record.snapshots:
            path = sdir / "snapshots" / f"{snap.version}.doc"
            if not path.exists():
                atomic_write_text(path, docs.wrap_doc(docs.snapshot_to_dict(snap)))
        if record.tags is not None:
            atomic_write_text(
                sdir / "tags.doc",
                docs.wrap_doc({"tags": [docs.tagged_to_dict(t) for t in record.tags]}),
            )
        if record.report is not None:
            atomic_write_text(
                sdir / "report.doc", docs.wrap_doc(docs.report_to_dict(record.report))
            )
        self._sync_segment_log(sdir / "segments.log", record.segments)
        # session.doc last: it is the commit point the index trusts.
        atomic_write_text(sdir / "session.doc", docs.wrap_doc(record.metadata()))
        self._update_index_entry(
            IndexEntry(
                session_id=record.session_id,
                created_at=record.created_at,
                title=record.title,
                state=record.state.value,
                segment_count=len(record.segments),
                latest_snapshot_version=max(record.snapshot_refs)
                if record.snapshot_refs
                else None,
            )
        )
        return record.session_id

    def append_segment(self, session_id: str, segment: TranscriptSegment) -> None:
        """Append one segment to the session's log without rewriting it."""
        path = self._dir(session_id) / "segments.log"
        path.parent.mkdir(parents=True, exist_ok=True)
        line = docs.canonical_json(
            {"payload": docs.segment_to_dict(segment),
             "checksum": docs.checksum(docs.segment_to_dict(segment))}
        )
        with open(path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
            os.fsync(f.fileno())

    def save_audio_chunk(self, session_id: str, seq: int, payload: bytes) -> None:
        path = self._dir(session_id) / "audio" / f"{seq}.pcm"
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)

    def _sync_segment_log(self, path: Path, segments: list[TranscriptSegment]) -> None:
        existing = self._read_segment_log(path) if path.exists() else []
        if [s.seq for s in existing] == [s.seq for s in segments[: len(existing)]]:
            new = segments[len(existing):]
            with open(path, "a", encoding="utf-8") as f:
                for seg in new:
                    d = docs.segment_to_dict(seg)
                    f.write(docs.canonical_json({"payload": d, "checksum": docs.checksum(d)}) + "\n")
                f.flush()
                os.fsync(f.fileno())
        else:
            lines = []
            for seg in segments:
                d = docs.segment_to_dict(seg)
                lines.append(docs.canonical_json({"payload": d, "checksum": docs.checksum(d)}))
            atomic_write_text(path, "".join(l + "\n" for l in lines))

    def _read_segment_log(self, path: Path) -> list[TranscriptSegment]:
        segments = []
        if not path.exists():
            return segments
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                if entry.get("checksum") != docs.checksum(entry["payload"]):
                    break  # torn or tampered tail; stop at last good line
                segments.append(docs.segment_from_dict(entry["payload"]))
            except (ValueError, KeyError):
                break
        return segments

    def load_session(self, session_id: str) -> SessionRecord:
        sdir = self._dir(session_id)
        doc_path = sdir / "session.doc"
        if not doc_path.exists():
            raise NotFoundError(f"unknown session {session_id}", session_id=session_id)
        meta = docs.unwrap_doc(doc_path.read_text(encoding="utf-8"))
        segments = self._read_segment_log(sdir / "segments.log")
        snapshots = []
        for ref in meta["snapshot_refs"]:
            spath = sdir / "snapshots" / f"{ref}.doc"
            if spath.exists():
                snapshots.append(
                    docs.snapshot_from_dict(docs.unwrap_doc(spath.read_text(encoding="utf-8")))
                )
        tags = None
        tpath = sdir / "tags.doc"
        if tpath.exists():
            payload = docs.unwrap_doc(tpath.read_text(encoding="utf-8"))
            tags = [docs.tagged_from_dict(t) for t in payload["tags"]]
        report = None
        rpath = sdir / "report.doc"
        if rpath.exists():
            report = docs.report_from_dict(docs.unwrap_doc(rpath.read_text(encoding="utf-8")))
        return SessionRecord(
            session_id=meta["session_id"],
            created_at=meta["created_at"],
            title=meta["title"],
            state=SessionState(meta["state"]),
            history=docs.history_from_list(meta["history"]),
            started_at=meta["started_at"],
            stopped_at=meta["stopped_at"],
            taxonomy_version=meta["taxonomy_version"],
            transcription_provider=meta["transcription_provider"],
            analysis_provider=meta["analysis_provider"],
            segments=segments,
            sentences=[docs.sentence_from_dict(s) for s in meta["sentences"]],
            snapshots=snapshots,
            snapshot_refs=[s.version for s in snapshots],
            tags=tags,
            report=report,
        )

    def delete_session(self, session_id: str) -> None:
        sdir = self._dir(session_id)
        if not sdir.exists():
            raise NotFoundError(f"unknown session {session_id}", session_id=session_id)
        import shutil

        shutil.rmtree(sdir)
        self._write_index(self._scan_entries())

    # -- index ------------------------------------------------------------

    def _scan_entries(self) -> list[IndexEntry]:
        entries = []
        for sdir in sorted(self.root.iterdir()):
            if not sdir.is_dir():
                continue
            doc_path = sdir / "session.doc"
            if not doc_path.exists():
                continue  # partial session dir with no commit point
            try:
                meta = docs.unwrap_doc(doc_path.read_text(encoding="utf-8"))
            except (IntegrityError, ValueError):
                continue
            segments = self._read_segment_log(sdir / "segments.log")
            refs = [
                r for r in meta["snapshot_refs"]
                if (sdir / "snapshots" / f"{r}.doc").exists()
            ]
            entries.append(
                IndexEntry(
                    session_id=meta["session_id"],
                    created_at=meta["created_at"],
                    title=meta["title"],
                    state=meta["state"],
                    segment_count=len(segments),
                    latest_snapshot_version=max(refs) if refs else None,
                )
            )
        entries.sort(key=lambda e: (-e.created_at, e.session_id))
        return entries

    def _update_index_entry(self, entry: IndexEntry) -> None:
        """Replace one session's index row without rescanning the store."""
        entries = self._read_index()
        if entries is None:
            entries = self._scan_entries()
        else:
            entries = [e for e in entries if e.session_id != entry.session_id]
            entries.append(entry)
            entries.sort(key=lambda e: (-e.created_at, e.session_id))
        self._write_index(entries)

    def _write_index(self, entries: list[IndexEntry]) -> None:
        payload = {
            "entries": [
                {
                    "session_id": e.session_id,
                    "created_at": e.created_at,
                    "title": e.title,
                    "state": e.state,
                    "segment_count": e.segment_count,
                    "latest_snapshot_version": e.latest_snapshot_version,
                }
                for e in entries
            ]
        }
        atomic_write_text(self._index_path(), docs.wrap_doc(payload))

    def _read_index(self) -> list[IndexEntry] | None:
        path = self._index_path()
        if not path.exists():
            return None
        try:
            payload = docs.unwrap_doc(path.read_text(encoding="utf-8"))
        except (IntegrityError, ValueError):
            return None
        return [
            IndexEntry(
                session_id=e["session_id"],
                created_at=e["created_at"],
                title=e["title"],
                state=e["state"],
                segment_count=e["segment_count"],
                latest_snapshot_version=e["latest_snapshot_version"],
            )
            for e in payload["entries"]
        ]

    def _rebuild_index_if_stale(self) -> None:
        current = self._read_index()
        actual = self._scan_entries()
        if current != actual:
            self._write_index(actual)

    def list_sessions(
        self, state: str | None = None, since: int | None = None
    ) -> list[IndexEntry]:
        """Index slice, newest first; filters applied exactly."""
        entries = self._read_index()
        if entries is None:
            entries = self._scan_entries()
            self._write_index(entries)
        if state is not None:
            entries = [e for e in entries if e.state == state]
        if since is not None:
            entries = [e for e in entries if e.created_at >= since]
        return entries

    # -- export / import --------------------------------------------------

    _ZIP_DATE = (2020, 1, 1, 0, 0, 0)  # fixed for byte-deterministic archives

    def export_session(self, session_id: str, out_path: str | Path) -> Path:
        """Self-contained archive with an embedded per-file checksum
        manifest. A Recording session exports fine but is marked partial."""
        sdir = self._dir(session_id)
        if not (sdir / "session.doc").exists():
            raise NotFoundError(f"unknown session {session_id}", session_id=session_id)
        meta = docs.unwrap_doc((sdir / "session.doc").read_text(encoding="utf-8"))
        out_path = Path(out_path)
        files = sorted(
            p for p in sdir.rglob("*") if p.is_file() and not p.name.endswith(".tmp")
        )
        import hashlib

        manifest = {
            "session_id": session_id,
            "partial": meta["state"] != SessionState.ENDED.value,
            "format_version": docs.FORMAT_VERSION,
            "files": {},
        }
        with zipfile.ZipFile(out_path, "w", zipfile.ZIP_DEFLATED) as zf:
            for p in files:
                rel = str(p.relative_to(sdir))
                data = p.read_bytes()
                manifest["files"][rel] = hashlib.sha256(data).hexdigest()
                info = zipfile.ZipInfo(rel, date_time=self._ZIP_DATE)
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, data)
            info = zipfile.ZipInfo("manifest.json", date_time=self._ZIP_DATE)
            zf.writestr(info, docs.canonical_json(manifest) + "\n")
        return out_path

    def import_session(self, archive_path: str | Path) -> str:
        """Verify the archive against its manifest and install it."""
        import hashlib

        with zipfile.ZipFile(archive_path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            session_id = manifest["session_id"]
            for rel, expected in manifest["files"].items():
                data = zf.read(rel)
                if hashlib.sha256(data).hexdigest() != expected:
                    raise IntegrityError(
                        f"archive file {rel} fails its checksum", file=rel
                    )
            sdir = self._dir(session_id)
            for rel in manifest["files"]:
                target = sdir / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(zf.read(rel))
        self._write_index(self._scan_entries())
        return session_id
