import random
import zipfile

import pytest

from pulse.analysis import (
    AnalysisSnapshot,
    KeywordStat,
    SentimentScore,
    TaggedSentence,
    ThematicReport,
    ThemeGroup,
)
from pulse.errors import IntegrityError, NotFoundError, ValidationError
from pulse.ingest import Sentence, Speaker, TranscriptSegment
from pulse.session import SessionState, StateChange
from pulse.store import SessionRecord, Store


def make_record(session_id="s1", created_at=100, n_segments=2, n_snapshots=1,
                state=SessionState.ENDED, with_report=True):
    segments = [
        TranscriptSegment(
            segment_id=f"{session_id}-seg-{i}",
            session_id=session_id,
            seq=i,
            speaker=Speaker.PARTICIPANT,
            text=f"Sentence number {i}.",
            t_start=i * 1000,
            t_end=i * 1000 + 500,
        )
        for i in range(n_segments)
    ]
    sentences = [
        Sentence(
            sentence_id=f"{s.segment_id}-s0",
            segment_id=s.segment_id,
            index=0,
            text=s.text,
        )
        for s in segments
    ]
    snapshots = [
        AnalysisSnapshot(
            session_id=session_id,
            version=v + 1,
            coverage_seq=n_segments - 1,
            summary=f"summary v{v + 1}",
            key_points=("point",),
            follow_up_questions=("why?",),
            generated_at=200 + v,
            provider_name="rule_based",
            taxonomy_version=1,
            template_version="abc123",
        )
        for v in range(n_snapshots)
    ]
    tags = [
        TaggedSentence(sentence_id=s.sentence_id, labels=("No Label",))
        for s in sentences
    ]
    report = None
    if with_report:
        report = ThematicReport(
            session_id=session_id,
            taxonomy_version=1,
            groups=(ThemeGroup("No Label", tuple(s.sentence_id for s in sentences), "t"),),
            keyword_stats=(KeywordStat("sentence", n_segments),),
            overall_sentiment=SentimentScore(0.0, "lexicon"),
        )
    return SessionRecord(
        session_id=session_id,
        created_at=created_at,
        title="fixture",
        state=state,
        history=[
            StateChange(0, "auth", SessionState.READY),
            StateChange(1, "start", SessionState.RECORDING),
            StateChange(2, "stop", SessionState.ENDED),
        ],
        started_at=1,
        stopped_at=2,
        segments=segments,
        sentences=sentences,
        snapshots=snapshots,
        snapshot_refs=[s.version for s in snapshots],
        tags=tags,
        report=report,
    )


class TestRoundTrip:
    def test_save_load_equality(self, tmp_path):
        store = Store(tmp_path)
        record = make_record()
        store.save_session(record)
        loaded = store.load_session("s1")
        record.history = record.history  # structural equality below
        assert loaded.__dict__ == record.__dict__

    def test_unknown_id_not_found(self, tmp_path):
        with pytest.raises(NotFoundError):
            Store(tmp_path).load_session("nope")

    def test_dangling_snapshot_ref_rejected(self, tmp_path):
        record = make_record()
        record.snapshot_refs.append(99)
        with pytest.raises(ValidationError):
            Store(tmp_path).save_session(record)

    def test_dangling_tag_ref_rejected(self, tmp_path):
        record = make_record()
        record.tags.append(TaggedSentence(sentence_id="ghost", labels=("No Label",)))
        with pytest.raises(ValidationError):
            Store(tmp_path).save_session(record)

    def test_second_save_overwrites_and_index_shows_latest(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record(n_snapshots=1))
        store.save_session(make_record(n_snapshots=3))
        [entry] = store.list_sessions()
        assert entry.latest_snapshot_version == 3
        assert len(store.load_session("s1").snapshots) == 3

    def test_fuzzed_round_trips(self, tmp_path):
        rng = random.Random(7)
        store = Store(tmp_path)
        for i in range(50):
            record = make_record(
                session_id=f"s{i}",
                created_at=rng.randrange(10**6),
                n_segments=rng.randrange(0, 5),
                n_snapshots=rng.randrange(0, 4),
                with_report=rng.random() < 0.5,
            )
            store.save_session(record)
            assert store.load_session(f"s{i}").__dict__ == record.__dict__


class TestListSessions:
    def test_newest_first(self, tmp_path):
        store = Store(tmp_path)
        for sid, at in [("a", 10), ("b", 30), ("c", 20)]:
            store.save_session(make_record(session_id=sid, created_at=at))
        assert [e.session_id for e in store.list_sessions()] == ["b", "c", "a"]

    def test_state_filter(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record("a", state=SessionState.ENDED))
        store.save_session(make_record("b", state=SessionState.ENDED))
        store.save_session(make_record("c", state=SessionState.RECORDING))
        assert len(store.list_sessions(state="Ended")) == 2

    def test_empty_store(self, tmp_path):
        assert Store(tmp_path).list_sessions() == []

    def test_index_rebuilt_on_open(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record("a"))
        (tmp_path / "index.doc").unlink()
        reopened = Store(tmp_path)
        assert [e.session_id for e in reopened.list_sessions()] == ["a"]

    def test_corrupt_index_rebuilt(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record("a"))
        (tmp_path / "index.doc").write_text("garbage", encoding="utf-8")
        assert [e.session_id for e in Store(tmp_path).list_sessions()] == ["a"]


class TestExportImport:
    def test_round_trip(self, tmp_path):
        store = Store(tmp_path / "one")
        record = make_record()
        store.save_session(record)
        archive = store.export_session("s1", tmp_path / "s1.zip")
        other = Store(tmp_path / "two")
        other.import_session(archive)
        assert other.load_session("s1").__dict__ == record.__dict__

    def test_recording_session_marked_partial(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record(state=SessionState.RECORDING))
        archive = store.export_session("s1", tmp_path / "s1.zip")
        import json

        with zipfile.ZipFile(archive) as zf:
            manifest = json.loads(zf.read("manifest.json"))
        assert manifest["partial"] is True

    def test_tampered_archive_rejected(self, tmp_path):
        store = Store(tmp_path / "one")
        store.save_session(make_record())
        archive = store.export_session("s1", tmp_path / "s1.zip")
        # Rewrite one stored file with a flipped byte, manifest untouched.
        with zipfile.ZipFile(archive) as zf:
            names = [n for n in zf.namelist() if n != "manifest.json"]
            contents = {n: zf.read(n) for n in zf.namelist()}
        victim = names[0]
        data = bytearray(contents[victim])
        data[0] ^= 0xFF
        contents[victim] = bytes(data)
        with zipfile.ZipFile(archive, "w") as zf:
            for n, blob in contents.items():
                zf.writestr(n, blob)
        with pytest.raises(IntegrityError):
            Store(tmp_path / "two").import_session(archive)

    def test_export_unknown_session(self, tmp_path):
        with pytest.raises(NotFoundError):
            Store(tmp_path).export_session("nope", tmp_path / "x.zip")


class TestCrashConsistency:
    def test_torn_segment_log_line_truncated(self, tmp_path):
        store = Store(tmp_path)
        record = make_record(n_segments=3)
        store.save_session(record)
        log = tmp_path / "s1" / "segments.log"
        text = log.read_text(encoding="utf-8")
        log.write_text(text[: len(text) - 10], encoding="utf-8")  # torn tail
        loaded = Store(tmp_path).load_session("s1")
        assert [s.seq for s in loaded.segments] == [0, 1]

    def test_leftover_tmp_file_ignored(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record())
        (tmp_path / "s1" / "session.doc.tmp").write_text("partial", encoding="utf-8")
        reopened = Store(tmp_path)
        assert reopened.load_session("s1").session_id == "s1"
        archive = reopened.export_session("s1", tmp_path / "s1.zip")
        with zipfile.ZipFile(archive) as zf:
            assert not any(n.endswith(".tmp") for n in zf.namelist())

    def test_session_dir_without_commit_point_invisible(self, tmp_path):
        store = Store(tmp_path)
        store.save_session(make_record("a"))
        partial = tmp_path / "b"
        partial.mkdir()
        (partial / "segments.log").write_text("{}", encoding="utf-8")
        assert [e.session_id for e in Store(tmp_path).list_sessions()] == ["a"]

    def test_interrupted_write_leaves_previous_state(self, tmp_path, monkeypatch):
        store = Store(tmp_path)
        store.save_session(make_record(n_snapshots=1))

        import os

        real_replace = os.replace

        def crash(src, dst):
            if str(dst).endswith("session.doc"):
                raise OSError("simulated crash")
            return real_replace(src, dst)

        monkeypatch.setattr("pulse.store.os.replace", crash)
        with pytest.raises(Exception):
            store.save_session(make_record(n_snapshots=2))
        monkeypatch.undo()

        reopened = Store(tmp_path)
        loaded = reopened.load_session("s1")
        # session.doc still the old commit point; index consistent with it.
        assert loaded.snapshot_refs == [1]
        [entry] = reopened.list_sessions()
        assert entry.latest_snapshot_version == 1
