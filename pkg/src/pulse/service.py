"""Application layer: wires the session state machine, chunk ingestion,
analysis passes and the store together, and fans committed LiveEvents out
to stream subscribers.

Time never comes from the wall clock here: every mutation carries its own
millisecond timestamp (real time for live use, script time for the
emulator's virtual clock), which is what makes end-to-end runs replayable.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field

from .analysis import (
    AnalysisConfig,
    AnalysisSnapshot,
    LabelDef,
    RuleBasedProvider,
    Taxonomy,
    default_taxonomy,
    set_taxonomy,
    template_version,
    thematic_report,
)
from .errors import (
    AuthError,
    EmptyInputError,
    ForbiddenError,
    NotFoundError,
    StateError,
)
from .ingest import (
    AudioChunk,
    ChunkQueue,
    InlineTextProvider,
    Speaker,
    TranscriptSegment,
    TranscriptionProvider,
    split_sentences,
)
from .session import (
    AccessCredential,
    AuditLog,
    DisplayMode,
    Gesture,
    Session,
    SessionState,
    TapClassifier,
    authenticate,
    gesture_to_mode,
)
from .store import SessionRecord, Store


@dataclass(frozen=True)
class LiveEvent:
    session_id: str
    seq: int
    kind: str  # state_changed | timer_tick | snapshot_ready | mode_changed
    payload: dict


class EventLog:
    """Per-session committed event log; readers resume by sequence number."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self._events: list[LiveEvent] = []
        self._cond = threading.Condition()
        self._closed = False

    def append(self, kind: str, payload: dict) -> LiveEvent:
        with self._cond:
            event = LiveEvent(
                session_id=self.session_id,
                seq=len(self._events) + 1,
                kind=kind,
                payload=payload,
            )
            self._events.append(event)
            self._cond.notify_all()
            return event

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def events_after(self, last_seq: int) -> list[LiveEvent]:
        with self._cond:
            return self._events[last_seq:]

    def subscribe(self, last_seq: int = 0, poll_s: float = 0.05):
        """Yield committed events after ``last_seq`` in order; ends once the
        log is closed and drained."""
        cursor = last_seq
        while True:
            with self._cond:
                while len(self._events) <= cursor and not self._closed:
                    self._cond.wait(timeout=poll_s)
                batch = self._events[cursor:]
                closed = self._closed
            for event in batch:
                cursor = event.seq
                yield event
            if closed and not batch:
                return


@dataclass
class ServiceConfig:
    allowlist: set[str] = field(default_factory=set)
    reader_key: str = "reader"
    admin_key: str = "admin"
    double_tap_window_ms: int = 400
    max_questions: int = 3
    word_budget: int = 60
    store_audio: bool = False
    deterministic_ids: bool = False
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)


class LiveSession:
    """In-memory state for one active session."""

    def __init__(self, session: Session, token: str, window_ms: int):
        self.session = session
        self.token = token
        self.queue = ChunkQueue()
        self.taps = TapClassifier(window_ms)
        self.events = EventLog(session.session_id)
        self.segments: list[TranscriptSegment] = []
        self.sentences = []
        self.snapshots: list[AnalysisSnapshot] = []
        self.tags = None
        self.report = None
        self.title = ""
        self.virtual_now = 0


class SessionService:
    def __init__(
        self,
        store: Store,
        config: ServiceConfig | None = None,
        transcription: TranscriptionProvider | None = None,
        analysis_provider: RuleBasedProvider | None = None,
    ):
        self.store = store
        self.config = config or ServiceConfig()
        self.transcription = transcription or InlineTextProvider()
        self.provider = analysis_provider or RuleBasedProvider(self.config.analysis)
        self.taxonomy: Taxonomy = default_taxonomy()
        self.audit = AuditLog()
        self._sessions: dict[str, LiveSession] = {}
        self._counter = 0
        self._lock = threading.Lock()

    # -- ids ---------------------------------------------------------------

    def _new_ids(self) -> tuple[str, str]:
        with self._lock:
            self._counter += 1
            n = self._counter
        if self.config.deterministic_ids:
            return f"S{n:04d}", f"T{n:04d}"
        return f"s-{secrets.token_hex(6)}", secrets.token_hex(16)

    def _now_ms(self, live: LiveSession | None = None) -> int:
        if self.config.deterministic_ids:
            return live.virtual_now if live else 0
        return int(time.time() * 1000)

    # -- lifecycle ---------------------------------------------------------

    def create_session(self, uid: str, title: str = "", at: int | None = None) -> dict:
        """Authenticate and open a session in Ready."""
        granted = authenticate(
            AccessCredential(uid=uid),
            self.config.allowlist,
            audit=self.audit,
            at=at or 0,
        )
        if not granted:
            raise AuthError("credential denied", uid=uid)
        session_id, token = self._new_ids()
        session = Session(session_id=session_id, created_at=at or self._now_ms())
        session.transition("auth", at=at or 0)
        live = LiveSession(session, token, self.config.double_tap_window_ms)
        live.title = title
        live.session.taxonomy_version = self.taxonomy.version
        with self._lock:
            self._sessions[session_id] = live
        live.events.append("state_changed", {"state": session.state.value})
        self._persist(live)
        return {"session_id": session_id, "token": token, "state": session.state.value}

    def _live(self, session_id: str) -> LiveSession:
        live = self._sessions.get(session_id)
        if live is None:
            raise NotFoundError(f"unknown session {session_id}", session_id=session_id)
        return live

    def check_token(self, session_id: str, token: str) -> LiveSession:
        live = self._live(session_id)
        if token != live.token:
            raise ForbiddenError("invalid session token")
        return live

    def transition(self, session_id: str, event: str, at: int) -> str:
        live = self._live(session_id)
        with live.session.lock:
            live.virtual_now = max(live.virtual_now, at)
            if event == "stop":
                # End of input resolves any pending tap before the state flips.
                self._resolve(live, live.taps.flush(), at)
            state = live.session.transition(event, at=at)
            live.events.append("state_changed", {"state": state.value})
            if state is SessionState.ENDED:
                self._finalize(live, at)
                live.events.close()
            self._persist(live)
        return state.value

    # -- ingestion ---------------------------------------------------------

    def ingest_chunk(self, session_id: str, chunk: AudioChunk) -> dict:
        live = self._live(session_id)
        with live.session.lock:
            acked = live.queue.ingest(live.session, chunk)
            live.virtual_now = max(live.virtual_now, chunk.t_end)
            text = self.transcription.transcribe_chunk(chunk)
            if text is not None:
                segment = TranscriptSegment(
                    segment_id=f"{session_id}-seg-{chunk.seq}",
                    session_id=session_id,
                    seq=chunk.seq,
                    speaker=chunk.speaker,
                    text=text,
                    t_start=chunk.t_start,
                    t_end=chunk.t_end,
                )
                live.segments.append(segment)
                live.sentences.extend(split_sentences(segment))
            if self.config.store_audio and chunk.payload:
                self.store.save_audio_chunk(session_id, chunk.seq, chunk.payload)
            elapsed = live.session.elapsed(chunk.t_end)
            live.events.append("timer_tick", {"elapsed_ms": elapsed})
            # A chunk's arrival time can expire a pending single tap.
            gestures = live.taps.advance(chunk.t_start)
            snapshot_version = self._resolve(live, gestures, chunk.t_start)
            self._persist(live)
        return {
            "acked_seq": acked,
            "resolved": [g.value for g in gestures],
            "mode": live.session.mode.value if live.session.mode else None,
            "snapshot_version": snapshot_version,
        }

    # -- taps and analysis -------------------------------------------------

    def tap(self, session_id: str, at: int) -> dict:
        live = self._live(session_id)
        with live.session.lock:
            if live.session.state is not SessionState.RECORDING:
                raise StateError(
                    f"taps require Recording, session is {live.session.state.value}",
                    state=live.session.state.value,
                )
            live.virtual_now = max(live.virtual_now, at)
            gestures = live.taps.advance(at)
            gestures += live.taps.feed(at)
            snapshot_version = self._resolve(live, gestures, at)
            if gestures:
                self._persist(live)
            return {
                "mode": live.session.mode.value if live.session.mode else None,
                "snapshot_version": snapshot_version,
                "resolved": [g.value for g in gestures],
            }

    def _resolve(self, live: LiveSession, gestures: list[Gesture], at: int) -> int | None:
        version = None
        for gesture in gestures:
            mode = gesture_to_mode(gesture)
            live.session.mode = mode
            live.events.append("mode_changed", {"mode": mode.value, "gesture": gesture.value})
            snapshot = self._analysis_pass(live, at)
            if snapshot is not None:
                version = snapshot.version
        return version

    def _analysis_pass(self, live: LiveSession, at: int) -> AnalysisSnapshot | None:
        if not live.segments:
            return None
        coverage = max(s.seq for s in live.segments)
        summary, key_points = self.provider.summarize(live.segments)
        try:
            questions = self.provider.suggest_followups(
                live.segments, self.taxonomy, self.config.max_questions
            )
        except EmptyInputError:
            questions = []
        snapshot = AnalysisSnapshot(
            session_id=live.session.session_id,
            version=len(live.snapshots) + 1,
            coverage_seq=coverage,
            summary=summary,
            key_points=tuple(key_points),
            follow_up_questions=tuple(questions),
            generated_at=at,
            provider_name=self.provider.name,
            taxonomy_version=self.taxonomy.version,
            template_version=template_version(self.provider.config),
        )
        live.snapshots.append(snapshot)
        live.events.append(
            "snapshot_ready",
            {
                "version": snapshot.version,
                "coverage_seq": snapshot.coverage_seq,
                "summary": snapshot.summary,
                "key_points": list(snapshot.key_points),
                "follow_up_questions": list(snapshot.follow_up_questions),
            },
        )
        return snapshot

    def _finalize(self, live: LiveSession, at: int) -> None:
        """Tag every sentence and build the thematic report at session end."""
        if live.sentences:
            live.tags = self.provider.tag_sentences(live.sentences, self.taxonomy)
        else:
            live.tags = []
        live.report = thematic_report(
            live.session.session_id,
            self.taxonomy,
            live.sentences,
            live.tags,
            live.segments,
            self.provider,
            self.provider.config,
        )

    # -- persistence and reads ---------------------------------------------

    def _record(self, live: LiveSession) -> SessionRecord:
        return SessionRecord(
            session_id=live.session.session_id,
            created_at=live.session.created_at,
            title=live.title,
            state=live.session.state,
            history=list(live.session.history),
            started_at=live.session.started_at,
            stopped_at=live.session.stopped_at,
            taxonomy_version=live.session.taxonomy_version,
            transcription_provider=self.transcription.name,
            analysis_provider=self.provider.name,
            segments=list(live.segments),
            sentences=list(live.sentences),
            snapshots=list(live.snapshots),
            snapshot_refs=[s.version for s in live.snapshots],
            tags=list(live.tags) if live.tags is not None else None,
            report=live.report,
        )

    def _persist(self, live: LiveSession) -> None:
        self.store.save_session(self._record(live))

    def session_detail(self, session_id: str, label: str | None = None) -> dict:
        """Detail view: latest snapshot, tag counts, keywords, sentiment and
        (for Ended sessions) the thematic report."""
        live = self._sessions.get(session_id)
        record = self._record(live) if live else self.store.load_session(session_id)
        from . import docs

        tags = record.tags or []
        tag_counts: dict[str, int] = {}
        for t in tags:
            for l in t.labels:
                tag_counts[l] = tag_counts.get(l, 0) + 1
        sentences = record.sentences
        if label is not None:
            keep = {t.sentence_id for t in tags if label in t.labels}
            sentences = [s for s in sentences if s.sentence_id in keep]
        tag_by_id = {t.sentence_id: t for t in tags}
        return {
            "session_id": record.session_id,
            "title": record.title,
            "state": record.state.value,
            "created_at": record.created_at,
            "elapsed_ms": (
                record.stopped_at - record.started_at
                if record.stopped_at is not None and record.started_at is not None
                else None
            ),
            "segment_count": len(record.segments),
            "latest_snapshot": (
                docs.snapshot_to_dict(record.snapshots[-1]) if record.snapshots else None
            ),
            "tag_counts": tag_counts,
            "sentences": [
                {
                    **docs.sentence_to_dict(s),
                    "labels": list(tag_by_id[s.sentence_id].labels)
                    if s.sentence_id in tag_by_id
                    else [],
                    "polarity": tag_by_id[s.sentence_id].polarity
                    if s.sentence_id in tag_by_id
                    else None,
                }
                for s in sentences
            ],
            "report": docs.report_to_dict(record.report) if record.report else None,
        }

    def list_sessions(self, state: str | None = None) -> list[dict]:
        return [
            {
                "session_id": e.session_id,
                "created_at": e.created_at,
                "title": e.title,
                "state": e.state,
                "segment_count": e.segment_count,
                "latest_snapshot_version": e.latest_snapshot_version,
            }
            for e in self.store.list_sessions(state=state)
        ]

    def update_taxonomy(self, labels: list[dict]) -> int:
        defs = [
            LabelDef(
                name=l.get("name", ""),
                description=l.get("description", ""),
                lexicon=tuple(l.get("lexicon", ())),
            )
            for l in labels
        ]
        self.taxonomy = set_taxonomy(self.taxonomy, defs)
        return self.taxonomy.version

    def get_taxonomy(self) -> dict:
        return {
            "version": self.taxonomy.version,
            "labels": [
                {"name": l.name, "description": l.description, "lexicon": list(l.lexicon)}
                for l in self.taxonomy.labels
            ],
        }

    def event_log(self, session_id: str) -> EventLog:
        return self._live(session_id).events
