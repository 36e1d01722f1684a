"""Interview session lifecycle: credential gating, state machine, tap
gestures, display mode and the session timer.

All timestamps are integer milliseconds. Tap classification is online:
gestures are resolved as soon as the inter-tap window allows, never before,
so the same tap stream always yields the same gestures regardless of how it
is chunked.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import AuthError, StateError, ValidationError

DEFAULT_DOUBLE_TAP_WINDOW_MS = 400


class SessionState(str, Enum):
    LOCKED = "Locked"
    READY = "Ready"
    RECORDING = "Recording"
    ENDED = "Ended"


# (current state, event) -> next state; anything absent is illegal.
_TRANSITIONS = {
    (SessionState.LOCKED, "auth"): SessionState.READY,
    (SessionState.READY, "start"): SessionState.RECORDING,
    (SessionState.RECORDING, "stop"): SessionState.ENDED,
}


class Gesture(str, Enum):
    SINGLE_TAP = "SingleTap"
    DOUBLE_TAP = "DoubleTap"


class DisplayMode(str, Enum):
    SUMMARY = "Summary"
    FOLLOW_UPS = "FollowUps"


def gesture_to_mode(gesture: Gesture) -> DisplayMode:
    """One tap shows the summary, two taps the follow-up questions."""
    if gesture is Gesture.SINGLE_TAP:
        return DisplayMode.SUMMARY
    return DisplayMode.FOLLOW_UPS


@dataclass(frozen=True)
class AccessCredential:
    uid: str


@dataclass(frozen=True)
class TapEvent:
    session_id: str
    at: int  # ms, monotonic within a session


@dataclass
class AuditEntry:
    at: int
    uid: str
    granted: bool


class AuditLog:
    """Append-only record of every authentication attempt."""

    def __init__(self):
        self._entries: list[AuditEntry] = []
        self._lock = threading.Lock()

    def record(self, at: int, uid: str, granted: bool) -> None:
        with self._lock:
            self._entries.append(AuditEntry(at=at, uid=uid, granted=granted))

    def entries(self) -> list[AuditEntry]:
        with self._lock:
            return list(self._entries)


def load_allowlist(path: str | Path) -> set[str]:
    """One uid per line, UTF-8; blank lines and ``#`` comments ignored."""
    uids: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        uids.add(line)
    return uids


def authenticate(
    credential: AccessCredential,
    allowlist: set[str],
    audit: AuditLog | None = None,
    at: int = 0,
) -> bool:
    """Byte-exact allowlist membership. Empty uid is a validation error,
    not a denial."""
    if not credential.uid:
        raise ValidationError("credential uid must be non-empty")
    granted = credential.uid in allowlist
    if audit is not None:
        audit.record(at=at, uid=credential.uid, granted=granted)
    return granted


class TapClassifier:
    """Online greedy pairing of taps into gestures.

    Two consecutive taps with gap <= window form one DoubleTap (a gap exactly
    equal to the window counts). An unpaired tap becomes a SingleTap only
    once the window has elapsed with no successor, which ``advance`` or
    ``flush`` makes explicit. Each tap belongs to exactly one gesture.
    """

    def __init__(self, window_ms: int = DEFAULT_DOUBLE_TAP_WINDOW_MS):
        if window_ms <= 0:
            raise ValidationError("window_ms must be positive")
        self.window_ms = window_ms
        self._pending_at: int | None = None
        self._last_at: int | None = None

    def feed(self, at: int) -> list[Gesture]:
        """Ingest one tap; returns gestures resolved by it."""
        if self._last_at is not None and at < self._last_at:
            raise ValidationError(
                "tap timestamps must be non-decreasing",
                previous=self._last_at,
                got=at,
            )
        self._last_at = at
        resolved: list[Gesture] = []
        if self._pending_at is None:
            self._pending_at = at
            return resolved
        if at - self._pending_at <= self.window_ms:
            self._pending_at = None
            resolved.append(Gesture.DOUBLE_TAP)
        else:
            # Window expired for the pending tap before this one arrived.
            resolved.append(Gesture.SINGLE_TAP)
            self._pending_at = at
        return resolved

    def advance(self, now: int) -> list[Gesture]:
        """Resolve a pending tap whose window has expired by time ``now``."""
        if self._pending_at is not None and now - self._pending_at > self.window_ms:
            self._pending_at = None
            return [Gesture.SINGLE_TAP]
        return []

    def flush(self) -> list[Gesture]:
        """Resolve any pending tap unconditionally (end of input)."""
        if self._pending_at is not None:
            self._pending_at = None
            return [Gesture.SINGLE_TAP]
        return []


def classify_taps(
    taps: list[TapEvent],
    window_ms: int = DEFAULT_DOUBLE_TAP_WINDOW_MS,
) -> list[Gesture]:
    """Classify a complete, sorted tap sequence into gestures."""
    for a, b in zip(taps, taps[1:]):
        if b.at < a.at:
            raise ValidationError("taps must be sorted by timestamp")
    clf = TapClassifier(window_ms)
    out: list[Gesture] = []
    for tap in taps:
        out.extend(clf.feed(tap.at))
    out.extend(clf.flush())
    return out


@dataclass
class StateChange:
    at: int
    event: str
    state: SessionState


@dataclass
class Session:
    """One interview session. Mutations go through ``SessionManager`` or the
    methods here, under the session lock held by the caller."""

    session_id: str
    created_at: int
    state: SessionState = SessionState.LOCKED
    started_at: int | None = None
    stopped_at: int | None = None
    taxonomy_version: int = 1
    history: list[StateChange] = field(default_factory=list)
    mode: DisplayMode | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transition(self, event: str, at: int) -> SessionState:
        """Apply one lifecycle event; illegal transitions raise StateError."""
        key = (self.state, event)
        if key not in _TRANSITIONS:
            raise StateError(
                f"cannot apply '{event}' in state {self.state.value}",
                state=self.state.value,
                event=event,
            )
        self.state = _TRANSITIONS[key]
        if self.state is SessionState.RECORDING:
            self.started_at = at
        elif self.state is SessionState.ENDED:
            self.stopped_at = at
        self.history.append(StateChange(at=at, event=event, state=self.state))
        return self.state

    def elapsed(self, now: int) -> int:
        """Elapsed recording time in ms; frozen once Ended."""
        if self.state is SessionState.RECORDING:
            return max(0, now - self.started_at)
        if self.state is SessionState.ENDED:
            return self.stopped_at - self.started_at
        raise StateError(
            f"no timer in state {self.state.value}", state=self.state.value
        )
