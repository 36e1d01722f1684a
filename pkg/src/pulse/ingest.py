"""Transcript ingestion: ordered chunk intake, pluggable transcription
providers, and the rule-based sentence splitter.

Scripted mode keeps every test hermetic: a script file fully determines the
segment stream, so repeated runs are bit-identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (
    ConfigurationError,
    SequenceError,
    StateError,
    ValidationError,
)
from .session import Session, SessionState


class Speaker(str, Enum):
    INTERVIEWER = "Interviewer"
    PARTICIPANT = "Participant"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class AudioChunk:
    session_id: str
    seq: int
    payload: bytes | None = None  # PCM 16-bit mono LE when audio mode
    text: str | None = None  # inline text when scripted mode
    speaker: Speaker = Speaker.UNKNOWN
    sample_rate: int = 16000
    t_start: int = 0
    t_end: int = 0

    def __post_init__(self):
        if self.seq < 0:
            raise ValidationError("chunk seq must be non-negative")
        if self.t_start > self.t_end:
            raise ValidationError("t_start must not exceed t_end")


@dataclass(frozen=True)
class TranscriptSegment:
    segment_id: str
    session_id: str
    seq: int
    speaker: Speaker
    text: str
    t_start: int
    t_end: int


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    segment_id: str
    index: int
    text: str


class ChunkQueue:
    """Per-session in-order chunk intake; acked seqs form a gapless prefix."""

    def __init__(self):
        self._chunks: list[AudioChunk] = []

    @property
    def last_acked(self) -> int:
        return len(self._chunks) - 1

    def ingest(self, session: Session, chunk: AudioChunk) -> int:
        if session.state is not SessionState.RECORDING:
            raise StateError(
                f"session is {session.state.value}, not Recording",
                state=session.state.value,
            )
        expected = self.last_acked + 1
        if chunk.seq != expected:
            raise SequenceError(
                f"out-of-order chunk seq {chunk.seq}, expected {expected}",
                expected=expected,
                got=chunk.seq,
            )
        self._chunks.append(chunk)
        return chunk.seq

    def chunks(self) -> list[AudioChunk]:
        return list(self._chunks)


class TranscriptionProvider:
    """Provider boundary for speech-to-text. Implementations map an ordered
    chunk stream to an ordered segment stream, one segment per non-silent
    chunk, preserving seq."""

    name = "abstract"
    streaming = False

    def transcribe_chunk(self, chunk: AudioChunk) -> str | None:
        """Text for a chunk, or None for silence."""
        raise NotImplementedError


class ScriptedProvider(TranscriptionProvider):
    """Deterministic provider: chunk seq N maps to the N-th script line
    (0-indexed). An empty line marks silence. Exhausting the script is a
    configuration error, not silence."""

    name = "scripted"

    def __init__(self, lines: list[str]):
        self._lines = list(lines)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())

    def transcribe_chunk(self, chunk: AudioChunk) -> str | None:
        if chunk.seq >= len(self._lines):
            raise ConfigurationError(
                f"script exhausted at chunk seq {chunk.seq} "
                f"({len(self._lines)} lines)",
                seq=chunk.seq,
            )
        text = self._lines[chunk.seq].strip()
        return text or None


class InlineTextProvider(TranscriptionProvider):
    """Passes through inline chunk text (the emulator's scripted mode)."""

    name = "inline"
    streaming = True

    def transcribe_chunk(self, chunk: AudioChunk) -> str | None:
        if chunk.text is None:
            return None
        text = chunk.text.strip()
        return text or None


def transcribe(
    chunks: list[AudioChunk],
    provider: TranscriptionProvider,
) -> list[TranscriptSegment]:
    """One segment per non-silent chunk, seq preserved."""
    segments: list[TranscriptSegment] = []
    for chunk in chunks:
        text = provider.transcribe_chunk(chunk)
        if text is None:
            continue
        segments.append(
            TranscriptSegment(
                segment_id=f"{chunk.session_id}-seg-{chunk.seq}",
                session_id=chunk.session_id,
                seq=chunk.seq,
                speaker=chunk.speaker,
                text=text,
                t_start=chunk.t_start,
                t_end=chunk.t_end,
            )
        )
    return segments


# Terminal punctuation ends a sentence only when followed by whitespace and
# an uppercase letter, or end-of-text. The abbreviation list suppresses
# false splits; versioned with the package so output is reproducible.
ABBREVIATIONS = frozenset(
    {
        "dr",
        "mr",
        "mrs",
        "ms",
        "prof",
        "st",
        "vs",
        "etc",
        "e.g",
        "i.e",
        "jr",
        "sr",
        "no",
        "approx",
    }
)

_BOUNDARY = re.compile(r"([.!?])(\s+)(?=[A-Z0-9\"'(])")
_LAST_WORD = re.compile(r"([A-Za-z][A-Za-z.]*)[.!?]$")


def _ends_with_abbreviation(text: str) -> bool:
    m = _LAST_WORD.search(text.strip())
    if not m:
        return False
    word = m.group(1).rstrip(".").lower()
    return word in ABBREVIATIONS


def split_sentences_text(text: str) -> list[str]:
    """Split text on terminal punctuation followed by whitespace and an
    uppercase start; abbreviations never split. No terminal punctuation
    yields the whole text as one sentence."""
    normalized = " ".join(text.split())
    if not normalized:
        raise ValidationError("cannot split empty text")
    parts: list[str] = []
    start = 0
    for m in _BOUNDARY.finditer(normalized):
        candidate = normalized[start : m.end(1)]
        if _ends_with_abbreviation(candidate):
            continue
        parts.append(candidate.strip())
        start = m.end()
    tail = normalized[start:].strip()
    if tail:
        parts.append(tail)
    return parts


def split_sentences(segment: TranscriptSegment) -> list[Sentence]:
    return [
        Sentence(
            sentence_id=f"{segment.segment_id}-s{i}",
            segment_id=segment.segment_id,
            index=i,
            text=text,
        )
        for i, text in enumerate(split_sentences_text(segment.text))
    ]
