"""Document serialization for the on-disk store and the API.

Every document is canonical JSON (sorted keys, fixed separators) with a
``format_version`` field and a ``checksum`` over the payload, so byte
determinism and tamper detection come for free.
"""

from __future__ import annotations

import hashlib
import json

from .analysis import (
    AnalysisSnapshot,
    KeywordStat,
    SentimentScore,
    TaggedSentence,
    ThematicReport,
    ThemeGroup,
)
from .errors import IntegrityError
from .ingest import Sentence, Speaker, TranscriptSegment
from .session import SessionState, StateChange

FORMAT_VERSION = 1


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def checksum(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def wrap_doc(payload: dict) -> str:
    """Envelope with format version and payload checksum."""
    doc = {
        "format_version": FORMAT_VERSION,
        "checksum": checksum(payload),
        "payload": payload,
    }
    return canonical_json(doc) + "\n"


def unwrap_doc(text: str) -> dict:
    doc = json.loads(text)
    payload = doc["payload"]
    if doc.get("checksum") != checksum(payload):
        raise IntegrityError("document checksum mismatch")
    return payload


# -- per-type converters ----------------------------------------------------


def segment_to_dict(seg: TranscriptSegment) -> dict:
    return {
        "segment_id": seg.segment_id,
        "session_id": seg.session_id,
        "seq": seg.seq,
        "speaker": seg.speaker.value,
        "text": seg.text,
        "t_start": seg.t_start,
        "t_end": seg.t_end,
    }


def segment_from_dict(d: dict) -> TranscriptSegment:
    return TranscriptSegment(
        segment_id=d["segment_id"],
        session_id=d["session_id"],
        seq=d["seq"],
        speaker=Speaker(d["speaker"]),
        text=d["text"],
        t_start=d["t_start"],
        t_end=d["t_end"],
    )


def sentence_to_dict(s: Sentence) -> dict:
    return {
        "sentence_id": s.sentence_id,
        "segment_id": s.segment_id,
        "index": s.index,
        "text": s.text,
    }


def sentence_from_dict(d: dict) -> Sentence:
    return Sentence(
        sentence_id=d["sentence_id"],
        segment_id=d["segment_id"],
        index=d["index"],
        text=d["text"],
    )


def snapshot_to_dict(s: AnalysisSnapshot) -> dict:
    return {
        "session_id": s.session_id,
        "version": s.version,
        "coverage_seq": s.coverage_seq,
        "summary": s.summary,
        "key_points": list(s.key_points),
        "follow_up_questions": list(s.follow_up_questions),
        "generated_at": s.generated_at,
        "provider_name": s.provider_name,
        "taxonomy_version": s.taxonomy_version,
        "template_version": s.template_version,
    }


def snapshot_from_dict(d: dict) -> AnalysisSnapshot:
    return AnalysisSnapshot(
        session_id=d["session_id"],
        version=d["version"],
        coverage_seq=d["coverage_seq"],
        summary=d["summary"],
        key_points=tuple(d["key_points"]),
        follow_up_questions=tuple(d["follow_up_questions"]),
        generated_at=d["generated_at"],
        provider_name=d["provider_name"],
        taxonomy_version=d["taxonomy_version"],
        template_version=d["template_version"],
    )


def tagged_to_dict(t: TaggedSentence) -> dict:
    return {
        "sentence_id": t.sentence_id,
        "labels": list(t.labels),
        "polarity": t.polarity,
        "rationale": t.rationale,
    }


def tagged_from_dict(d: dict) -> TaggedSentence:
    return TaggedSentence(
        sentence_id=d["sentence_id"],
        labels=tuple(d["labels"]),
        polarity=d["polarity"],
        rationale=d["rationale"],
    )


def report_to_dict(r: ThematicReport) -> dict:
    return {
        "session_id": r.session_id,
        "taxonomy_version": r.taxonomy_version,
        "groups": [
            {
                "label": g.label,
                "sentence_ids": list(g.sentence_ids),
                "theme_summary": g.theme_summary,
            }
            for g in r.groups
        ],
        "keyword_stats": [{"token": k.token, "count": k.count} for k in r.keyword_stats],
        "overall_sentiment": {
            "value": r.overall_sentiment.value,
            "basis": r.overall_sentiment.basis,
        },
    }


def report_from_dict(d: dict) -> ThematicReport:
    return ThematicReport(
        session_id=d["session_id"],
        taxonomy_version=d["taxonomy_version"],
        groups=tuple(
            ThemeGroup(
                label=g["label"],
                sentence_ids=tuple(g["sentence_ids"]),
                theme_summary=g["theme_summary"],
            )
            for g in d["groups"]
        ),
        keyword_stats=tuple(
            KeywordStat(token=k["token"], count=k["count"]) for k in d["keyword_stats"]
        ),
        overall_sentiment=SentimentScore(
            value=d["overall_sentiment"]["value"],
            basis=d["overall_sentiment"]["basis"],
        ),
    )


def history_to_list(history: list[StateChange]) -> list[dict]:
    return [{"at": h.at, "event": h.event, "state": h.state.value} for h in history]


def history_from_list(items: list[dict]) -> list[StateChange]:
    return [
        StateChange(at=i["at"], event=i["event"], state=SessionState(i["state"]))
        for i in items
    ]
