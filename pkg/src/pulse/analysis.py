"""Analysis engine: rolling summaries, follow-up question suggestions,
sentence-level tagging against a customizable taxonomy, keyword frequency,
sentiment, and the post-interview thematic report.

Everything runs behind a provider boundary. The rule-based provider is a
pure function of (transcript, taxonomy, templates, lexicons): identical
inputs give byte-identical outputs, which is what the test suite leans on.
A remote provider adapter accepts only structured responses; free text is
rejected rather than parsed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable

from .errors import (
    ConfigurationError,
    EmptyInputError,
    ProviderError,
    ValidationError,
)
from .ingest import Sentence, Speaker, TranscriptSegment, split_sentences_text

# Built-in tag names.
NEEDS = "Needs and Expectations"
PAIN_POINTS = "Pain Points"
FUNCTIONALITY = "Functionality and Features"
SCENARIOS = "Scenarios"
ATTITUDE = "Attitude"
NO_LABEL = "No Label"

POSITIVE = "Positive"
NEGATIVE = "Negative"

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric, drop tokens shorter than 2."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def load_terms(path_or_lines) -> tuple[str, ...]:
    """Lexicon/stopword file: one term per line, ``#`` comments ignored,
    ``*`` suffix marks a stem prefix match."""
    if isinstance(path_or_lines, (str, Path)):
        lines = Path(path_or_lines).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(path_or_lines)
    terms = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            terms.append(line.lower())
    return tuple(terms)


def _data_text(name: str) -> str:
    return (resources.files("pulse.data") / name).read_text(encoding="utf-8")


def _data_terms(name: str) -> tuple[str, ...]:
    return load_terms(_data_text(name).splitlines())


class Lexicon:
    """Compiled term list; ``matches`` returns the tokens a sentence hits."""

    def __init__(self, terms: tuple[str, ...]):
        self.terms = terms
        self._exact = {t for t in terms if not t.endswith("*")}
        self._prefixes = tuple(t[:-1] for t in terms if t.endswith("*"))

    def hits(self, tokens: list[str]) -> list[str]:
        out = []
        for tok in tokens:
            if tok in self._exact or any(
                tok.startswith(p) for p in self._prefixes
            ):
                out.append(tok)
        return out


@dataclass(frozen=True)
class LabelDef:
    name: str
    description: str = ""
    lexicon: tuple[str, ...] = ()


@dataclass(frozen=True)
class Taxonomy:
    version: int
    labels: tuple[LabelDef, ...]

    def names(self) -> list[str]:
        return [l.name for l in self.labels]

    def fallback(self) -> str:
        return NO_LABEL if NO_LABEL in self.names() else self.labels[-1].name


def default_taxonomy() -> Taxonomy:
    """The six built-in tags, version 1."""
    return Taxonomy(
        version=1,
        labels=(
            LabelDef(NEEDS, "User needs and expectations", _data_terms("lexicon_needs.txt")),
            LabelDef(PAIN_POINTS, "Problems and frustrations", _data_terms("lexicon_pain.txt")),
            LabelDef(FUNCTIONALITY, "Product functionality and features", _data_terms("lexicon_functionality.txt")),
            LabelDef(SCENARIOS, "When / how / who / where / frequency", _data_terms("lexicon_scenarios.txt")),
            LabelDef(
                ATTITUDE,
                "Positive or negative attitude",
                _data_terms("lexicon_positive.txt") + _data_terms("lexicon_negative.txt"),
            ),
            LabelDef(NO_LABEL, "Fallback when nothing else applies"),
        ),
    )


def set_taxonomy(current: Taxonomy, labels: list[LabelDef]) -> Taxonomy:
    """Replace the label set; version increments. Names must be unique and
    non-empty."""
    names = [l.name for l in labels]
    if any(not n.strip() for n in names):
        raise ValidationError("label names must be non-empty")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValidationError(f"duplicate label names: {dupes}", duplicates=dupes)
    return Taxonomy(version=current.version + 1, labels=tuple(labels))


@dataclass(frozen=True)
class TaggedSentence:
    sentence_id: str
    labels: tuple[str, ...]  # taxonomy order; never empty
    polarity: str | None = None  # present iff Attitude in labels
    rationale: str = ""


@dataclass(frozen=True)
class KeywordStat:
    token: str
    count: int


@dataclass(frozen=True)
class SentimentScore:
    value: float
    basis: str  # "lexicon" | "provider"


@dataclass(frozen=True)
class AnalysisSnapshot:
    session_id: str
    version: int
    coverage_seq: int
    summary: str
    key_points: tuple[str, ...]
    follow_up_questions: tuple[str, ...]
    generated_at: int
    provider_name: str
    taxonomy_version: int
    template_version: str


@dataclass(frozen=True)
class ThemeGroup:
    label: str
    sentence_ids: tuple[str, ...]
    theme_summary: str


@dataclass(frozen=True)
class ThematicReport:
    session_id: str
    taxonomy_version: int
    groups: tuple[ThemeGroup, ...]
    keyword_stats: tuple[KeywordStat, ...]
    overall_sentiment: SentimentScore


def keyword_frequency(
    texts: list[str], stopwords: frozenset[str]
) -> list[KeywordStat]:
    """Exact token counts under the documented tokenizer, ranked by
    (count desc, token asc)."""
    counts: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            if tok not in stopwords:
                counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [KeywordStat(token=t, count=c) for t, c in ranked]


def lexicon_sentiment(
    text: str, positive: Lexicon, negative: Lexicon
) -> SentimentScore:
    """(pos - neg) / max(1, pos + neg) over lexicon hits; always in [-1, 1]."""
    tokens = tokenize(text)
    pos = len(positive.hits(tokens))
    neg = len(negative.hits(tokens))
    return SentimentScore(value=(pos - neg) / max(1, pos + neg), basis="lexicon")


@dataclass
class AnalysisConfig:
    word_budget: int = 60
    key_points_k: int = 3
    max_questions: int = 3
    stopwords: frozenset[str] = field(
        default_factory=lambda: frozenset(_data_terms("stopwords.txt"))
    )
    positive_terms: tuple[str, ...] = field(
        default_factory=lambda: _data_terms("lexicon_positive.txt")
    )
    negative_terms: tuple[str, ...] = field(
        default_factory=lambda: _data_terms("lexicon_negative.txt")
    )
    question_templates: dict[str, str] = field(default_factory=dict)
    fallback_question: str = ""
    prompt_templates: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.question_templates:
            self.question_templates = _load_question_templates(
                _data_text("question_templates.txt")
            )
        if not self.fallback_question:
            self.fallback_question = _data_text("fallback_question.txt").strip()
        if not self.prompt_templates:
            self.prompt_templates = {
                name: _data_text(f"templates/{name}.txt")
                for name in ("summary", "followups", "tagging", "theme")
            }


def _load_question_templates(text: str) -> dict[str, str]:
    templates = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, template = line.partition("|")
        templates[name.strip()] = template.strip()
    return templates


def template_version(config: AnalysisConfig) -> str:
    """Stable fingerprint of the prompt/question templates in force,
    recorded in snapshots for provenance."""
    import hashlib

    h = hashlib.sha256()
    for name in sorted(config.prompt_templates):
        h.update(name.encode())
        h.update(config.prompt_templates[name].encode())
    for name in sorted(config.question_templates):
        h.update(name.encode())
        h.update(config.question_templates[name].encode())
    h.update(config.fallback_question.encode())
    return h.hexdigest()[:12]


class AnalysisProvider:
    """Provider boundary for summary / follow-ups / tagging / theme text."""

    name = "abstract"
    kind = "rule_based"


class RuleBasedProvider(AnalysisProvider):
    """Deterministic extractive fallback; see each method for its rule."""

    name = "rule_based"
    kind = "rule_based"

    def __init__(self, config: AnalysisConfig | None = None):
        self.config = config or AnalysisConfig()
        self._positive = Lexicon(self.config.positive_terms)
        self._negative = Lexicon(self.config.negative_terms)
        self._tag_cache: dict[tuple[int, str], TaggedSentence] = {}

    # -- summarize ---------------------------------------------------------

    def summarize(
        self, segments: list[TranscriptSegment]
    ) -> tuple[str, list[str]]:
        """Extractive: first sentence of each participant turn, concatenated
        and truncated to the word budget. Key points are the top-k sentences
        by summed keyword counts, ties to earlier position."""
        if not segments:
            raise EmptyInputError("cannot summarize an empty transcript")
        source = [s for s in segments if s.speaker is Speaker.PARTICIPANT]
        if not source:
            source = segments  # interviewer-only transcript still summarizes
        leads = [split_sentences_text(seg.text)[0] for seg in source]
        summary = _truncate_words(" ".join(leads), self.config.word_budget)

        stats = keyword_frequency([s.text for s in segments], self.config.stopwords)
        counts = {s.token: s.count for s in stats}
        scored = []
        for seg in source:
            for idx, sent in enumerate(split_sentences_text(seg.text)):
                score = sum(
                    counts.get(t, 0)
                    for t in tokenize(sent)
                    if t not in self.config.stopwords
                )
                scored.append((-score, seg.seq, idx, sent))
        scored.sort()
        key_points = [s[3] for s in scored[: self.config.key_points_k]]
        return summary, key_points

    # -- tagging -----------------------------------------------------------

    def tag_sentence(self, sentence: Sentence, taxonomy: Taxonomy) -> TaggedSentence:
        key = (taxonomy.version, sentence.sentence_id + "\x00" + sentence.text)
        cached = self._tag_cache.get(key)
        if cached is not None:
            return cached
        tokens = tokenize(sentence.text)
        labels: list[str] = []
        matched_terms: list[str] = []
        for label in taxonomy.labels:
            if not label.lexicon:
                continue
            hits = Lexicon(label.lexicon).hits(tokens)
            if hits:
                labels.append(label.name)
                matched_terms.extend(f"{label.name}:{h}" for h in hits[:1])
        polarity = None
        if ATTITUDE in labels:
            pos = len(self._positive.hits(tokens))
            neg = len(self._negative.hits(tokens))
            polarity = NEGATIVE if neg > pos else POSITIVE  # tie -> Positive
        if not labels:
            labels = [taxonomy.fallback()]
        tagged = TaggedSentence(
            sentence_id=sentence.sentence_id,
            labels=tuple(labels),
            polarity=polarity,
            rationale="; ".join(matched_terms),
        )
        self._tag_cache[key] = tagged
        return tagged

    def tag_sentences(
        self, sentences: list[Sentence], taxonomy: Taxonomy
    ) -> list[TaggedSentence]:
        if not sentences:
            raise EmptyInputError("no sentences to tag")
        return [self.tag_sentence(s, taxonomy) for s in sentences]

    # -- follow-up questions ----------------------------------------------

    def suggest_followups(
        self,
        segments: list[TranscriptSegment],
        taxonomy: Taxonomy,
        max_questions: int | None = None,
    ) -> list[str]:
        """Instantiate the per-label question template for the most recent
        participant sentence carrying each non-fallback label, ordered most
        recent first; same-sentence ties follow taxonomy label order."""
        limit = max_questions if max_questions is not None else self.config.max_questions
        if limit < 1:
            raise ValidationError("max_questions must be >= 1")
        participant = [s for s in segments if s.speaker is Speaker.PARTICIPANT]
        if not participant:
            raise EmptyInputError("no participant speech to ground questions in")

        stats = keyword_frequency([s.text for s in segments], self.config.stopwords)
        counts = {s.token: s.count for s in stats}
        fallback = taxonomy.fallback()

        # Most recent sentence per label, scanning in transcript order.
        latest: dict[str, tuple[int, int, str]] = {}
        pos = 0
        for seg in participant:
            for sent_text in split_sentences_text(seg.text):
                sent = Sentence(
                    sentence_id=f"{seg.segment_id}-q{pos}",
                    segment_id=seg.segment_id,
                    index=pos,
                    text=sent_text,
                )
                tagged = self.tag_sentence(sent, taxonomy)
                for li, label in enumerate(tagged.labels):
                    if label != fallback:
                        latest[label] = (pos, li, sent_text)
                pos += 1

        order = {l.name: i for i, l in enumerate(taxonomy.labels)}
        anchors = sorted(
            latest.items(),
            key=lambda kv: (-kv[1][0], order.get(kv[0], len(order))),
        )
        questions = []
        for label, (_, _, sent_text) in anchors:
            template = self.config.question_templates.get(label)
            if template is None:
                template = self.config.fallback_question
                questions.append(template)
                continue
            questions.append(
                template.format(
                    keyword=_top_keyword(sent_text, counts, self.config.stopwords),
                    quote=sent_text,
                )
            )
        if not questions:
            questions = [self.config.fallback_question]
        return questions[:limit]

    # -- sentiment / themes ------------------------------------------------

    def sentiment(self, text: str) -> SentimentScore:
        return lexicon_sentiment(text, self._positive, self._negative)

    def theme_summary(self, sentences: list[str]) -> str:
        if not sentences:
            return ""
        return _truncate_words(" ".join(sentences), self.config.word_budget)


def _truncate_words(text: str, budget: int) -> str:
    words = text.split()
    return " ".join(words[:budget])


def _top_keyword(
    sentence: str, counts: dict[str, int], stopwords: frozenset[str]
) -> str:
    """Highest global-frequency content word of the sentence; ties go to the
    earliest occurrence."""
    best = ""
    best_count = -1
    for tok in tokenize(sentence):
        if tok in stopwords:
            continue
        c = counts.get(tok, 0)
        if c > best_count:
            best, best_count = tok, c
    return best or "that"


class RemoteProvider(AnalysisProvider):
    """Adapter for a remote analysis service. The transport is injected
    (prompt, payload) -> structured dict; responses missing the exact fields
    of the target type are rejected as provider errors, never parsed
    heuristically. Sentiment failures fall back to the lexicon."""

    kind = "remote"

    def __init__(
        self,
        transport: Callable[[str, dict], dict],
        config: AnalysisConfig | None = None,
        name: str = "remote",
    ):
        self.name = name
        self.config = config or AnalysisConfig()
        self._transport = transport
        self._fallback = RuleBasedProvider(self.config)

    def _call(self, template_name: str, required: dict[str, type], **params) -> dict:
        prompt = self.config.prompt_templates[template_name].format(**params)
        try:
            response = self._transport(prompt, params)
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"provider transport failed: {exc}") from exc
        if not isinstance(response, dict):
            raise ProviderError(
                "provider returned unstructured output", retryable=False
            )
        for fname, ftype in required.items():
            if fname not in response or not isinstance(response[fname], ftype):
                raise ProviderError(
                    f"provider response missing or mistyped field '{fname}'",
                    retryable=False,
                )
        extra = set(response) - set(required)
        if extra:
            raise ProviderError(
                f"provider response carries unknown fields {sorted(extra)}",
                retryable=False,
            )
        return response

    def summarize(self, segments):
        if not segments:
            raise EmptyInputError("cannot summarize an empty transcript")
        response = self._call(
            "summary",
            {"summary": str, "key_points": list},
            transcript=_render_transcript(segments),
            word_budget=self.config.word_budget,
        )
        return response["summary"], [str(p) for p in response["key_points"]]

    def suggest_followups(self, segments, taxonomy, max_questions=None):
        limit = max_questions if max_questions is not None else self.config.max_questions
        if not any(s.speaker is Speaker.PARTICIPANT for s in segments):
            raise EmptyInputError("no participant speech to ground questions in")
        response = self._call(
            "followups",
            {"questions": list},
            transcript=_render_transcript(segments),
            taxonomy=", ".join(taxonomy.names()),
            max_questions=limit,
        )
        questions = [str(q) for q in response["questions"]]
        if not questions:
            raise ProviderError("provider returned no questions", retryable=False)
        return questions[:limit]

    def tag_sentences(self, sentences, taxonomy):
        if not sentences:
            raise EmptyInputError("no sentences to tag")
        response = self._call(
            "tagging",
            {"tags": list},
            transcript="\n".join(s.text for s in sentences),
            taxonomy=", ".join(taxonomy.names()),
        )
        valid = set(taxonomy.names())
        tags = response["tags"]
        if len(tags) != len(sentences):
            raise ProviderError("provider tagged a different sentence count", retryable=False)
        out = []
        for sent, entry in zip(sentences, tags):
            if not isinstance(entry, dict) or "labels" not in entry:
                raise ProviderError("malformed tag entry", retryable=False)
            labels = tuple(entry["labels"])
            if not labels or any(l not in valid for l in labels):
                raise ProviderError("provider used labels outside the taxonomy", retryable=False)
            out.append(
                TaggedSentence(
                    sentence_id=sent.sentence_id,
                    labels=labels,
                    polarity=entry.get("polarity"),
                    rationale=str(entry.get("rationale", "")),
                )
            )
        return out

    def sentiment(self, text: str) -> SentimentScore:
        try:
            response = self._call("summary", {"summary": str, "key_points": list},
                                  transcript=text, word_budget=1)
        except ProviderError:
            return self._fallback.sentiment(text)
        # Remote sentiment not modeled by this transport; fall back.
        del response
        return self._fallback.sentiment(text)

    def theme_summary(self, sentences: list[str]) -> str:
        return self._fallback.theme_summary(sentences)


def _render_transcript(segments: list[TranscriptSegment]) -> str:
    return "\n".join(f"{s.speaker.value}: {s.text}" for s in segments)


def clamp_sentiment(value: float) -> float:
    return max(-1.0, min(1.0, value))


def thematic_report(
    session_id: str,
    taxonomy: Taxonomy,
    sentences: list[Sentence],
    tagged: list[TaggedSentence],
    segments: list[TranscriptSegment],
    provider: RuleBasedProvider | RemoteProvider,
    config: AnalysisConfig,
) -> ThematicReport:
    """Group tagged sentences by label (taxonomy order, empty groups kept),
    with a per-group theme summary, keyword stats and overall sentiment."""
    by_id = {s.sentence_id: s for s in sentences}
    groups = []
    for label in taxonomy.labels:
        ids = tuple(t.sentence_id for t in tagged if label.name in t.labels)
        texts = [by_id[i].text for i in ids if i in by_id]
        groups.append(
            ThemeGroup(
                label=label.name,
                sentence_ids=ids,
                theme_summary=provider.theme_summary(texts),
            )
        )
    texts = [s.text for s in segments]
    stats = keyword_frequency(texts, config.stopwords)
    overall = (
        provider.sentiment(" ".join(texts))
        if texts
        else SentimentScore(value=0.0, basis="lexicon")
    )
    return ThematicReport(
        session_id=session_id,
        taxonomy_version=taxonomy.version,
        groups=tuple(groups),
        keyword_stats=tuple(stats),
        overall_sentiment=overall,
    )
