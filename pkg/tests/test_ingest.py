import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulse.errors import ConfigurationError, SequenceError, StateError, ValidationError
from pulse.ingest import (
    AudioChunk,
    ChunkQueue,
    InlineTextProvider,
    ScriptedProvider,
    Speaker,
    TranscriptSegment,
    split_sentences,
    split_sentences_text,
    transcribe,
)
from pulse.session import Session


def recording_session():
    s = Session(session_id="s", created_at=0)
    s.transition("auth", at=0)
    s.transition("start", at=0)
    return s


def chunk(seq, text="hello", **kw):
    return AudioChunk(session_id="s", seq=seq, text=text, **kw)


class TestChunkQueue:
    def test_in_order_ack(self):
        q = ChunkQueue()
        s = recording_session()
        for i in range(5):
            assert q.ingest(s, chunk(i)) == i
        assert q.ingest(s, chunk(5)) == 5

    def test_gap_rejected_with_expected_seq(self):
        q = ChunkQueue()
        s = recording_session()
        for i in range(5):
            q.ingest(s, chunk(i))
        with pytest.raises(SequenceError) as exc:
            q.ingest(s, chunk(7))
        assert exc.value.details["expected"] == 5

    def test_non_recording_session_rejected(self):
        q = ChunkQueue()
        s = recording_session()
        s.transition("stop", at=1)
        with pytest.raises(StateError):
            q.ingest(s, chunk(0))

    def test_acked_seqs_form_gapless_prefix(self):
        q = ChunkQueue()
        s = recording_session()
        acked = []
        for i in range(10):
            acked.append(q.ingest(s, chunk(i)))
        assert acked == list(range(10))

    def test_invalid_chunk_fields(self):
        with pytest.raises(ValidationError):
            AudioChunk(session_id="s", seq=-1)
        with pytest.raises(ValidationError):
            AudioChunk(session_id="s", seq=0, t_start=10, t_end=5)


class TestScriptedProvider:
    def test_seq_maps_to_script_line(self):
        provider = ScriptedProvider(["Hello", "It breaks daily"])
        assert provider.transcribe_chunk(chunk(1)) == "It breaks daily"

    def test_empty_line_is_silence(self):
        provider = ScriptedProvider(["Hello", "", "Bye"])
        segs = transcribe([chunk(0), chunk(1), chunk(2)], provider)
        assert [s.seq for s in segs] == [0, 2]

    def test_exhausted_script_is_configuration_error(self):
        provider = ScriptedProvider(["one", "two"])
        with pytest.raises(ConfigurationError):
            transcribe([chunk(0), chunk(1), chunk(2)], provider)

    def test_bit_reproducible(self):
        provider = ScriptedProvider(["a", "b", "c"])
        chunks = [chunk(i) for i in range(3)]
        assert transcribe(chunks, provider) == transcribe(chunks, provider)

    def test_segment_mirrors_chunk_metadata(self):
        provider = ScriptedProvider(["hi"])
        seg = transcribe(
            [chunk(0, speaker=Speaker.PARTICIPANT, t_start=5, t_end=9)], provider
        )[0]
        assert seg.speaker is Speaker.PARTICIPANT
        assert (seg.t_start, seg.t_end) == (5, 9)

    def test_inline_provider_passes_text_through(self):
        provider = InlineTextProvider()
        assert provider.transcribe_chunk(chunk(0, text="hi there")) == "hi there"
        assert provider.transcribe_chunk(chunk(0, text="   ")) is None
        assert provider.transcribe_chunk(chunk(0, text=None)) is None


def segment(text):
    return TranscriptSegment(
        segment_id="seg-0",
        session_id="s",
        seq=0,
        speaker=Speaker.PARTICIPANT,
        text=text,
        t_start=0,
        t_end=0,
    )


class TestSplitSentences:
    def test_terminal_punctuation_splits(self):
        assert split_sentences_text("I like it. But it is slow.") == [
            "I like it.",
            "But it is slow.",
        ]

    def test_no_terminal_punctuation_is_one_sentence(self):
        assert split_sentences_text("why though") == ["why though"]

    def test_abbreviation_suppresses_split(self):
        assert split_sentences_text("We met Dr. Lee. It helped.") == [
            "We met Dr. Lee.",
            "It helped.",
        ]

    def test_lowercase_continuation_does_not_split(self):
        assert split_sentences_text("it broke. then it worked") == [
            "it broke. then it worked"
        ]

    def test_question_and_exclamation(self):
        assert split_sentences_text("Really? Wow! Ok.") == ["Really?", "Wow!", "Ok."]

    def test_sentence_ids_are_positional(self):
        sents = split_sentences(segment("One. Two."))
        assert [s.index for s in sents] == [0, 1]
        assert all(s.segment_id == "seg-0" for s in sents)
        assert sents[0].sentence_id != sents[1].sentence_id

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            split_sentences_text("   ")

    @given(
        st.lists(
            st.text(
                alphabet="abcdefgABC .!?",
                min_size=1,
                max_size=40,
            ).filter(lambda t: t.strip()),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=300)
    def test_reconstruction_and_idempotence(self, pieces):
        text = " ".join(pieces)
        if not text.strip():
            return
        sentences = split_sentences_text(text)
        # Joining the sentences reproduces the whitespace-normalized text.
        assert " ".join(sentences) == " ".join(text.split())
        # Re-splitting any output sentence yields itself.
        for s in sentences:
            assert split_sentences_text(s) == [s]
