"""Split completion text into token sequences that reconstruct the original exactly.

Three granularities: ``space`` (whitespace-separated words), ``sentence``
(split after ./!/? followed by whitespace), ``phrase`` (split after commas).
Delimiters attach to the preceding token; the whitespace between tokens is
stored as that token's trailing separator, so joining ``surface +
trailing_separator`` over a sequence gives back the input byte-for-byte.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class SegmentationMode(str, enum.Enum):
    SPACE = "space"
    SENTENCE = "sentence"
    PHRASE = "phrase"


@dataclass(frozen=True)
class RawGeneration:
    """One sampled completion. ``text`` is immutable and kept verbatim."""

    id: str
    prompt_id: str
    text: str
    model_id: str = ""
    temperature: float = 0.0
    sample_index: int = 0


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    trailing_separator: str


@dataclass(frozen=True)
class TokenSequence:
    generation_id: str
    tokens: tuple[Token, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


# A sentence boundary is ./!/? directly followed by whitespace; a phrase
# boundary is a comma (trailing whitespace, if any, becomes the separator).
_SENTENCE_BREAK = re.compile(r"(?<=[.!?])(\s+)")
_PHRASE_BREAK = re.compile(r"(?<=,)(\s*)")
_SPACE_BREAK = re.compile(r"(\s+)")


def _split_with_separators(text: str, pattern: re.Pattern[str]) -> list[tuple[str, str]]:
    """Split ``text`` into (chunk, following_separator) pairs on ``pattern``."""
    pieces = pattern.split(text)
    # re.split with one capture group alternates chunk, sep, chunk, ...
    pairs = []
    for i in range(0, len(pieces), 2):
        chunk = pieces[i]
        sep = pieces[i + 1] if i + 1 < len(pieces) else ""
        pairs.append((chunk, sep))
    return pairs


def segment(text: str, mode: SegmentationMode | str = SegmentationMode.SPACE,
            generation_id: str = "") -> TokenSequence:
    """Tokenize ``text`` at the requested granularity.

    Total function: empty text yields an empty sequence. Leading whitespace
    is folded into the first token's surface (there is no leading-separator
    slot), and whitespace-only text becomes a single whitespace token, so
    exact reconstruction always holds.
    """
    mode = SegmentationMode(mode)
    if text == "":
        return TokenSequence(generation_id=generation_id)
    if text.strip() == "":
        return TokenSequence(generation_id, (Token(0, text, ""),))

    pattern = {
        SegmentationMode.SPACE: _SPACE_BREAK,
        SegmentationMode.SENTENCE: _SENTENCE_BREAK,
        SegmentationMode.PHRASE: _PHRASE_BREAK,
    }[mode]
    pairs = _split_with_separators(text, pattern)

    # Empty chunks arise from leading whitespace (space mode) or a trailing
    # separator match; merge them into a neighbor instead of emitting them.
    merged: list[tuple[str, str]] = []
    for chunk, sep in pairs:
        if chunk == "" and merged:
            prev_chunk, prev_sep = merged[-1]
            merged[-1] = (prev_chunk, prev_sep + sep)
        elif chunk == "" and sep:
            merged.append((sep, ""))  # leading whitespace folds into first surface
        elif chunk == "" and not sep:
            continue
        else:
            merged.append((chunk, sep))
    if merged and merged[0][0].strip() == "" and len(merged) > 1:
        # whitespace-only first piece: prepend to the real first token
        lead, lead_sep = merged.pop(0)
        nxt_chunk, nxt_sep = merged[0]
        merged[0] = (lead + lead_sep + nxt_chunk, nxt_sep)

    tokens = tuple(Token(i, chunk, sep) for i, (chunk, sep) in enumerate(merged))
    return TokenSequence(generation_id, tokens)


def reconstruct(seq: TokenSequence) -> str:
    """Inverse of :func:`segment`: original text, byte-for-byte."""
    return "".join(t.surface + t.trailing_separator for t in seq.tokens)


def segment_generation(gen: RawGeneration, mode: SegmentationMode | str) -> TokenSequence:
    return segment(gen.text, mode, generation_id=gen.id)
