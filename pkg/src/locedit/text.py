"""Tokenizer, token-class labeling, and deterministic text embeddings.

Instructions are lowercased and split on whitespace/punctuation into at
most CONTEXT_LEN - 2 words, laid out as [SoT, w1..wk, EoT, Pad...]. Each
position carries a class tag; the "unrelated" set S holds SoT, padding
and stop-word positions, the "related" set holds content words plus EoT
(EoT summarizes the whole instruction, so it stays on the related side).

Embedding rows are not learned: a token's id seeds the shared PRNG and
the row is filled with standard-normal values, which gives every distinct
token a distinct, reproducible direction. Word ids are FNV-1a 64-bit
hashes of the surface string; ids 0/1/2 are reserved for SoT/EoT/Pad.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .rng import Prng

CONTEXT_LEN = 77
EMBED_DIM = 64

SOT_ID = 0
EOT_ID = 1
PAD_ID = 2

_WORD_RE = re.compile(r"[a-z0-9']+")
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class TokenClass(Enum):
    SOT = "sot"
    EOT = "eot"
    PAD = "pad"
    STOP = "stop"
    RELATED = "related"


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    classes: tuple[TokenClass, ...]
    surface: tuple[str, ...]  # non-special words, in order
    truncated: bool = False

    def __post_init__(self):
        assert len(self.ids) == len(self.classes) == CONTEXT_LEN

    @property
    def unrelated_indices(self) -> tuple[int, ...]:
        """Positions of SoT, padding and stop words (the set S)."""
        keep = (TokenClass.SOT, TokenClass.PAD, TokenClass.STOP)
        return tuple(i for i, c in enumerate(self.classes) if c in keep)

    @property
    def related_indices(self) -> tuple[int, ...]:
        """Positions of content words plus EoT (the complement of S)."""
        keep = (TokenClass.RELATED, TokenClass.EOT)
        return tuple(i for i, c in enumerate(self.classes) if c in keep)

    @property
    def related_word_count(self) -> int:
        return sum(1 for c in self.classes if c is TokenClass.RELATED)


def fnv1a64(s: str) -> int:
    h = _FNV_OFFSET
    for b in s.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def word_id(word: str) -> int:
    h = fnv1a64(word)
    return h if h > PAD_ID else h + 3  # keep reserved ids free


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("locedit.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


_DEFAULT_STOPWORDS = load_stopwords()


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> TokenSequence:
    """Split an instruction into a fixed-length classified token sequence."""
    if not text or not text.strip():
        raise ValueError("empty instruction")
    words = _WORD_RE.findall(text.lower())
    if not words:
        raise ValueError("empty instruction")
    truncated = len(words) > CONTEXT_LEN - 2
    words = words[: CONTEXT_LEN - 2]

    ids = [SOT_ID] + [word_id(w) for w in words] + [EOT_ID]
    ids += [PAD_ID] * (CONTEXT_LEN - len(ids))
    classes = (
        [TokenClass.SOT]
        + [TokenClass.RELATED] * len(words)
        + [TokenClass.EOT]
        + [TokenClass.PAD] * (CONTEXT_LEN - len(words) - 2)
    )
    seq = TokenSequence(tuple(ids), tuple(classes), tuple(words), truncated)
    return classify_tokens(seq, stopwords)


def classify_tokens(seq: TokenSequence, stopwords: frozenset[str] | None = None) -> TokenSequence:
    """Mark word positions as stop/related by list membership. Idempotent."""
    stop = _DEFAULT_STOPWORDS if stopwords is None else stopwords
    classes = list(seq.classes)
    for offset, word in enumerate(seq.surface):
        pos = 1 + offset  # words start right after SoT
        classes[pos] = TokenClass.STOP if word in stop else TokenClass.RELATED
    return TokenSequence(seq.ids, tuple(classes), seq.surface, seq.truncated)


def embed(seq: TokenSequence) -> np.ndarray:
    """CONTEXT_LEN x EMBED_DIM float32 embedding matrix, one row per token."""
    rows = [_embed_row(i) for i in seq.ids]
    return np.stack(rows, axis=0)


@lru_cache(maxsize=4096)
def _embed_row(token_id: int) -> np.ndarray:
    row = Prng(token_id).fill_gaussian((EMBED_DIM,))
    row.flags.writeable = False
    return row
