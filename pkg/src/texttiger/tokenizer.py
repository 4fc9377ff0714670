"""CLIP-compatible byte-level BPE tokenizer for counting and budgeting prompt tokens.

Token counts drive every length decision in the pipeline: the 77-token CLIP
window, the 256-token T5 window, and the 180-token summary budget carved out
of it. Counting is exact (same ids as the published CLIP tokenizer) and never
truncates; budget enforcement is the caller's job.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import ParseError

SOT_TOKEN = "<|startoftext|>"
EOT_TOKEN = "<|endoftext|>"

_SPECIALS = (SOT_TOKEN, EOT_TOKEN)
_CONTRACTIONS = ("'s", "'t", "'re", "'ve", "'m", "'ll", "'d")
_WS_RUN = re.compile(r"\s+")


@lru_cache(maxsize=1)
def bytes_to_unicode():
    """Bijection raw byte -> printable unicode proxy, as used by byte-level BPE.

    Printable latin-1 bytes map to themselves; the rest are shifted into
    256+ codepoints so every byte has a visible, dedicated character.
    """
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(2**8):
        if b not in bs:
            bs.append(b)
            cs.append(2**8 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


class Vocabulary:
    """Immutable BPE vocabulary: token encoder, ranked merges, byte proxy map.

    Safe to share across threads after construction; the internal BPE cache
    is append-only.
    """

    def __init__(self, encoder: dict[str, int], merges: list[tuple[str, str]]):
        self.encoder = dict(encoder)
        self.merges = list(merges)
        self.byte_map = bytes_to_unicode()
        self._ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        # Specials never decompose; pre-seeding keeps them out of the merge loop.
        self._cache: dict[str, tuple[str, ...]] = {s: (s,) for s in _SPECIALS}

    def __len__(self):
        return len(self.encoder)

    def bpe(self, token: str) -> tuple[str, ...]:
        """Split one pre-token (byte-proxy string) into vocabulary symbols."""
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        word = tuple(token[:-1]) + (token[-1] + "</w>",)
        if len(word) == 1:
            self._cache[token] = word
            return word
        ranks = self._ranks
        while len(word) > 1:
            pairs = set(zip(word, word[1:]))
            best = min(pairs, key=lambda p: ranks.get(p, float("inf")))
            if best not in ranks:
                break
            first, second = best
            merged = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and word[i] == first and word[i + 1] == second:
                    merged.append(first + second)
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = tuple(merged)
        self._cache[token] = word
        return word


def _read_text(source) -> str:
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    with open(source, encoding="utf-8") as f:
        return f.read()


def load_vocabulary(vocab_source, merges_source) -> Vocabulary:
    """Load a vocabulary from the standard CLIP file pair.

    ``vocab_source`` is a token->id JSON map; ``merges_source`` is one merge
    pair per line, ranked by position, with an optional ``#version`` header.
    Both accept a path or an open text/binary file.

    Raises ParseError for duplicate tokens, duplicate ids, malformed merge
    lines, or merges whose symbols are not buildable from base bytes and
    earlier merges.
    """
    def reject_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise ParseError(f"duplicate token string {key!r} in vocabulary")
            seen[key] = value
        return seen

    try:
        encoder = json.loads(_read_text(vocab_source), object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"vocabulary is not valid JSON: {exc}") from exc
    if len(set(encoder.values())) != len(encoder):
        raise ParseError("duplicate ids in vocabulary")

    base = set(bytes_to_unicode().values())
    representable = base | {c + "</w>" for c in base} | set(_SPECIALS)

    merges: list[tuple[str, str]] = []
    for lineno, line in enumerate(_read_text(merges_source).split("\n"), start=1):
        if lineno == 1 and line.startswith("#version"):
            continue
        if not line.strip():
            continue
        symbols = line.split(" ")
        if len(symbols) != 2 or not all(symbols):
            raise ParseError(f"merge line needs exactly two symbols: {line!r}", line=lineno)
        first, second = symbols
        if first not in representable or second not in representable:
            raise ParseError(f"merge uses unknown symbol: {line!r}", line=lineno)
        merged = first + second
        if merged not in encoder:
            raise ParseError(f"merged token {merged!r} missing from vocabulary", line=lineno)
        representable.add(merged)
        merges.append((first, second))

    return Vocabulary(encoder, merges)


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    """The vendored CLIP vocabulary (49,408 tokens, 48,894 merges)."""
    data = resources.files(__package__) / "data"
    with (data / "vocab.json").open("r", encoding="utf-8") as vf:
        with (data / "merges.txt").open("r", encoding="utf-8") as mf:
            return load_vocabulary(vf, mf)


def _normalize(text: str) -> str:
    text = unicodedata.normalize("NFC", text)
    return _WS_RUN.sub(" ", text).strip().lower()


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch).startswith("L")


def _is_number(ch: str) -> bool:
    return unicodedata.category(ch).startswith("N")


def _pretokenize(text: str):
    """Split normalized text into word-level pieces.

    Mirrors the published CLIP pattern: special literals, contraction
    suffixes, letter runs, single number characters, then greedy runs of
    everything else. Whitespace separates and is dropped.
    """
    pieces = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "<":
            matched = next((s for s in _SPECIALS if text.startswith(s, i)), None)
            if matched:
                pieces.append(matched)
                i += len(matched)
                continue
        if ch == "'":
            matched = next((s for s in _CONTRACTIONS if text.startswith(s, i)), None)
            if matched:
                pieces.append(matched)
                i += len(matched)
                continue
        if _is_letter(ch):
            j = i + 1
            while j < n and _is_letter(text[j]):
                j += 1
            pieces.append(text[i:j])
            i = j
            continue
        if _is_number(ch):
            pieces.append(ch)
            i += 1
            continue
        j = i + 1
        while j < n:
            c = text[j]
            if c.isspace() or _is_letter(c) or _is_number(c):
                break
            j += 1
        pieces.append(text[i:j])
        i = j
    return pieces


def encode(text: str, vocab: Vocabulary | None = None) -> list[int]:
    """Encode text to CLIP token ids. Begin/end specials are not added.

    Deterministic; any unicode text is encodable via the byte fallback.
    """
    if vocab is None:
        vocab = default_vocabulary()
    ids: list[int] = []
    byte_map = vocab.byte_map
    encoder = vocab.encoder
    for piece in _pretokenize(_normalize(text)):
        if piece in _SPECIALS:
            ids.append(encoder[piece])
            continue
        proxied = "".join(byte_map[b] for b in piece.encode("utf-8"))
        ids.extend(encoder[symbol] for symbol in vocab.bpe(proxied))
    return ids


def count_tokens(text: str, vocab: Vocabulary | None = None) -> int:
    """Content-token count of ``text``: exactly ``len(encode(text))``.

    Begin/end specials are excluded so budget arithmetic like
    256 - caption_tokens = 180 comes out right. Never truncates: counts
    beyond 77 or 256 are reported as-is so limit violations stay auditable.
    """
    return len(encode(text, vocab))


@dataclass(frozen=True)
class TokenBudget:
    """Token limits governing prompt length decisions."""

    clip_limit: int = 77
    t5_limit: int = 256
    summary_budget: int = 180

    def __post_init__(self):
        if min(self.clip_limit, self.t5_limit, self.summary_budget) <= 0:
            raise ValueError("all limits must be positive")
        if self.summary_budget >= self.t5_limit:
            raise ValueError("summary_budget must be below t5_limit")


@dataclass(frozen=True)
class BudgetStatus:
    """Outcome of a budget check: within the limit, or over by ``excess``."""

    within: bool
    excess: int = 0

    def __bool__(self):
        return self.within


def check_budget(count: int, limit: int) -> BudgetStatus:
    """Compare a token count against a limit (inclusive)."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    if count <= limit:
        return BudgetStatus(within=True)
    return BudgetStatus(within=False, excess=count - limit)
