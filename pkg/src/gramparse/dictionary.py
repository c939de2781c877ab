"""Occurrence-count dictionaries over 2-grams and 3-grams of log tokens.

Message boundaries do not interrupt the gram windows: the token streams of
consecutive messages are treated as one concatenated sequence, so windows
spanning the end of one message and the start of the next are counted too.
Every window of the concatenated stream is counted exactly once.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .preprocess import LogRecord

# An n-gram is a tuple of 2 or 3 tokens.
NGram = tuple[str, ...]

_SEP = "\x1f"  # unit separator between tokens in the persisted format


class DictionaryFormatError(ValueError):
    """Raised when a persisted dictionary file cannot be parsed."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass
class NGramDictionary:
    counts2: Counter = field(default_factory=Counter)
    counts3: Counter = field(default_factory=Counter)
    total_messages: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, NGramDictionary):
            return NotImplemented
        return (
            self.total_messages == other.total_messages
            and self.counts2 == other.counts2
            and self.counts3 == other.counts3
        )


class DictionaryBuilder:
    """Single-pass counter over a message stream.

    Keeps the last two tokens seen (the carry) so that windows crossing
    message boundaries are emitted once, as if the corpus were one long
    token sequence. Also used to fold messages into a live dictionary in
    online mode and by parallel workers over file slices.
    """

    def __init__(self, into: NGramDictionary | None = None):
        self.dict = into if into is not None else NGramDictionary()
        self.carry: list[str] = []
        self.token_count = 0
        self.head2: list[str] = []  # first two tokens ever fed, for shard stitching

    def add_message(self, tokens: list[str]) -> None:
        self.dict.total_messages += 1
        if not tokens:
            return
        if len(self.head2) < 2:
            self.head2.extend(tokens[: 2 - len(self.head2)])
        self.token_count += len(tokens)
        ext = self.carry + tokens
        if len(ext) >= 3:
            self.dict.counts3.update(zip(ext, ext[1:], ext[2:]))
        # skip the one 2-gram window that lies entirely inside the carry
        start = 1 if len(self.carry) == 2 else 0
        if len(ext) - start >= 2:
            self.dict.counts2.update(zip(ext[start:], ext[start + 1 :]))
        self.carry = ext[-2:]


def emit_ngrams(
    prev_tail: Iterable[str], tokens: list[str], next_head: Iterable[str]
) -> list[NGram]:
    """All 2-gram and 3-gram windows over prev_tail ++ tokens ++ next_head
    that include at least one token of ``tokens``.

    Windows lying entirely inside a neighbor context are that neighbor's
    own windows and are not emitted here. Emission order is left to right,
    the 3-gram before the 2-gram at each window start.
    """
    if not tokens:
        return []
    prev_tail = list(prev_tail)
    aug = prev_tail + tokens + list(next_head)
    lo = len(prev_tail)
    hi = lo + len(tokens) - 1
    n = len(aug)
    out: list[NGram] = []
    for s in range(n - 1):
        if s + 2 < n and s <= hi and s + 2 >= lo:
            out.append((aug[s], aug[s + 1], aug[s + 2]))
        if s <= hi and s + 1 >= lo:
            out.append((aug[s], aug[s + 1]))
    return out


def build(records: Iterable[LogRecord]) -> NGramDictionary:
    """Count every 2-gram/3-gram window of the record stream in one pass."""
    builder = DictionaryBuilder()
    for rec in records:
        builder.add_message(rec.tokens)
    return builder.dict


def merge(a: NGramDictionary, b: NGramDictionary) -> NGramDictionary:
    """Pointwise sum of two dictionaries built from disjoint partitions."""
    return NGramDictionary(
        a.counts2 + b.counts2, a.counts3 + b.counts3, a.total_messages + b.total_messages
    )


def lookup(d: NGramDictionary, gram: NGram) -> int:
    """Stored occurrence count, 0 for absent grams."""
    if len(gram) == 2:
        return d.counts2.get(gram, 0)
    if len(gram) == 3:
        return d.counts3.get(gram, 0)
    raise ValueError(f"gram order must be 2 or 3, got {len(gram)}")


def save(d: NGramDictionary, sink) -> None:
    """Write the line-oriented text format; entries are sorted so that the
    same dictionary always produces the same bytes."""
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        fh.write(f"messages\t{d.total_messages}\n")
        for order, counts in ((2, d.counts2), (3, d.counts3)):
            for gram in sorted(counts):
                fh.write(f"{order}\t{_SEP.join(gram)}\t{counts[gram]}\n")
    finally:
        if own:
            fh.close()


def load(source) -> NGramDictionary:
    """Read the format written by save(); load(save(d)) == d exactly."""
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    fh = open(source, "r", encoding="utf-8", newline="\n") if own else source
    try:
        d = NGramDictionary()
        first = fh.readline()
        parts = first.rstrip("\n").split("\t")
        if len(parts) != 2 or parts[0] != "messages":
            raise DictionaryFormatError(1, "expected header 'messages\\t<count>'")
        try:
            d.total_messages = int(parts[1])
        except ValueError:
            raise DictionaryFormatError(1, f"bad message count {parts[1]!r}") from None
        for line_no, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise DictionaryFormatError(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
            order_s, gram_s, count_s = fields
            if order_s not in ("2", "3"):
                raise DictionaryFormatError(line_no, f"bad gram order {order_s!r}")
            gram = tuple(gram_s.split(_SEP))
            if len(gram) != int(order_s):
                raise DictionaryFormatError(
                    line_no, f"order {order_s} line carries {len(gram)} tokens"
                )
            try:
                count = int(count_s)
            except ValueError:
                raise DictionaryFormatError(line_no, f"bad count {count_s!r}") from None
            if count < 1:
                raise DictionaryFormatError(line_no, f"count must be >= 1, got {count}")
            target = d.counts2 if order_s == "2" else d.counts3
            if gram in target:
                raise DictionaryFormatError(line_no, f"duplicate entry {gram!r}")
            target[gram] = count
        return d
    finally:
        if own:
            fh.close()
