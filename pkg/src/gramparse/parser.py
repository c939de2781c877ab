"""Label message tokens static or dynamic against a gram dictionary and
render LogPai-style templates.

A token is dynamic when one low-appearing 2-gram ends at it and another
starts at it. Candidate 2-grams come from the sub-windows of low-appearing
3-grams only. Windows are formed over the message extended with up to two
tokens of each neighbor message, so edge tokens see as many windows as
interior ones; at the very start and end of the whole corpus the missing
side of the rule is waived (a token there needs only its one existing
adjacent 2-gram to be low).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

from .dictionary import NGram, NGramDictionary
from .preprocess import LogRecord
from .threshold import ThresholdPair

PLACEHOLDER_STYLES = ("dollar", "logpai")


class TokenLabel(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class PositionedGram(NamedTuple):
    """A gram window plus its start offset in the boundary-augmented
    token sequence prev_tail ++ tokens ++ next_head."""

    position: int
    gram: NGram


@dataclass
class ParsedMessage:
    line_id: int
    template: str
    variables: list[tuple[int, str]]
    labels: list[TokenLabel]
    tokens: list[str]


def low_3grams(
    tokens: list[str],
    prev_tail: list[str],
    next_head: list[str],
    d: NGramDictionary,
    t: ThresholdPair,
) -> list[PositionedGram]:
    """All boundary-augmented 3-gram windows whose count is below t3."""
    aug = list(prev_tail) + list(tokens) + list(next_head)
    get3 = d.counts3.get
    t3 = t.t3
    return [
        PositionedGram(s, g)
        for s in range(len(aug) - 2)
        if get3((g := (aug[s], aug[s + 1], aug[s + 2])), 0) < t3
    ]


def low_2grams(
    candidates: list[PositionedGram], d: NGramDictionary, t: ThresholdPair
) -> list[PositionedGram]:
    """The distinct 2-gram sub-windows of low 3-grams whose count is below t2.

    Positions are kept: the same token pair can be low in one slot of the
    message and irrelevant in another.
    """
    seen: dict[int, NGram] = {}
    for pos, gram in candidates:
        seen.setdefault(pos, gram[:2])
        seen.setdefault(pos + 1, gram[1:])
    get2 = d.counts2.get
    t2 = t.t2
    return [
        PositionedGram(pos, g) for pos, g in sorted(seen.items()) if get2(g, 0) < t2
    ]


def label_tokens(
    tokens: list[str],
    prev_tail: list[str],
    next_head: list[str],
    low2: list[PositionedGram],
) -> list[TokenLabel]:
    """Apply the two-sided witness rule per token position.

    Token i is dynamic when the 2-gram ending at it and the 2-gram starting
    at it are both low. A side that cannot exist (nothing before the first
    token of the corpus, nothing after the last) is waived, but at least one
    real low witness is always required. Low 2-grams lying entirely inside a
    neighbor context never label this message's tokens.
    """
    lo = len(prev_tail)
    n = lo + len(tokens) + len(next_head)
    low_positions = {pg.position for pg in low2}
    labels: list[TokenLabel] = []
    for i in range(len(tokens)):
        q = lo + i
        left_witness = (q - 1) in low_positions
        right_witness = q in low_positions and q < n - 1
        left_open = q == 0
        right_open = q == n - 1
        dynamic = (
            (left_witness or left_open)
            and (right_witness or right_open)
            and (left_witness or right_witness)
        )
        labels.append(TokenLabel.DYNAMIC if dynamic else TokenLabel.STATIC)
    return labels


def render(
    tokens: list[str],
    labels: list[TokenLabel],
    line_id: int = 0,
    placeholder: str = "dollar",
) -> ParsedMessage:
    """Substitute numbered placeholders for dynamic tokens.

    ``dollar`` emits $1, $2, ...; ``logpai`` emits <*> for every dynamic
    token (the ground-truth style of public labeled samples).
    """
    if placeholder not in PLACEHOLDER_STYLES:
        raise ValueError(f"placeholder must be one of {PLACEHOLDER_STYLES}")
    if len(tokens) != len(labels):
        raise ValueError("labels are not aligned with tokens")
    parts: list[str] = []
    variables: list[tuple[int, str]] = []
    k = 0
    for tok, label in zip(tokens, labels):
        if label is TokenLabel.DYNAMIC:
            k += 1
            variables.append((k, tok))
            parts.append(f"${k}" if placeholder == "dollar" else "<*>")
        else:
            parts.append(tok)
    return ParsedMessage(line_id, " ".join(parts), variables, list(labels), list(tokens))


def _dynamic_flags(
    tokens: list[str],
    prev_tail: list[str],
    next_head: list[str],
    d: NGramDictionary,
    t: ThresholdPair,
) -> list[bool]:
    # hot path: equivalent to low_3grams -> low_2grams -> label_tokens
    aug = list(prev_tail) + tokens + list(next_head)
    n = len(aug)
    lo = len(prev_tail)
    get2 = d.counts2.get
    get3 = d.counts3.get
    t2, t3 = t.t2, t.t3
    pairs = n - 1
    candidate = bytearray(pairs if pairs > 0 else 0)
    for s in range(n - 2):
        if get3((aug[s], aug[s + 1], aug[s + 2]), 0) < t3:
            candidate[s] = 1
            candidate[s + 1] = 1
    low2 = bytearray(pairs if pairs > 0 else 0)
    for p in range(pairs):
        if candidate[p] and get2((aug[p], aug[p + 1]), 0) < t2:
            low2[p] = 1
    flags: list[bool] = []
    last = n - 1
    for i in range(len(tokens)):
        q = lo + i
        lw = q > 0 and low2[q - 1]
        rw = q < last and low2[q]
        flags.append(
            bool((lw or q == 0) and (rw or q == last) and (lw or rw))
        )
    return flags


def parse_message(
    record: LogRecord,
    prev_tail: list[str],
    next_head: list[str],
    d: NGramDictionary,
    t: ThresholdPair,
    placeholder: str = "dollar",
) -> ParsedMessage:
    """Label one record's tokens and render its template."""
    flags = _dynamic_flags(record.tokens, prev_tail, next_head, d, t)
    labels = [TokenLabel.DYNAMIC if f else TokenLabel.STATIC for f in flags]
    return render(record.tokens, labels, record.line_id, placeholder)


def parse_corpus(
    records: Iterable[LogRecord],
    d: NGramDictionary,
    t: ThresholdPair,
    placeholder: str = "dollar",
) -> Iterator[ParsedMessage]:
    """Parse a record stream in order, feeding each message its real
    neighbor contexts (one-message lookahead)."""
    pending: LogRecord | None = None
    tail_before: list[str] = []
    for rec in records:
        if pending is not None:
            yield parse_message(pending, tail_before, rec.tokens[:2], d, t, placeholder)
            tail_before = pending.tokens[-2:]
        pending = rec
    if pending is not None:
        yield parse_message(pending, tail_before, [], d, t, placeholder)


_DOLLAR = re.compile(r"\$(\d+)")


def reconstruct(pm: ParsedMessage) -> str:
    """Substitute the variables back into the template.

    With either placeholder style this reproduces the space-joined token
    list of the original message.
    """
    by_index = dict(pm.variables)
    ordered = iter(tok for _, tok in pm.variables)
    out: list[str] = []
    for tok in pm.template.split(" ") if pm.template else []:
        m = _DOLLAR.fullmatch(tok)
        if m and int(m.group(1)) in by_index:
            out.append(by_index[int(m.group(1))])
        elif tok == "<*>":
            out.append(next(ordered))
        else:
            out.append(tok)
    return " ".join(out)


CSV_COLUMNS = ("LineId", "Content", "EventTemplate", "ParameterList")


def write_structured_csv(messages: Iterable[ParsedMessage], sink) -> int:
    """Write the structured output CSV; returns the number of rows."""
    import csv

    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", encoding="utf-8", newline="") if own else sink
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        count = 0
        for pm in messages:
            writer.writerow(
                (
                    pm.line_id,
                    " ".join(pm.tokens),
                    pm.template,
                    json.dumps([tok for _, tok in pm.variables]),
                )
            )
            count += 1
        return count
    finally:
        if own:
            fh.close()
