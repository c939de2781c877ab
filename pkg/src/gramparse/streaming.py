"""Online parsing: parse each message with the dictionary as it stood, then
fold the message's grams into the dictionary.

Because windows span message boundaries, a message can only be parsed once
the head of the following message is known, so the stream runs with a
one-message lag; flush() drains the final buffered message. Thresholds are
re-estimated every ``refresh_every`` folded messages and once more on flush.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .dictionary import DictionaryBuilder, NGramDictionary
from .parser import ParsedMessage, parse_message
from .preprocess import LogRecord
from .threshold import EmptyDictionaryError, ThresholdPair, estimate

DEFAULT_REFRESH = 1000
# used until the dictionary has enough mass for a real estimate
_BOOTSTRAP = ThresholdPair(t2=2, t3=2)


class OnlineParser:
    """Single-writer state machine owning {dictionary, thresholds}.

    step() returns the parse of the *previous* record once the incoming
    record provides its next-head context; the first call returns None.
    """

    def __init__(
        self,
        refresh_every: int = DEFAULT_REFRESH,
        placeholder: str = "dollar",
        span: float = 0.75,
    ):
        if refresh_every < 1:
            raise ValueError("refresh_every must be >= 1")
        self.refresh_every = refresh_every
        self.placeholder = placeholder
        self.span = span
        self.thresholds = _BOOTSTRAP
        self._builder = DictionaryBuilder()
        self._pending: LogRecord | None = None
        self._tail_before_pending: list[str] = []

    @property
    def dictionary(self) -> NGramDictionary:
        return self._builder.dict

    def _refresh_thresholds(self) -> None:
        try:
            self.thresholds = estimate(self.dictionary, span=self.span)
        except EmptyDictionaryError:
            pass  # not enough material yet, keep what we have

    def _fold(self, record: LogRecord) -> None:
        self._builder.add_message(record.tokens)
        if self.dictionary.total_messages % self.refresh_every == 0:
            self._refresh_thresholds()

    def step(self, incoming: LogRecord) -> ParsedMessage | None:
        """Feed one record; emit the parse of the record before it."""
        out = None
        if self._pending is not None:
            out = parse_message(
                self._pending,
                self._tail_before_pending,
                incoming.tokens[:2],
                self.dictionary,
                self.thresholds,
                self.placeholder,
            )
            self._fold(self._pending)
            self._tail_before_pending = self._pending.tokens[-2:]
        self._pending = incoming
        return out

    def flush(self) -> ParsedMessage | None:
        """Parse the final buffered record with an empty next head."""
        if self._pending is None:
            return None
        out = parse_message(
            self._pending,
            self._tail_before_pending,
            [],
            self.dictionary,
            self.thresholds,
            self.placeholder,
        )
        self._fold(self._pending)
        self._tail_before_pending = self._pending.tokens[-2:]
        self._pending = None
        self._refresh_thresholds()
        return out

    def run(self, records: Iterable[LogRecord]) -> Iterator[ParsedMessage]:
        """Drive a whole record stream through step() and flush()."""
        for rec in records:
            out = self.step(rec)
            if out is not None:
                yield out
        out = self.flush()
        if out is not None:
            yield out


def agreement_ratio(a: Iterable[ParsedMessage], b: Iterable[ParsedMessage]) -> float:
    """Fraction of aligned messages whose template and variables are both
    exactly equal. Streams must have equal length and matching line_ids."""
    a = list(a)
    b = list(b)
    if len(a) != len(b):
        raise ValueError(f"stream lengths differ: {len(a)} vs {len(b)}")
    if not a:
        return 1.0
    matches = 0
    for pa, pb in zip(a, b):
        if pa.line_id != pb.line_id:
            raise ValueError(f"line_id mismatch: {pa.line_id} vs {pb.line_id}")
        if pa.template == pb.template and pa.variables == pb.variables:
            matches += 1
    return matches / len(a)
