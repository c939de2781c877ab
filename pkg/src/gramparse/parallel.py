"""Desk-scale parallel execution: contiguous file slices are preprocessed
and counted by worker processes, the per-slice dictionaries are tree-merged,
and the windows crossing slice cuts are reconstructed from two-token edge
contexts, so the result equals the sequential build exactly. Parsing
fans out the same way; the first and last message of every slice are
re-parsed by the coordinator with their true neighbor contexts, keeping the
output byte-identical for any worker count.
"""

from __future__ import annotations

import multiprocessing
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

from .dictionary import DictionaryBuilder, NGramDictionary, merge
from .parser import ParsedMessage, parse_corpus, parse_message, write_structured_csv
from .preprocess import DatasetConfig, LogRecord, read_log_file, read_records
from .threshold import ThresholdPair, estimate


@dataclass
class SliceCounts:
    dict: NGramDictionary
    head2: list[str]
    tail2: list[str]
    token_count: int


@dataclass
class SliceParse:
    rows: list[ParsedMessage]
    first_tokens: list[str]
    last_tokens: list[str]
    second_head2: list[str]
    secondlast_tail2: list[str]


@dataclass
class ThroughputReport:
    messages: int
    wall_time: float
    messages_per_second: float
    workers: int


def _cut_points(path, cfg: DatasetConfig, workers: int) -> list[int]:
    """Byte offsets of slice boundaries, snapped forward to the next
    record-start line so records never straddle a cut."""
    size = os.path.getsize(path)
    if workers <= 1 or size == 0:
        return [0, size]
    header = re.compile(cfg.header_pattern)
    every_line_starts = cfg.multiline == "keep-as-own-record"
    cuts = {0, size}
    with open(path, "rb") as fh:
        for i in range(1, workers):
            target = size * i // workers
            fh.seek(target)
            fh.readline()  # finish the partial line
            while True:
                pos = fh.tell()
                line = fh.readline()
                if not line:
                    pos = size
                    break
                if every_line_starts:
                    break
                if header.match(line.decode("utf-8", "replace").rstrip("\r\n")):
                    break
            cuts.add(pos)
    return sorted(cuts)


def _slice_lines(path, start: int, end: int) -> Iterator[str]:
    with open(path, "rb") as fh:
        fh.seek(start)
        remaining = end - start
        while remaining > 0:
            line = fh.readline()
            if not line:
                break
            remaining -= len(line)
            yield line.decode("utf-8", "replace")


def _build_slice(args) -> SliceCounts:
    path, cfg, start, end = args
    builder = DictionaryBuilder()
    for rec in read_records(_slice_lines(path, start, end), cfg):
        builder.add_message(rec.tokens)
    return SliceCounts(builder.dict, builder.head2, list(builder.carry), builder.token_count)


def _stitch_cut_windows(parts: list[SliceCounts]) -> NGramDictionary:
    """Windows that span slice cuts, reconstructed from edge contexts."""
    cross = NGramDictionary()
    carry: list[str] = []
    for part in parts:
        if part.token_count == 0:
            continue
        h = part.head2
        if carry:
            cross.counts2[(carry[-1], h[0])] += 1
            if len(carry) == 2:
                cross.counts3[(carry[-2], carry[-1], h[0])] += 1
            if part.token_count >= 2:
                cross.counts3[(carry[-1], h[0], h[1])] += 1
        carry = (carry + h)[-2:] if part.token_count < 2 else list(part.tail2)
    return cross


def _tree_merge(dicts: list[NGramDictionary]) -> NGramDictionary:
    while len(dicts) > 1:
        paired = []
        for i in range(0, len(dicts) - 1, 2):
            paired.append(merge(dicts[i], dicts[i + 1]))
        if len(dicts) % 2:
            paired.append(dicts[-1])
        dicts = paired
    return dicts[0]


def resolve_workers(workers: int | None) -> int:
    return workers if workers and workers >= 1 else (os.cpu_count() or 1)


def parallel_build(path, cfg: DatasetConfig, workers: int | None = None) -> NGramDictionary:
    """Shard-and-merge dictionary build; equals the sequential build exactly."""
    workers = resolve_workers(workers)
    cuts = _cut_points(path, cfg, workers)
    slices = list(zip(cuts, cuts[1:]))
    if len(slices) <= 1:
        builder = DictionaryBuilder()
        for rec in read_log_file(path, cfg):
            builder.add_message(rec.tokens)
        return builder.dict
    with ProcessPoolExecutor(max_workers=len(slices)) as pool:
        parts = list(pool.map(_build_slice, [(path, cfg, s, e) for s, e in slices]))
    dicts = [p.dict for p in parts]
    dicts.append(_stitch_cut_windows(parts))
    return _tree_merge(dicts)


# Set before forking the parse pool so workers inherit the dictionary
# instead of unpickling it per task (fork start method only).
_PARSE_SHARED: tuple | None = None


def _parse_slice(args) -> SliceParse | None:
    path, cfg, start, end, payload = args
    d, t, placeholder = payload if payload is not None else _PARSE_SHARED
    records = read_records(_slice_lines(path, start, end), cfg)
    rows = list(parse_corpus(records, d, t, placeholder))
    if not rows:
        return None
    return SliceParse(
        rows=rows,
        first_tokens=rows[0].tokens,
        last_tokens=rows[-1].tokens,
        second_head2=rows[1].tokens[:2] if len(rows) >= 2 else [],
        secondlast_tail2=rows[-2].tokens[-2:] if len(rows) >= 2 else [],
    )


def parallel_parse(
    path,
    cfg: DatasetConfig,
    d: NGramDictionary,
    t: ThresholdPair,
    workers: int | None = None,
    placeholder: str = "dollar",
) -> Iterator[ParsedMessage]:
    """Parse file slices on worker processes; output order and content are
    identical to the sequential parse for every worker count."""
    global _PARSE_SHARED
    workers = resolve_workers(workers)
    cuts = _cut_points(path, cfg, workers)
    slices = list(zip(cuts, cuts[1:]))
    if len(slices) <= 1:
        yield from parse_corpus(read_log_file(path, cfg), d, t, placeholder)
        return

    use_fork = multiprocessing.get_start_method() == "fork"
    payload = None if use_fork else (d, t, placeholder)
    _PARSE_SHARED = (d, t, placeholder)
    try:
        with ProcessPoolExecutor(max_workers=len(slices)) as pool:
            results = [
                r
                for r in pool.map(
                    _parse_slice, [(path, cfg, s, e, payload) for s, e in slices]
                )
                if r is not None
            ]
    finally:
        _PARSE_SHARED = None

    def reparse(pm: ParsedMessage, prev_tail: list[str], next_head: list[str]) -> ParsedMessage:
        rec = LogRecord(pm.line_id, {}, pm.tokens)
        return parse_message(rec, prev_tail, next_head, d, t, placeholder)

    offset = 0
    for i, res in enumerate(results):
        rows = res.rows
        n = len(rows)
        prev_ctx = results[i - 1].last_tokens[-2:] if i > 0 else []
        next_ctx = results[i + 1].first_tokens[:2] if i + 1 < len(results) else []
        if n == 1:
            rows[0] = reparse(rows[0], prev_ctx, next_ctx)
        else:
            rows[0] = reparse(rows[0], prev_ctx, res.second_head2)
            rows[-1] = reparse(rows[-1], res.secondlast_tail2, next_ctx)
        for pm in rows:
            pm.line_id += offset
            yield pm
        offset += n


def end_to_end(
    path,
    cfg: DatasetConfig,
    workers: int | None = None,
    span: float = 0.75,
    thresholds: ThresholdPair | None = None,
    placeholder: str = "dollar",
    out=None,
) -> tuple[ThroughputReport, NGramDictionary, ThresholdPair]:
    """Timed full pipeline: dictionary build, threshold estimation, parse.

    The reported wall time covers all three stages, dictionary construction
    included. Output goes to ``out`` as structured CSV when given, otherwise
    the parse stream is drained and discarded.
    """
    workers = resolve_workers(workers)
    t0 = time.perf_counter()
    d = parallel_build(path, cfg, workers)
    t = thresholds if thresholds is not None else estimate(d, span=span)
    stream = parallel_parse(path, cfg, d, t, workers, placeholder)
    if out is not None:
        n = write_structured_csv(stream, out)
    else:
        n = sum(1 for _ in stream)
    wall = time.perf_counter() - t0
    report = ThroughputReport(
        messages=n,
        wall_time=wall,
        messages_per_second=(n / wall if wall > 0 else float("inf")),
        workers=workers,
    )
    return report, d, t
