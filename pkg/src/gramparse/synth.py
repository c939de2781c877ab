"""Deterministic synthetic log corpora for benchmarks and experiments.

Messages come from a fixed pool of templates whose slots are filled with
values drawn from large spaces, so slot tokens are almost always unique
(rare grams) while the skeleton grams repeat heavily. All randomness flows
through one seeded generator, making every corpus reproducible.
"""

from __future__ import annotations

import random
from typing import Iterator

HEADER_FORMAT = "2017-06-{day:02d} {hh:02d}:{mm:02d}:{ss:02d} INFO {logger}: {content}"

# (logger, template with {} slots, slot fillers)
_TEMPLATES = [
    ("storage.BlockManager", "Found block {} locally", ("blk",)),
    ("storage.BlockManager", "Dropping block {} from memory", ("blk",)),
    ("executor.Executor", "Finished task {} in stage {} elapsed {} ms", ("tid", "sid", "ms")),
    ("rdd.HadoopRDD", "Input split: {}", ("split",)),
    ("broadcast.TorrentBroadcast", "Started reading broadcast variable {}", ("vid",)),
    ("scheduler.TaskSetManager", "Assigned task {} to executor {}", ("tid", "eid")),
    ("network.ConnectionManager", "Connection established to {} port {}", ("host", "port")),
    ("shuffle.ShuffleBlockFetcher", "Fetching {} blocks from {} peers took {} ms", ("n", "n", "ms")),
    ("util.SignalLogger", "Registered signal handler for {}", ("sig",)),
    ("memory.MemoryStore", "Block {} stored as values estimated size {} KB", ("blk", "ms")),
]


def _fillers(rng: random.Random) -> dict[str, callable]:
    return {
        "blk": lambda: f"rdd_{rng.randrange(10, 99)}_{rng.randrange(10 ** 6)}",
        "tid": lambda: str(rng.randrange(10 ** 7)),
        "sid": lambda: f"{rng.randrange(10 ** 4)}.{rng.randrange(10)}",
        "ms": lambda: str(rng.randrange(1, 10 ** 6)),
        "split": lambda: f"hdfs://host{rng.randrange(100)}/part-{rng.randrange(10 ** 6)}:{rng.randrange(10 ** 8)}+{rng.randrange(10 ** 4)}",
        "vid": lambda: str(rng.randrange(10 ** 6)),
        "eid": lambda: f"exec-{rng.randrange(10 ** 5)}",
        "host": lambda: f"node-{rng.randrange(10 ** 5)}.cluster.local",
        "port": lambda: str(rng.randrange(1024, 65536)),
        "n": lambda: str(rng.randrange(1, 10 ** 5)),
        "sig": lambda: f"SIG{rng.randrange(10 ** 4)}",
    }


def synth_lines(
    n_messages: int, seed: int = 0, profile: str = "steady", n_templates: int | None = None
) -> Iterator[str]:
    """Yield raw log lines (no trailing newline).

    ``steady`` draws from the whole template pool throughout, so any prefix
    covers the full event set. ``shifted`` holds back a third of the pool
    until the second half of the stream, introducing brand-new events
    midway.
    """
    if profile not in ("steady", "shifted"):
        raise ValueError(f"unknown profile {profile!r}")
    rng = random.Random(seed)
    fillers = _fillers(rng)
    pool = _TEMPLATES[: n_templates or len(_TEMPLATES)]
    held_back = len(pool) // 3 if profile == "shifted" else 0
    for i in range(n_messages):
        active = pool if (held_back == 0 or i >= n_messages // 2) else pool[:-held_back]
        logger, template, slots = active[rng.randrange(len(active))]
        content = template.format(*(fillers[s]() for s in slots))
        t = i // 10
        yield HEADER_FORMAT.format(
            day=9 + (t // 86400) % 20,
            hh=(t // 3600) % 24,
            mm=(t // 60) % 60,
            ss=t % 60,
            logger=logger,
            content=content,
        )


def write_corpus(
    path,
    n_messages: int | None = None,
    target_bytes: int | None = None,
    seed: int = 0,
    profile: str = "steady",
    n_templates: int | None = None,
) -> int:
    """Write a corpus by message count or until a byte size is reached;
    returns the number of messages written."""
    if (n_messages is None) == (target_bytes is None):
        raise ValueError("give exactly one of n_messages / target_bytes")
    written = 0
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if n_messages is not None:
            for line in synth_lines(n_messages, seed, profile, n_templates):
                fh.write(line + "\n")
                count += 1
        else:
            # generous upper bound on message count; stop at the byte target
            for line in synth_lines(2 ** 62, seed, profile, n_templates):
                fh.write(line + "\n")
                count += 1
                written += len(line) + 1
                if written >= target_bytes:
                    break
    return count


def ground_truth_template(content_template: str) -> str:
    """The LogPai-style template (slots as <*>) for a pool entry."""
    return content_template.replace("{}", "<*>")
