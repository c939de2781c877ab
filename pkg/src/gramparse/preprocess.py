"""Turn raw log lines into header fields plus whitespace-split content tokens.

A dataset is described by a header regex with named captures (one of which
must be ``content``) and an ordered list of masking rules that replace
common dynamic formats (IP addresses, block ids, ...) with a single
placeholder token before tokenization.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator

MULTILINE_POLICIES = ("join-to-previous", "drop", "keep-as-own-record")


class ConfigError(ValueError):
    """Raised for malformed dataset configuration."""


@dataclass(frozen=True)
class MaskRule:
    pattern: str
    tag: str

    @property
    def placeholder(self) -> str:
        return f"<{self.tag}>"


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    header_pattern: str
    mask_rules: tuple[MaskRule, ...] = ()
    multiline: str = "join-to-previous"

    def __post_init__(self) -> None:
        try:
            compiled = re.compile(self.header_pattern)
        except re.error as exc:
            raise ConfigError(f"{self.name}: bad header pattern: {exc}") from exc
        if "content" not in compiled.groupindex:
            raise ConfigError(f"{self.name}: header pattern has no (?P<content>...) capture")
        if self.multiline not in MULTILINE_POLICIES:
            raise ConfigError(
                f"{self.name}: multiline must be one of {MULTILINE_POLICIES}, got {self.multiline!r}"
            )
        for rule in self.mask_rules:
            try:
                re.compile(rule.pattern)
            except re.error as exc:
                raise ConfigError(f"{self.name}: bad mask pattern {rule.pattern!r}: {exc}") from exc


@dataclass
class LogRecord:
    line_id: int
    header: dict[str, str]
    tokens: list[str]


@lru_cache(maxsize=256)
def _compile(pattern: str) -> re.Pattern[str]:
    return re.compile(pattern)


class _Masker:
    """Replaces mask-rule matches left to right, first listed rule wins on ties.

    When the rules can be combined into one alternation (no backreferences,
    no group-name collisions) a single compiled regex does the scan; otherwise
    a per-rule search loop gives identical results.
    """

    def __init__(self, rules: tuple[MaskRule, ...]):
        self.rules = rules
        self._combined: re.Pattern[str] | None = None
        self._group_of_rule: list[int] = []
        if rules and not any(re.search(r"\\\d", r.pattern) for r in rules):
            parts = []
            group_index = 1
            for rule in rules:
                self._group_of_rule.append(group_index)
                parts.append(f"({rule.pattern})")
                group_index += re.compile(rule.pattern).groups + 1
            try:
                self._combined = re.compile("|".join(parts))
            except re.error:
                self._combined = None

    def apply(self, content: str) -> str:
        if not self.rules:
            return content
        if self._combined is not None:
            group_of_rule = self._group_of_rule
            rules = self.rules

            def repl(m: re.Match[str]) -> str:
                for i, g in enumerate(group_of_rule):
                    if m.group(g) is not None:
                        return rules[i].placeholder
                return m.group(0)

            return self._combined.sub(repl, content)
        return self._apply_scan(content)

    def _apply_scan(self, content: str) -> str:
        out: list[str] = []
        pos = 0
        n = len(content)
        while pos < n:
            best: tuple[int, int, re.Match[str]] | None = None
            for order, rule in enumerate(self.rules):
                m = _compile(rule.pattern).search(content, pos)
                if m is None or m.start() == m.end():
                    continue
                key = (m.start(), order, m)
                if best is None or key[:2] < best[:2]:
                    best = key
            if best is None:
                out.append(content[pos:])
                break
            start, order, m = best
            out.append(content[pos:m.start()])
            out.append(self.rules[order].placeholder)
            pos = m.end()
        return "".join(out)


@lru_cache(maxsize=256)
def _masker(rules: tuple[MaskRule, ...]) -> _Masker:
    return _Masker(rules)


def mask_common_formats(content: str, cfg: DatasetConfig) -> str:
    """Replace every mask-rule match with its placeholder tag token."""
    return _masker(cfg.mask_rules).apply(content)


def parse_line(raw: str, cfg: DatasetConfig, line_id: int) -> LogRecord | None:
    """Parse one physical line; returns None when the header does not match."""
    m = _compile(cfg.header_pattern).match(raw)
    if m is None:
        return None
    header = {k: v for k, v in m.groupdict().items() if k != "content" and v is not None}
    content = mask_common_formats(m.group("content"), cfg)
    return LogRecord(line_id, header, content.split())


def read_records(source: Iterable[str], cfg: DatasetConfig) -> Iterator[LogRecord]:
    """Yield LogRecords from a line stream, applying the multiline policy.

    Lines whose header does not match are joined to the previous record,
    dropped, or kept as header-less records depending on ``cfg.multiline``.
    Emitted records carry line_ids 1, 2, 3, ...
    """
    policy = cfg.multiline
    pending: LogRecord | None = None
    next_id = 1
    for raw in source:
        line = raw.rstrip("\r\n")
        rec = parse_line(line, cfg, next_id)
        if rec is None and policy == "keep-as-own-record":
            rec = LogRecord(next_id, {}, mask_common_formats(line, cfg).split())
        if rec is not None:
            if pending is not None:
                yield pending
            pending = rec
            next_id += 1
        elif policy == "join-to-previous":
            if pending is not None:
                pending.tokens.extend(mask_common_formats(line, cfg).split())
            # a continuation line before any record has nothing to join: drop it
    if pending is not None:
        yield pending


def read_log_file(path, cfg: DatasetConfig) -> Iterator[LogRecord]:
    """read_records over a UTF-8 log file (LF or CRLF; bad bytes replaced)."""
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as fh:
        yield from read_records(fh, cfg)


def _parse_mask_rules(section: configparser.SectionProxy, name: str) -> tuple[MaskRule, ...]:
    indexed: dict[int, dict[str, str]] = {}
    for key, value in section.items():
        m = re.fullmatch(r"mask\.(\d+)\.(pattern|tag)", key)
        if m:
            indexed.setdefault(int(m.group(1)), {})[m.group(2)] = value
    rules = []
    for idx in sorted(indexed):
        entry = indexed[idx]
        if "pattern" not in entry or "tag" not in entry:
            raise ConfigError(f"{name}: mask.{idx} needs both .pattern and .tag")
        rules.append(MaskRule(entry["pattern"], entry["tag"]))
    return tuple(rules)


def load_configs(path) -> dict[str, DatasetConfig]:
    """Load every dataset section from an INI-style config file.

    Recognized keys per section: ``header``, ``mask.N.pattern``,
    ``mask.N.tag`` and ``multiline``.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    configs: dict[str, DatasetConfig] = {}
    for name in parser.sections():
        section = parser[name]
        if "header" not in section:
            raise ConfigError(f"{name}: missing required key 'header'")
        configs[name] = DatasetConfig(
            name=name,
            header_pattern=section["header"],
            mask_rules=_parse_mask_rules(section, name),
            multiline=section.get("multiline", "join-to-previous"),
        )
    return configs


def load_dataset_config(path, name: str) -> DatasetConfig:
    configs = load_configs(path)
    if name not in configs:
        known = ", ".join(sorted(configs)) or "none"
        raise ConfigError(f"dataset {name!r} not found in {path} (known: {known})")
    return configs[name]
