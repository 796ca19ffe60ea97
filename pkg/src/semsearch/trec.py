"""Readers for TREC collections, topics and qrels; run-file writer."""

from __future__ import annotations

import gzip
import html
import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import TrecParseError

log = logging.getLogger(__name__)

DEFAULT_TEXT_TAGS = ("HEADLINE", "TEXT")

_DOC_TAG = re.compile(rb"<(/?)DOC>", re.IGNORECASE)
_TAG = re.compile(r"<[^>]*>")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class TrecDocument:
    docno: str
    text: str


@dataclass(frozen=True)
class Topic:
    number: int
    title: str
    description: str = ""
    narrative: str = ""


@dataclass
class ParseStats:
    documents: int = 0
    skipped: int = 0
    problems: list[str] = field(default_factory=list)


def _open_bytes(path: Path) -> bytes:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _collection_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.rglob("*") if p.is_file() and not p.name.startswith("."))
    if not path.exists():
        raise FileNotFoundError(path)
    return [path]


def _clean(fragment: str) -> str:
    return _WS.sub(" ", html.unescape(_TAG.sub(" ", fragment))).strip()


def _tag_contents(record: str, tag: str) -> list[str]:
    pattern = re.compile(rf"<{tag}\b[^>]*>(.*?)</{tag}\s*>", re.IGNORECASE | re.DOTALL)
    return pattern.findall(record)


def _split_records(data: bytes, source: str, strict: bool, stats: ParseStats) -> Iterator[tuple[int, bytes]]:
    """Yield ``(byte_offset, record_bytes)`` for each balanced DOC block."""
    start = None
    for m in _DOC_TAG.finditer(data):
        closing = bool(m.group(1))
        if not closing:
            if start is not None:
                _problem(source, start, "<DOC> not closed before next <DOC>", strict, stats)
            start = m.start()
        else:
            if start is None:
                _problem(source, m.start(), "</DOC> without opening <DOC>", strict, stats)
                continue
            yield start, data[start:m.end()]
            start = None
    if start is not None:
        _problem(source, start, "<DOC> not closed before end of file", strict, stats)


def _problem(source: str, offset: int, message: str, strict: bool, stats: ParseStats) -> None:
    if strict:
        raise TrecParseError(source, f"byte {offset}", message)
    stats.skipped += 1
    stats.problems.append(f"{source}:byte {offset}: {message}")
    log.warning("%s:byte %d: %s (skipped)", source, offset, message)


def parse_trec_docs(
    path: str | os.PathLike,
    text_tags: Sequence[str] = DEFAULT_TEXT_TAGS,
    strict: bool = False,
    stats: ParseStats | None = None,
) -> Iterator[TrecDocument]:
    """Stream documents from a TREC SGML file or a directory of them.

    Lenient mode (default) skips malformed records and counts them in
    ``stats``; strict mode raises :class:`TrecParseError` with a byte offset.
    """
    stats = stats if stats is not None else ParseStats()
    seen: set[str] = set()
    for file in _collection_files(Path(path)):
        data = _open_bytes(file)
        for offset, raw in _split_records(data, str(file), strict, stats):
            record = raw.decode("utf-8", errors="replace")
            docnos = _tag_contents(record, "DOCNO")
            docno = docnos[0].strip() if docnos else ""
            if not docno:
                _problem(str(file), offset, "<DOC> without <DOCNO>", strict, stats)
                continue
            if docno in seen:
                _problem(str(file), offset, f"duplicate DOCNO {docno}", strict, stats)
                continue
            seen.add(docno)
            parts = [_clean(body) for tag in text_tags for body in _tag_contents(record, tag)]
            stats.documents += 1
            yield TrecDocument(docno, " ".join(p for p in parts if p))


_TOPIC_BLOCK = re.compile(r"<top>(.*?)</top>", re.IGNORECASE | re.DOTALL)
_FIELD = re.compile(r"<(num|title|desc|narr)>", re.IGNORECASE)
_PREFIXES = {"num": "Number:", "title": "Topic:", "desc": "Description:", "narr": "Narrative:"}


def _topic_fields(block: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    marks = list(_FIELD.finditer(block))
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(block)
        name = m.group(1).lower()
        value = _WS.sub(" ", _TAG.sub(" ", block[m.end():end])).strip()
        prefix = _PREFIXES[name]
        if value.lower().startswith(prefix.lower()):
            value = value[len(prefix):].strip()
        fields[name] = value
    return fields


def parse_topics(path: str | os.PathLike) -> list[Topic]:
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    topics: list[Topic] = []
    numbers: set[int] = set()
    for i, m in enumerate(_TOPIC_BLOCK.finditer(text), start=1):
        fields = _topic_fields(m.group(1))
        where = f"topic block {i}"
        if "num" not in fields:
            raise TrecParseError(str(path), where, "missing <num>")
        try:
            number = int(fields["num"].split()[0])
        except (ValueError, IndexError):
            raise TrecParseError(str(path), where, f"bad topic number {fields['num']!r}") from None
        if number in numbers:
            raise TrecParseError(str(path), where, f"duplicate topic number {number}")
        if not fields.get("title"):
            raise TrecParseError(str(path), where, f"topic {number} has an empty title")
        numbers.add(number)
        topics.append(Topic(number, fields["title"], fields.get("desc", ""), fields.get("narr", "")))
    return topics


Qrels = dict[tuple[int, str], int]


def parse_qrels(path: str | os.PathLike) -> Qrels:
    """``topic iter docno rel`` lines; any positive grade counts as relevant."""
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 4:
                raise TrecParseError(str(path), f"line {lineno}", "expected 4 fields")
            try:
                topic, rel = int(fields[0]), int(fields[3])
            except ValueError:
                raise TrecParseError(str(path), f"line {lineno}", "topic and relevance must be integers") from None
            key = (topic, fields[2])
            if key in qrels:
                log.warning("%s:%d: duplicate judgment for %s, keeping the last", path, lineno, key)
            qrels[key] = 1 if rel > 0 else 0
    return qrels


def relevant_sets(qrels: Qrels) -> dict[int, set[str]]:
    out: dict[int, set[str]] = defaultdict(set)
    for (topic, docno), rel in qrels.items():
        out.setdefault(topic, set())
        if rel:
            out[topic].add(docno)
    return dict(out)


def format_run(results: Mapping[int, Sequence], run_tag: str) -> str:
    lines = []
    for topic in sorted(results):
        for hit in results[topic]:
            lines.append(f"{topic} Q0 {hit.docno} {hit.rank} {hit.score:.6f} {run_tag}\n")
    return "".join(lines)


def write_run(results: Mapping[int, Sequence], run_tag: str, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_run(results, run_tag))


@dataclass(frozen=True)
class RunEntry:
    topic: int
    docno: str
    rank: int
    score: float
    tag: str


def parse_run(path: str | os.PathLike) -> dict[int, list[RunEntry]]:
    """Read a run file; each topic's entries come back in rank order."""
    run: dict[int, list[RunEntry]] = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 6:
                raise TrecParseError(str(path), f"line {lineno}", "expected 6 fields")
            try:
                entry = RunEntry(int(fields[0]), fields[2], int(fields[3]), float(fields[4]), fields[5])
            except ValueError:
                raise TrecParseError(str(path), f"line {lineno}", "bad topic, rank or score") from None
            run[entry.topic].append(entry)
    for entries in run.values():
        entries.sort(key=lambda e: (e.rank, -e.score, e.docno))
    return dict(run)


def run_rankings(run: Mapping[int, Iterable[RunEntry]]) -> dict[int, list[str]]:
    return {topic: [e.docno for e in entries] for topic, entries in run.items()}
