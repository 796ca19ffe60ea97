"""WordNet database reader and hypernym-graph queries.

Reads the plain-text ``dict/`` layout (``data.*``, ``index.*``, ``*.exc``)
into an immutable :class:`Lexicon`.  Only hypernym (``@``, ``@i``) and
hyponym (``~``, ``~i``) pointers are kept; instance pointers are merged with
class pointers.
"""

from __future__ import annotations

import enum
import graphlib
import logging
import os
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    LexiconIntegrityError,
    LexiconLoadError,
    LexiconParseError,
    SynsetNotFoundError,
)

log = logging.getLogger(__name__)


class Pos(str, enum.Enum):
    NOUN = "n"
    VERB = "v"
    ADJ = "a"
    ADV = "r"

    @property
    def filename(self) -> str:
        return _FILE_SUFFIX[self]

    @classmethod
    def parse(cls, text: str) -> "Pos":
        """Accept a letter (``n``, ``v``, ``a``, ``s``, ``r``) or a word (``noun``...)."""
        key = text.strip().lower()
        if key == "s":
            return cls.ADJ
        for pos in cls:
            if key in (pos.value, pos.filename, pos.name.lower()):
                return pos
        raise ValueError(f"unknown part of speech: {text!r}")


_FILE_SUFFIX = {Pos.NOUN: "noun", Pos.VERB: "verb", Pos.ADJ: "adj", Pos.ADV: "adv"}

HYPERNYM_PTRS = frozenset({"@", "@i"})
HYPONYM_PTRS = frozenset({"~", "~i"})

# WordNet morphy detachment rules, tried in order
DETACHMENT_RULES = {
    Pos.NOUN: [("s", ""), ("ses", "s"), ("xes", "x"), ("zes", "z"), ("ches", "ch"),
               ("shes", "sh"), ("men", "man"), ("ies", "y")],
    Pos.VERB: [("s", ""), ("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"),
               ("ed", ""), ("ing", "e"), ("ing", "")],
    Pos.ADJ: [("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
    Pos.ADV: [],
}

_SYNTACTIC_MARKER = re.compile(r"\([a-z]+\)$")


@dataclass(frozen=True, order=True)
class SynsetId:
    offset: int
    pos: Pos

    def __str__(self) -> str:
        return f"#{self.offset:08d}-{self.pos.filename}"


@dataclass(frozen=True)
class Synset:
    id: SynsetId
    lemmas: tuple[str, ...]
    gloss: str
    hypernyms: frozenset[SynsetId]
    hyponyms: frozenset[SynsetId]


@dataclass(frozen=True)
class SenseRef:
    form: str
    id: SynsetId
    sense_number: int


def _normal(word: str) -> str:
    return word.strip().lower().replace(" ", "_")


class Lexicon:
    """Immutable sense graph.  All query methods are read-only."""

    def __init__(self, synsets, sense_index, morph_exceptions, source: str = ""):
        self.synsets: dict[SynsetId, Synset] = synsets
        self.sense_index: dict[tuple[str, Pos], tuple[SynsetId, ...]] = sense_index
        self.morph_exceptions: dict[tuple[str, Pos], tuple[str, ...]] = morph_exceptions
        self.source = source
        self._forms = frozenset(form for form, _ in sense_index)
        self._closures: dict[SynsetId, frozenset[SynsetId]] = {}
        self._bags: dict[tuple[SynsetId, int], Counter] = {}

    def __len__(self) -> int:
        return len(self.synsets)

    def __contains__(self, sid) -> bool:
        return sid in self.synsets

    def __repr__(self) -> str:
        return f"<Lexicon {len(self.synsets)} synsets from {self.source or '?'}>"

    def synset(self, sid: SynsetId) -> Synset:
        try:
            return self.synsets[sid]
        except KeyError:
            raise SynsetNotFoundError(sid) from None

    def is_form(self, word: str) -> bool:
        """True when ``word`` normalizes to a known form under some part of speech."""
        word = _normal(word)
        if word in self._forms:
            return True
        return any(self.normalize_form(word, pos) for pos in Pos)

    def normalize_form(self, surface: str, pos: Pos) -> str | None:
        word = _normal(surface)
        if not word:
            return None
        if (word, pos) in self.sense_index:
            return word
        for base in self.morph_exceptions.get((word, pos), ()):
            if (base, pos) in self.sense_index:
                return base
        for suffix, ending in DETACHMENT_RULES[pos]:
            if word.endswith(suffix) and len(word) > len(suffix):
                base = word[: len(word) - len(suffix)] + ending
                if (base, pos) in self.sense_index:
                    return base
        return None

    def senses_of(self, form: str, pos: Pos) -> list[SenseRef]:
        ids = self.sense_index.get((_normal(form), pos), ())
        return [SenseRef(_normal(form), sid, n) for n, sid in enumerate(ids, start=1)]

    def sense(self, form: str, pos: Pos, number: int) -> SenseRef:
        senses = self.senses_of(form, pos)
        if not 1 <= number <= len(senses):
            raise SynsetNotFoundError(f"{form}_{number} ({pos.filename})")
        return senses[number - 1]

    def hypernym_closure(self, sid: SynsetId, max_depth: int | None = None) -> frozenset[SynsetId]:
        """Strict transitive hypernyms of ``sid``, optionally limited to ``max_depth`` edges."""
        if max_depth is None:
            cached = self._closures.get(sid)
            if cached is not None:
                return cached
        synset = self.synset(sid)
        if max_depth is not None:
            seen: set[SynsetId] = set()
            frontier = set(synset.hypernyms)
            for _ in range(max_depth):
                frontier -= seen
                if not frontier:
                    break
                seen |= frontier
                frontier = {h for f in frontier for h in self.synsets[f].hypernyms}
            return frozenset(seen)
        result: set[SynsetId] = set()
        for parent in synset.hypernyms:
            result.add(parent)
            result |= self.hypernym_closure(parent)
        closure = frozenset(result)
        self._closures[sid] = closure
        return closure

    def hyponym_closure(self, sid: SynsetId, max_depth: int | None = None) -> frozenset[SynsetId]:
        seen: set[SynsetId] = set()
        frontier = set(self.synset(sid).hyponyms)
        depth = 0
        while frontier and (max_depth is None or depth < max_depth):
            frontier -= seen
            seen |= frontier
            frontier = {h for f in frontier for h in self.synsets[f].hyponyms}
            depth += 1
        return frozenset(seen)

    def msc_hypernyms(self, senses: Iterable[SynsetId]) -> frozenset[SynsetId]:
        """Most specific common hypernyms of a sense set.

        The minimal elements of the intersection of the strict closures.  Can be
        empty (no shared ancestor) or hold several incomparable synsets.
        """
        senses = list(senses)
        if not senses:
            raise ValueError("msc_hypernyms needs at least one sense")
        if len({s.pos for s in senses}) > 1:
            raise ValueError("msc_hypernyms needs senses of a single part of speech")
        common: set[SynsetId] | None = None
        for sid in senses:
            closure = self.hypernym_closure(sid)
            common = set(closure) if common is None else common & closure
            if not common:
                return frozenset()
        assert common is not None
        covered: set[SynsetId] = set()
        for h in common:
            covered |= self.hypernym_closure(h)
        return frozenset(common - covered)

    def sense_bag(self, sid: SynsetId, analyzer=None) -> Counter:
        """Stemmed gloss and lemma words of a synset and its direct neighbours."""
        from .text import default_analyzer

        analyzer = analyzer or default_analyzer()
        key = (sid, id(analyzer))
        bag = self._bags.get(key)
        if bag is None:
            synset = self.synset(sid)
            bag = Counter()
            for member in (synset, *(self.synsets[h] for h in sorted(synset.hypernyms | synset.hyponyms))):
                bag.update(analyzer.terms(member.gloss))
                for lemma in member.lemmas:
                    bag.update(analyzer.terms(lemma.replace("_", " ")))
            self._bags[key] = bag
        return bag

    def forms(self, sid: SynsetId) -> tuple[str, ...]:
        return self.synset(sid).lemmas

    def check_dag(self, pos: Pos | None = None) -> None:
        """Topologically sort the hypernym graph of one or every part of speech."""
        for p in [pos] if pos else list(Pos):
            graph = {sid: s.hypernyms for sid, s in self.synsets.items() if sid.pos is p}
            cycle = _find_cycle(graph)
            if cycle:
                raise LexiconIntegrityError(cycle)


def _find_cycle(graph) -> list | None:
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        return exc.args[1]
    return None


def _break_cycles(hypernyms: dict, hyponyms: dict) -> None:
    while cycle := _find_cycle(hypernyms):
        parent, child = cycle[0], cycle[1]
        log.warning("dropping hypernym edge %s -> %s to break cycle %s",
                    child, parent, " -> ".join(map(str, cycle)))
        hypernyms[child].discard(parent)
        hyponyms[parent].discard(child)


def _iter_records(path: Path) -> Iterator[tuple[int, str]]:
    """Yield ``(byte_offset, line)`` for each non-license line of a WordNet file.

    Offsets are counted as if line ends were a single ``\\n`` so that copies
    converted to CRLF still match the offsets recorded inside the records.
    """
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            start = offset
            offset += len(raw) - (1 if raw.endswith(b"\r\n") else 0)
            if raw.startswith(b"  ") or not raw.strip():
                continue
            yield start, raw.decode("utf-8", errors="replace").rstrip("\r\n")


def _require(dict_dir: Path, name: str) -> Path:
    path = dict_dir / name
    if not path.is_file():
        raise LexiconLoadError(f"missing WordNet file: {path}")
    return path


def _parse_data_file(path: Path, pos: Pos, raw: dict) -> None:
    for start, line in _iter_records(path):
        head, bar, gloss = line.partition("|")
        fields = head.split()
        try:
            offset = int(fields[0])
            if offset != start:
                raise ValueError(f"record offset {offset} does not match its position")
            w_cnt = int(fields[3], 16)
            words = fields[4:4 + 2 * w_cnt:2]
            if len(words) != w_cnt or w_cnt == 0:
                raise ValueError("word count mismatch")
            i = 4 + 2 * w_cnt
            p_cnt = int(fields[i])
            ptr_fields = fields[i + 1:i + 1 + 4 * p_cnt]
            if len(ptr_fields) != 4 * p_cnt:
                raise ValueError("pointer count mismatch")
            hypers, hypos = set(), set()
            for j in range(0, len(ptr_fields), 4):
                symbol, target, target_pos = ptr_fields[j:j + 3]
                if symbol in HYPERNYM_PTRS:
                    hypers.add(SynsetId(int(target), Pos.parse(target_pos)))
                elif symbol in HYPONYM_PTRS:
                    hypos.add(SynsetId(int(target), Pos.parse(target_pos)))
        except (IndexError, ValueError) as exc:
            raise LexiconParseError(path.name, start, f"malformed record ({exc})") from None
        if not bar:
            raise LexiconParseError(path.name, start, "missing gloss separator")
        lemmas = tuple(_SYNTACTIC_MARKER.sub("", w).lower() for w in words)
        raw[SynsetId(offset, pos)] = (lemmas, gloss.strip(), hypers, hypos, path.name, start)


def _parse_index_file(path: Path, pos: Pos, known, sense_index: dict) -> None:
    for start, line in _iter_records(path):
        fields = line.split()
        try:
            lemma = fields[0].lower()
            synset_cnt = int(fields[2])
            p_cnt = int(fields[3])
            offsets = fields[4 + p_cnt + 2:]
            if len(offsets) != synset_cnt:
                raise ValueError(f"expected {synset_cnt} synset offsets, found {len(offsets)}")
            ids = tuple(SynsetId(int(o), pos) for o in offsets)
        except (IndexError, ValueError) as exc:
            raise LexiconParseError(path.name, start, f"malformed index line ({exc})") from None
        for sid in ids:
            if sid not in known:
                raise LexiconParseError(path.name, start, f"unknown synset offset {sid.offset}")
        sense_index[(lemma, pos)] = ids


def _parse_exceptions(path: Path, pos: Pos, morph: dict) -> None:
    for _, line in _iter_records(path):
        fields = line.split()
        if len(fields) >= 2:
            morph[(fields[0].lower(), pos)] = tuple(f.lower() for f in fields[1:])


def load_lexicon(dict_dir: str | os.PathLike, break_cycles: bool = False) -> Lexicon:
    """Parse a WordNet ``dict/`` directory.

    A hypernym cycle raises :class:`LexiconIntegrityError` unless
    ``break_cycles`` is set, in which case one edge per cycle is dropped and a
    warning logged (WordNet 3.0 ships one such cycle among its verbs).
    """
    dict_dir = Path(dict_dir)
    if not dict_dir.is_dir():
        raise LexiconLoadError(f"WordNet dict directory not found: {dict_dir}")
    paths = {}
    for pos in Pos:
        paths[pos] = (
            _require(dict_dir, f"data.{pos.filename}"),
            _require(dict_dir, f"index.{pos.filename}"),
            _require(dict_dir, f"{pos.filename}.exc"),
        )

    raw: dict[SynsetId, tuple] = {}
    for pos in Pos:
        _parse_data_file(paths[pos][0], pos, raw)

    hypernyms = {sid: set(rec[2]) for sid, rec in raw.items()}
    hyponyms = {sid: set(rec[3]) for sid, rec in raw.items()}
    for sid, rec in raw.items():
        for target in rec[2] | rec[3]:
            if target not in raw:
                raise LexiconParseError(rec[4], rec[5], f"pointer to unknown synset {target}")
    # make the two pointer directions exact inverses of each other
    for sid in raw:
        for h in hypernyms[sid]:
            hyponyms[h].add(sid)
        for h in hyponyms[sid]:
            hypernyms[h].add(sid)
    if break_cycles:
        _break_cycles(hypernyms, hyponyms)
    else:
        cycle = _find_cycle(hypernyms)
        if cycle:
            raise LexiconIntegrityError(cycle)

    synsets = {
        sid: Synset(sid, rec[0], rec[1], frozenset(hypernyms[sid]), frozenset(hyponyms[sid]))
        for sid, rec in raw.items()
    }

    sense_index: dict = {}
    morph: dict = {}
    for pos in Pos:
        _parse_index_file(paths[pos][1], pos, synsets, sense_index)
        _parse_exceptions(paths[pos][2], pos, morph)

    lexicon = Lexicon(synsets, sense_index, morph, source=str(dict_dir))
    log.info("loaded %d synsets, %d index entries from %s", len(synsets), len(sense_index), dict_dir)
    return lexicon


def resolve_dict_dir(explicit: str | os.PathLike | None = None) -> Path | None:
    """Explicit path, else ``$WORDNET_DICT``; None when neither is set."""
    if explicit:
        return Path(explicit)
    env = os.environ.get("WORDNET_DICT")
    return Path(env) if env else None
