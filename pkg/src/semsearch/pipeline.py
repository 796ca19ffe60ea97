"""Query annotation and document expansion under the seven search models.

Every model turns text into a :class:`TermBag` keyed by canonical term
strings.  Three kinds of generalized term share one index:

* ``k:<stem>`` - plain keyword (or the stem of a WordNet form),
* ``s:<offset><pos>`` - a WordNet sense,
* ``p:<form>|<offset><pos>`` - a word form paired with a (common) hypernym.

The namespaces never collide, which is what lets a sense match stay precise
even when two senses share a spelling.
"""

from __future__ import annotations

import enum
import logging
import multiprocessing
import os
import re
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import ConfigError
from .text import Analyzer, default_analyzer
from .wordnet import Lexicon, Pos, SynsetId
from .wsd import DEFAULT_POS_ORDER, DEFAULT_WINDOW, NotInWordNet, Tied, Unique, WordSenseTagger

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Keyword:
    stem: str


@dataclass(frozen=True)
class Sense:
    id: SynsetId


@dataclass(frozen=True)
class Pair:
    form: str
    id: SynsetId


GeneralizedTerm = Union[Keyword, Sense, Pair]

_SENSE_RE = re.compile(r"^(\d{8})([nvar])$")


def canonical_key(term: GeneralizedTerm) -> str:
    if isinstance(term, Keyword):
        return f"k:{term.stem}"
    if isinstance(term, Sense):
        return f"s:{term.id.offset:08d}{term.id.pos.value}"
    if isinstance(term, Pair):
        return f"p:{term.form}|{term.id.offset:08d}{term.id.pos.value}"
    raise TypeError(f"not a generalized term: {term!r}")


def _decode_sid(text: str, key: str) -> SynsetId:
    m = _SENSE_RE.match(text)
    if not m:
        raise ValueError(f"bad synset reference in key {key!r}")
    return SynsetId(int(m.group(1)), Pos(m.group(2)))


def decode_key(key: str) -> GeneralizedTerm:
    kind, sep, body = key.partition(":")
    if not sep:
        raise ValueError(f"not a canonical key: {key!r}")
    if kind == "k":
        return Keyword(body)
    if kind == "s":
        return Sense(_decode_sid(body, key))
    if kind == "p":
        form, bar, ref = body.rpartition("|")
        if not bar:
            raise ValueError(f"pair key without '|': {key!r}")
        return Pair(form, _decode_sid(ref, key))
    raise ValueError(f"unknown key namespace in {key!r}")


class StrategyName(str, enum.Enum):
    LEXICAL = "Lexical"
    QE_SYN = "QE_Syn"
    QE_SYN_HYPO = "QE_Syn_Hypo"
    DE_SYN = "DE_Syn"
    DE_SYN_HYPER = "DE_Syn_Hyper"
    DE_ID_HYPER = "DE_Id_Hyper"
    DE_MSC_HYPER = "DE_MscHyper"


STRATEGY_NAMES = tuple(s.value for s in StrategyName)

# models whose document side needs a lexicon
_DOC_EXPANDING = {StrategyName.DE_SYN, StrategyName.DE_SYN_HYPER, StrategyName.DE_ID_HYPER,
                  StrategyName.DE_MSC_HYPER}
_QUERY_TAGGING = {StrategyName.QE_SYN, StrategyName.QE_SYN_HYPO, StrategyName.DE_ID_HYPER,
                  StrategyName.DE_MSC_HYPER}


@dataclass(frozen=True)
class Strategy:
    name: StrategyName
    hypernym_depth: int | None = None
    hyponym_depth: int | None = 1

    @classmethod
    def parse(cls, name: str, hypernym_depth: int | None = None, hyponym_depth: int | None = 1) -> "Strategy":
        try:
            sname = StrategyName(name)
        except ValueError:
            raise ConfigError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGY_NAMES)}") from None
        for label, depth in (("hypernym", hypernym_depth), ("hyponym", hyponym_depth)):
            if depth is not None and depth < 1:
                raise ConfigError(f"{label} depth must be positive or unlimited")
        return cls(sname, hypernym_depth, hyponym_depth)

    @property
    def needs_lexicon(self) -> bool:
        return self.name is not StrategyName.LEXICAL


@dataclass
class TermBag:
    counts: Counter = field(default_factory=Counter)
    source_length: int = 0

    def add(self, term: GeneralizedTerm, n: int = 1) -> None:
        self.counts[canonical_key(term)] += n

    def keys(self):
        return self.counts.keys()

    def __contains__(self, term) -> bool:
        key = term if isinstance(term, str) else canonical_key(term)
        return key in self.counts

    def __len__(self) -> int:
        return len(self.counts)


class Annotator:
    """Turns query and document text into term bags for one strategy."""

    def __init__(
        self,
        strategy: Strategy,
        lexicon: Lexicon | None = None,
        analyzer: Analyzer | None = None,
        window: int = DEFAULT_WINDOW,
        pos_order: tuple[Pos, ...] = DEFAULT_POS_ORDER,
    ):
        if strategy.needs_lexicon and lexicon is None:
            raise ConfigError(f"strategy {strategy.name.value} needs a WordNet lexicon")
        self.strategy = strategy
        self.lexicon = lexicon
        self.analyzer = analyzer or default_analyzer()
        self.tagger = WordSenseTagger(lexicon, self.analyzer, window, pos_order) if lexicon else None

    def _stem_form(self, form: str) -> str:
        return self.analyzer.stem("_".join(re.findall(r"[^\W_]+", form.lower())))

    def _form_keywords(self, sid: SynsetId, skip: str | None = None) -> list[Keyword]:
        return [Keyword(self._stem_form(f)) for f in self.lexicon.forms(sid) if f != skip]

    def _hypernyms(self, sid: SynsetId):
        return sorted(self.lexicon.hypernym_closure(sid, self.strategy.hypernym_depth))

    def annotate_query(self, text: str, overrides: dict[int, SynsetId] | None = None) -> TermBag:
        name = self.strategy.name
        tokens = self.analyzer.tokenize(text, self.lexicon)
        if name in _QUERY_TAGGING:
            results = self.tagger.tag(tokens, overrides)
        else:
            results = [None] * len(tokens)
        bag = TermBag()
        for token, result in zip(tokens, results):
            if token.is_stopword:
                continue
            bag.source_length += 1
            bag.add(Keyword(token.stem))
            if isinstance(result, NotInWordNet) or result is None:
                continue
            if name in (StrategyName.QE_SYN, StrategyName.QE_SYN_HYPO):
                if isinstance(result, Unique):
                    s = result.sense
                    for kw in self._form_keywords(s.id, skip=s.form):
                        bag.add(kw)
                    if name is StrategyName.QE_SYN_HYPO:
                        for h in sorted(self.lexicon.hyponym_closure(s.id, self.strategy.hyponym_depth)):
                            for kw in self._form_keywords(h):
                                bag.add(kw)
            elif name is StrategyName.DE_ID_HYPER:
                sense = result.sense if isinstance(result, Unique) else result.senses[0]
                bag.add(Sense(sense.id))
            elif name is StrategyName.DE_MSC_HYPER:
                if isinstance(result, Unique):
                    bag.add(Sense(result.sense.id))
                else:
                    form = result.senses[0].form
                    for m in sorted(result.msc):
                        bag.add(Pair(form, m))
        return bag

    def expand_document(self, text: str) -> TermBag:
        name = self.strategy.name
        tokens = self.analyzer.tokenize(text, self.lexicon)
        results = self.tagger.tag(tokens) if name in _DOC_EXPANDING else [None] * len(tokens)
        bag = TermBag()
        for token, result in zip(tokens, results):
            if token.is_stopword:
                continue
            bag.source_length += 1
            if result is None or isinstance(result, NotInWordNet):
                bag.add(Keyword(token.stem))
                continue
            if name is StrategyName.DE_MSC_HYPER:
                self._expand_msc(bag, token, result)
                continue
            # the other document models fall back to the first-ranked tied sense
            sense = result.sense if isinstance(result, Unique) else result.senses[0]
            if name is StrategyName.DE_ID_HYPER:
                bag.add(Sense(sense.id))
            else:
                bag.add(Keyword(token.stem))
                for kw in self._form_keywords(sense.id, skip=sense.form):
                    bag.add(kw)
            if name in (StrategyName.DE_SYN_HYPER, StrategyName.DE_ID_HYPER):
                for h in self._hypernyms(sense.id):
                    for kw in self._form_keywords(h):
                        bag.add(kw)
        return bag

    def _expand_msc(self, bag: TermBag, token, result) -> None:
        bag.add(Keyword(token.stem))
        if isinstance(result, Unique):
            s = result.sense
            forms = self.lexicon.forms(s.id)
            bag.add(Sense(s.id))
            for kw in self._form_keywords(s.id, skip=s.form):
                bag.add(kw)
            for h in self._hypernyms(s.id):
                bag.add(Sense(h))
                for kw in self._form_keywords(h):
                    bag.add(kw)
                for f in forms:
                    bag.add(Pair(f, h))
            return
        form = result.senses[0].form
        above: set[SynsetId] = set()
        for m in sorted(result.msc):
            bag.add(Pair(form, m))
            bag.add(Sense(m))
            for kw in self._form_keywords(m):
                bag.add(kw)
            above.update(self._hypernyms(m))
        for h in sorted(above):
            bag.add(Sense(h))
            for kw in self._form_keywords(h):
                bag.add(kw)
            bag.add(Pair(form, h))


def annotate_query(lexicon, strategy: Strategy | str, query_text: str, overrides=None, **kwargs) -> TermBag:
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    return Annotator(strategy, lexicon, **kwargs).annotate_query(query_text, overrides)


def expand_document(lexicon, strategy: Strategy | str, doc_text: str, **kwargs) -> TermBag:
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    return Annotator(strategy, lexicon, **kwargs).expand_document(doc_text)


def load_overrides(path) -> dict[int, dict[int, SynsetId]]:
    """Read ``query_id<TAB>token_index<TAB>offset<TAB>pos_letter`` lines."""
    out: dict[int, dict[int, SynsetId]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            try:
                if len(fields) != 4:
                    raise ValueError("expected 4 tab-separated fields")
                qid, position, offset = int(fields[0]), int(fields[1]), int(fields[2])
                sid = SynsetId(offset, Pos.parse(fields[3]))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad override line ({exc})") from None
            out.setdefault(qid, {})[position] = sid
    return out


_worker_annotator: Annotator | None = None


def _expand_chunk(items: list[tuple[str, str]]) -> list[tuple[str, TermBag]]:
    return [(docno, _worker_annotator.expand_document(text)) for docno, text in items]


def _chunks(docs: Iterable[tuple[str, str]], size: int) -> Iterator[list[tuple[str, str]]]:
    chunk = []
    for item in docs:
        chunk.append(item)
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def expand_documents(
    annotator: Annotator,
    docs: Iterable[tuple[str, str]],
    workers: int | None = None,
    chunk_size: int = 256,
) -> Iterator[tuple[str, TermBag]]:
    """Expand ``(docno, text)`` pairs, preserving input order.

    With ``workers > 1`` the work is spread over forked processes that inherit
    the lexicon; results are still yielded in input order.
    """
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or "fork" not in multiprocessing.get_all_start_methods():
        for docno, text in docs:
            yield docno, annotator.expand_document(text)
        return
    global _worker_annotator
    _worker_annotator = annotator
    ctx = multiprocessing.get_context("fork")
    pending: deque = deque()
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        for chunk in _chunks(docs, chunk_size):
            pending.append(pool.submit(_expand_chunk, chunk))
            # bounded look-ahead keeps memory flat on large collections
            if len(pending) >= 4 * workers:
                yield from pending.popleft().result()
        while pending:
            yield from pending.popleft().result()
