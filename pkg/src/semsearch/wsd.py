"""Gloss-overlap (Lesk-style) word sense disambiguation.

When several senses share the top overlap score the word is not forced onto
one of them; the result carries the whole tied set plus its most specific
common hypernyms instead.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, Union

from .errors import ConfigError
from .text import Analyzer, Token
from .wordnet import Lexicon, Pos, SenseRef, SynsetId

DEFAULT_WINDOW = 10
DEFAULT_POS_ORDER = (Pos.NOUN, Pos.VERB, Pos.ADJ, Pos.ADV)


@dataclass(frozen=True)
class Unique:
    sense: SenseRef


@dataclass(frozen=True)
class Tied:
    senses: tuple[SenseRef, ...]
    msc: frozenset[SynsetId]


@dataclass(frozen=True)
class NotInWordNet:
    keyword_stem: str


DisambiguationResult = Union[Unique, Tied, NotInWordNet]


def parse_pos_order(text: str) -> tuple[Pos, ...]:
    return tuple(Pos.parse(p) for p in text.split(",") if p.strip())


def context_bag(tokens: Sequence[Token], target_position: int, window: int = DEFAULT_WINDOW) -> Counter:
    """Stems of up to ``window`` non-stop tokens on each side of the target.

    Compound stems are split into their parts so they overlap with gloss words.
    """
    if not 0 <= target_position < len(tokens):
        raise IndexError(f"target position {target_position} outside 0..{len(tokens) - 1}")
    if window < 0:
        raise ValueError("window must be non-negative")
    bag: Counter = Counter()
    for direction in (-1, 1):
        taken = 0
        i = target_position + direction
        while 0 <= i < len(tokens) and taken < window:
            token = tokens[i]
            if not token.is_stopword:
                bag.update(p for p in token.stem.split("_") if p)
                taken += 1
            i += direction
    return bag


def lesk_score(lexicon: Lexicon, sid: SynsetId, context: Counter, analyzer: Analyzer | None = None) -> int:
    bag = lexicon.sense_bag(sid, analyzer)
    return sum(min(n, bag[t]) for t, n in context.items() if t in bag)


def disambiguate(
    lexicon: Lexicon,
    form: str,
    pos: Pos,
    context: Counter,
    analyzer: Analyzer | None = None,
) -> DisambiguationResult:
    senses = lexicon.senses_of(form, pos)
    if not senses:
        stem = (analyzer.stem if analyzer else _default_stem)(form)
        return NotInWordNet(stem)
    if len(senses) == 1:
        return Unique(senses[0])
    scores = [lesk_score(lexicon, s.id, context, analyzer) for s in senses]
    best = max(scores)
    top = tuple(s for s, score in zip(senses, scores) if score == best)
    if len(top) == 1:
        return Unique(top[0])
    return Tied(top, lexicon.msc_hypernyms(s.id for s in top))


def _default_stem(word: str) -> str:
    from .text import default_analyzer

    return default_analyzer().stem(word)


@dataclass
class WordSenseTagger:
    """Finds the WordNet form of each token and disambiguates it in context.

    ``pos_order`` decides which part of speech a token is read as: the first
    one under which its surface form normalizes to a known lemma.
    """

    lexicon: Lexicon
    analyzer: Analyzer
    window: int = DEFAULT_WINDOW
    pos_order: tuple[Pos, ...] = DEFAULT_POS_ORDER
    _forms: dict = field(default_factory=dict, repr=False)

    def wordnet_form(self, token: Token) -> tuple[str, Pos] | None:
        key = token.lower
        if key not in self._forms:
            found = None
            if not token.is_stopword:
                for pos in self.pos_order:
                    form = self.lexicon.normalize_form(key, pos)
                    if form is not None:
                        found = (form, pos)
                        break
            self._forms[key] = found
        return self._forms[key]

    def tag(self, tokens: Sequence[Token], overrides: dict[int, SynsetId] | None = None) -> list[DisambiguationResult | None]:
        """One result per token; None for stop-words.

        ``overrides`` pins token positions to a synset (manual query annotation).
        """
        overrides = overrides or {}
        results: list[DisambiguationResult | None] = []
        for token in tokens:
            if token.is_stopword:
                results.append(None)
                continue
            pinned = overrides.get(token.position)
            found = self.wordnet_form(token)
            if pinned is not None:
                results.append(Unique(_pinned_sense(self.lexicon, token, pinned)))
            elif found is None:
                results.append(NotInWordNet(token.stem))
            else:
                form, pos = found
                ctx = context_bag(tokens, token.position, self.window)
                results.append(disambiguate(self.lexicon, form, pos, ctx, self.analyzer))
        return results


def _pinned_sense(lexicon: Lexicon, token: Token, sid: SynsetId) -> SenseRef:
    lexicon.synset(sid)
    form = lexicon.normalize_form(token.lower, sid.pos) or token.lower
    for ref in lexicon.senses_of(form, sid.pos):
        if ref.id == sid:
            return ref
    raise ConfigError(f"override {sid} is not a sense of {token.surface!r}")
