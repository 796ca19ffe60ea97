"""Tokenization, stop-word filtering and stemming.

WordNet compounds are joined greedily (longest match, up to four words)
before stemming when a lexicon is supplied.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

from nltk.stem.porter import PorterStemmer

MAX_COMPOUND = 4

_WORD_RE = re.compile(r"[^\W_]+")


def _read_wordlist(lines: Iterable[str]) -> frozenset[str]:
    words = (line.strip().lower() for line in lines)
    return frozenset(w for w in words if w and not w.startswith("#"))


def default_stopwords() -> frozenset[str]:
    text = resources.files("semsearch.data").joinpath("stopwords.txt").read_text("utf-8")
    return _read_wordlist(text.splitlines())


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    position: int
    is_stopword: bool

    @property
    def lower(self) -> str:
        return self.surface.lower()


class Analyzer:
    """Stop-word list plus Porter stemmer.

    Instances are immutable and hashable by identity, so they can key caches.
    """

    def __init__(self, stopwords: Iterable[str] | None = None):
        self.stopwords = default_stopwords() if stopwords is None else frozenset(
            w.lower() for w in stopwords
        )
        self._porter = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
        self.stem = lru_cache(maxsize=200_000)(self._stem)

    @classmethod
    def from_file(cls, path: str | Path) -> "Analyzer":
        with open(path, encoding="utf-8") as fh:
            return cls(_read_wordlist(fh))

    def _stem(self, word: str) -> str:
        # compounds keep their underscore joints: "apple_tree" -> "appl_tree"
        return "_".join(self._porter.stem(part) for part in word.split("_") if part)

    def is_stopword(self, word: str) -> bool:
        return word.lower() in self.stopwords

    def terms(self, text: str) -> list[str]:
        """Stems of the non-stop words in ``text``, no compound joining."""
        out = []
        for word in _WORD_RE.findall(text.lower()):
            if word not in self.stopwords:
                out.append(self.stem(word))
        return out

    def bag(self, text: str) -> Counter:
        return Counter(self.terms(text))

    def tokenize(self, text: str, lexicon=None) -> list[Token]:
        words = _WORD_RE.findall(text)
        tokens: list[Token] = []
        i = 0
        while i < len(words):
            span = 1
            if lexicon is not None:
                for n in range(min(MAX_COMPOUND, len(words) - i), 1, -1):
                    candidate = "_".join(words[i:i + n]).lower()
                    if lexicon.is_form(candidate):
                        span = n
                        break
            surface = "_".join(words[i:i + span])
            lower = surface.lower()
            stop = span == 1 and lower in self.stopwords
            tokens.append(Token(surface, lower if stop else self.stem(lower), len(tokens), stop))
            i += span
        return tokens


_default: Analyzer | None = None


def default_analyzer() -> Analyzer:
    global _default
    if _default is None:
        _default = Analyzer()
    return _default


def tokenize(text: str, lexicon=None, analyzer: Analyzer | None = None) -> list[Token]:
    return (analyzer or default_analyzer()).tokenize(text, lexicon)
