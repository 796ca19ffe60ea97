import importlib.util
import os
from pathlib import Path

import pytest

from semsearch.text import default_analyzer
from semsearch.wordnet import load_lexicon

FIXTURES = Path(__file__).parent / "fixtures"
MINILEX = FIXTURES / "minilex"


def full_wordnet_dir() -> Path | None:
    """A complete WordNet dict directory, if one is available locally.

    ``WORDNET_DICT`` wins; otherwise the copy bundled with ``wn==0.0.23``.
    """
    env = os.environ.get("WORDNET_DICT")
    if env:
        return Path(env) if Path(env, "data.noun").exists() else None
    spec = importlib.util.find_spec("wn")
    if spec is None or not spec.submodule_search_locations:
        return None
    for root in spec.submodule_search_locations:
        for candidate in sorted(Path(root, "data").glob("wordnet-*")):
            if (candidate / "data.noun").exists():
                return candidate
    return None


@pytest.fixture(scope="session")
def minilex():
    return load_lexicon(MINILEX)


@pytest.fixture(scope="session")
def analyzer():
    return default_analyzer()


@pytest.fixture(scope="session")
def wordnet():
    path = full_wordnet_dir()
    if path is None:
        pytest.skip("no full WordNet dict directory (set WORDNET_DICT or install wn==0.0.23)")
    # the 3.0 distribution has one verb hypernym cycle; 2.1 loads cleanly either way
    return load_lexicon(path, break_cycles=True)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: l.split("criterion ", 1)[-1]):
            terminalreporter.write_line(line)
