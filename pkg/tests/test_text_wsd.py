from collections import Counter

import pytest

from hypothesis import given, settings, strategies as st

from semsearch.errors import ConfigError
from semsearch.text import Analyzer, default_stopwords, tokenize
from semsearch.wordnet import Pos
from semsearch.wsd import (
    NotInWordNet,
    Tied,
    Unique,
    WordSenseTagger,
    context_bag,
    disambiguate,
    lesk_score,
    parse_pos_order,
)


def test_bundled_stopwords():
    words = default_stopwords()
    assert {"the", "of", "and", "a"} <= words
    assert "apple" not in words


def test_porter_original_algorithm(analyzer):
    assert analyzer.stem("apples") == "appl"
    assert analyzer.stem("generalization") == "gener"
    assert analyzer.stem("apple_tree") == "appl_tree"


def test_tokenize_marks_stopwords_and_positions(analyzer):
    tokens = tokenize("The apples, of course!", analyzer=analyzer)
    assert [t.surface for t in tokens] == ["The", "apples", "of", "course"]
    assert [t.position for t in tokens] == [0, 1, 2, 3]
    assert [t.is_stopword for t in tokens] == [True, False, True, False]
    assert tokens[0].stem == "the"


def test_compounds_joined_greedily(minilex, analyzer):
    tokens = analyzer.tokenize("an Apple Tree and a road trip", minilex)
    assert [t.surface for t in tokens] == ["an", "Apple_Tree", "and", "a", "road_trip"]
    assert tokens[1].stem == "appl_tree"
    # without a lexicon nothing is joined
    assert len(analyzer.tokenize("apple tree")) == 2


def test_custom_stopwords(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("# comment\nApple\n\n")
    a = Analyzer.from_file(path)
    assert a.is_stopword("apple")
    assert not a.is_stopword("the")
    assert a.terms("the apple pie") == ["the", "pie"]


def test_context_window_counts_non_stop_tokens(analyzer):
    tokens = analyzer.tokenize("red and the green fruit of a tall tree")
    target = 4  # fruit
    assert context_bag(tokens, target, window=1) == Counter({"green": 1, "tall": 1})
    assert context_bag(tokens, target, window=2) == Counter({"red": 1, "green": 1, "tall": 1, "tree": 1})
    assert context_bag(tokens, target, window=0) == Counter()
    with pytest.raises(IndexError):
        context_bag(tokens, 99)


def test_context_splits_compounds(minilex, analyzer):
    tokens = analyzer.tokenize("a road trip drive", minilex)
    assert context_bag(tokens, 2) == Counter({"road": 1, "trip": 1})


def test_lesk_picks_weather_sense(minilex, analyzer):
    ctx = analyzer.bag("rain falling from the clouds")
    result = disambiguate(minilex, "rain", Pos.NOUN, ctx, analyzer)
    assert isinstance(result, Unique)
    assert result.sense.sense_number == 1


def test_lesk_picks_volley_sense(minilex, analyzer):
    ctx = analyzer.bag("bullets and blows")
    result = disambiguate(minilex, "rain", Pos.NOUN, ctx, analyzer)
    assert isinstance(result, Unique) and result.sense.sense_number == 2


def test_overlap_is_multiset_minimum(minilex, analyzer):
    rain = minilex.sense("rain", Pos.NOUN, 1).id
    bag = minilex.sense_bag(rain, analyzer)
    assert lesk_score(minilex, rain, Counter({"cloud": 5}), analyzer) == min(5, bag["cloud"])


def test_tie_carries_msc(minilex, analyzer):
    result = disambiguate(minilex, "drive", Pos.NOUN, analyzer.bag("road"), analyzer)
    assert isinstance(result, Tied)
    assert [s.sense_number for s in result.senses] == [2, 3]
    assert {minilex.forms(m)[0] for m in result.msc} == {"journey"}


def test_empty_context_ties_all_senses(minilex, analyzer):
    result = disambiguate(minilex, "drive", Pos.NOUN, Counter(), analyzer)
    assert isinstance(result, Tied) and len(result.senses) == 3


def test_single_sense_is_unique_and_unknown_word(minilex, analyzer):
    assert isinstance(disambiguate(minilex, "gala", Pos.NOUN, Counter(), analyzer), Unique)
    assert disambiguate(minilex, "zebras", Pos.NOUN, Counter(), analyzer) == NotInWordNet("zebra")


def test_tagger_results_align_with_tokens(minilex, analyzer):
    tagger = WordSenseTagger(minilex, analyzer)
    tokens = analyzer.tokenize("the zebra ate an apple", minilex)
    results = tagger.tag(tokens)
    assert results[0] is None and results[3] is None
    assert isinstance(results[1], NotInWordNet)
    assert results[4] is not None and not isinstance(results[4], NotInWordNet)


def test_pos_order_decides_reading(minilex, analyzer):
    token = analyzer.tokenize("harvest")[0]
    assert WordSenseTagger(minilex, analyzer).wordnet_form(token) == ("harvest", Pos.VERB)
    assert parse_pos_order("v,n") == (Pos.VERB, Pos.NOUN)


def test_override_pins_sense(minilex, analyzer):
    tagger = WordSenseTagger(minilex, analyzer)
    tokens = analyzer.tokenize("rain of bullets", minilex)
    water = minilex.sense("rain", Pos.NOUN, 1).id
    result = tagger.tag(tokens, {0: water})[0]
    assert result == Unique(minilex.sense("rain", Pos.NOUN, 1))
    with pytest.raises(ConfigError):
        tagger.tag(tokens, {0: minilex.sense("apple", Pos.NOUN, 1).id})


def test_apple_context_tree_picks_tree_sense(minilex, analyzer):
    result = disambiguate(minilex, "apple", Pos.NOUN, Counter({"tree": 1}), analyzer)
    assert result == Unique(minilex.sense("apple", Pos.NOUN, 2))


CONTEXT_WORDS = ["road", "car", "trip", "urge", "act", "cloud", "bullet", "water", "sky", "long",
                 "fruit", "tree", "countrysid", "motiv", "blow"]
contexts = st.dictionaries(st.sampled_from(CONTEXT_WORDS), st.integers(1, 3), max_size=6).map(Counter)
ambiguous = st.sampled_from(["drive", "rain", "apple"])


def _scores(minilex, analyzer, form, ctx):
    return {s.id: lesk_score(minilex, s.id, ctx, analyzer) for s in minilex.senses_of(form, Pos.NOUN)}


@settings(max_examples=100, deadline=None)
@given(ambiguous, contexts)
def test_tie_and_unique_soundness(minilex, analyzer, form, ctx):
    result = disambiguate(minilex, form, Pos.NOUN, ctx, analyzer)
    scores = _scores(minilex, analyzer, form, ctx)
    best = max(scores.values())
    if isinstance(result, Unique):
        others = [v for k, v in scores.items() if k != result.sense.id]
        assert scores[result.sense.id] == best and all(v < best for v in others)
    else:
        members = {s.id for s in result.senses}
        assert len(members) >= 2
        assert all(scores[m] == best for m in members)
        assert all(v < best for k, v in scores.items() if k not in members)
        assert result.msc == minilex.msc_hypernyms(members)
    assert disambiguate(minilex, form, Pos.NOUN, ctx, analyzer) == result


@settings(max_examples=50, deadline=None)
@given(ambiguous, contexts, st.randoms(use_true_random=False))
def test_result_independent_of_sense_order(minilex, analyzer, form, ctx, rnd):
    expected = disambiguate(minilex, form, Pos.NOUN, ctx, analyzer)
    original = minilex.senses_of

    def shuffled(f, pos):
        senses = original(f, pos)
        rnd.shuffle(senses)
        return senses

    minilex.senses_of = shuffled
    try:
        got = disambiguate(minilex, form, Pos.NOUN, ctx, analyzer)
    finally:
        del minilex.senses_of
    if isinstance(expected, Unique):
        assert got == expected
    else:
        assert {s.id for s in got.senses} == {s.id for s in expected.senses}
        assert got.msc == expected.msc


@settings(max_examples=60, deadline=None)
@given(ambiguous, contexts)
def test_context_monotonicity(minilex, analyzer, form, ctx):
    senses = minilex.senses_of(form, Pos.NOUN)
    bags = {s.id: minilex.sense_bag(s.id, analyzer) for s in senses}
    for s in senses:
        own = [t for t in bags[s.id] if all(t not in bags[o.id] for o in senses if o.id != s.id)]
        for t in own:
            more = ctx + Counter({t: 1})
            assert lesk_score(minilex, s.id, more, analyzer) >= lesk_score(minilex, s.id, ctx, analyzer)
