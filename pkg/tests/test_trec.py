import gzip

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from semsearch.errors import TrecParseError
from semsearch.index import ScoredHit
from semsearch.trec import (
    ParseStats,
    format_run,
    parse_qrels,
    parse_run,
    parse_topics,
    parse_trec_docs,
    relevant_sets,
    run_rankings,
    write_run,
)

TREC = FIXTURES / "trec"


def test_documents_keep_headline_and_text():
    docs = list(parse_trec_docs(TREC / "docs.sgml"))
    assert [d.docno for d in docs] == ["LA010189-0001", "LA010189-0002", "LA010189-0003"]
    assert docs[0].text == "Storm brings rainfall Heavy rainfall flooded the valley & the fields."
    assert "Staff" not in docs[2].text


def test_custom_text_tags():
    docs = list(parse_trec_docs(TREC / "docs.sgml", text_tags=("BYLINE",)))
    assert [d.text for d in docs] == ["", "", "Staff"]


def test_gzip_and_directory_input(tmp_path):
    raw = (TREC / "docs.sgml").read_bytes()
    (tmp_path / "a.gz").write_bytes(gzip.compress(raw.split(b"</DOC>", 1)[0] + b"</DOC>\n"))
    (tmp_path / "b").write_bytes(b"<DOC><DOCNO>X1</DOCNO><TEXT>hello</TEXT></DOC>")
    docs = list(parse_trec_docs(tmp_path))
    assert [d.docno for d in docs] == ["LA010189-0001", "X1"]


BROKEN = (b"<DOC><DOCNO>A</DOCNO><TEXT>one</TEXT></DOC>\n"
          b"<DOC><TEXT>no number</TEXT></DOC>\n"
          b"<DOC><DOCNO>A</DOCNO><TEXT>again</TEXT></DOC>\n"
          b"<DOC><DOCNO>B</DOCNO><TEXT>open\n"
          b"<DOC><DOCNO>C</DOCNO><TEXT>fine</TEXT></DOC>\n"
          b"</DOC>\n")


def test_lenient_mode_skips_and_counts(tmp_path):
    path = tmp_path / "bad.sgml"
    path.write_bytes(BROKEN)
    stats = ParseStats()
    docs = list(parse_trec_docs(path, stats=stats))
    assert [d.docno for d in docs] == ["A", "C"]
    assert stats.documents == 2
    assert stats.skipped == 4


def test_strict_mode_reports_byte_offset(tmp_path):
    path = tmp_path / "bad.sgml"
    path.write_bytes(BROKEN)
    with pytest.raises(TrecParseError) as info:
        list(parse_trec_docs(path, strict=True))
    assert info.value.location == f"byte {BROKEN.index(b'<DOC><TEXT>')}"


def test_topics():
    topics = parse_topics(TREC / "topics.txt")
    assert [(t.number, t.title) for t in topics] == [(401, "rainfall"), (402, "drive road")]
    assert topics[0].description == "Reports of heavy rain."
    assert topics[0].narrative.startswith("Any document")
    assert topics[1].narrative == ""


def test_topics_errors(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("<top><title> x </top>")
    with pytest.raises(TrecParseError, match="missing <num>"):
        parse_topics(path)
    path.write_text("<top><num> 1 <title> x </top><top><num> 1 <title> y </top>")
    with pytest.raises(TrecParseError, match="duplicate"):
        parse_topics(path)


def test_qrels():
    qrels = parse_qrels(TREC / "qrels.txt")
    assert qrels[(401, "LA010189-0002")] == 0
    assert relevant_sets(qrels) == {401: {"LA010189-0001"}, 402: {"LA010189-0003"}}


def test_qrels_grades_and_errors(tmp_path):
    path = tmp_path / "q"
    path.write_text("1 0 a 2\n1 0 b 1\n1 0 b 0\n2 0 c 0\n")
    assert relevant_sets(parse_qrels(path)) == {1: {"a"}, 2: set()}
    path.write_text("1 0 a\n")
    with pytest.raises(TrecParseError):
        parse_qrels(path)


def test_run_round_trip(tmp_path):
    results = {
        402: [ScoredHit("d9", 0.5, 1)],
        401: [ScoredHit("d2", 0.9, 1), ScoredHit("d1", 0.25, 2)],
    }
    text = format_run(results, "tag")
    assert text.splitlines()[0] == "401 Q0 d2 1 0.900000 tag"
    path = tmp_path / "run"
    write_run(results, "tag", path)
    parsed = parse_run(path)
    got = {(e.topic, e.docno, e.rank) for entries in parsed.values() for e in entries}
    assert got == {(t, h.docno, h.rank) for t, hits in results.items() for h in hits}
    assert run_rankings(parsed) == {401: ["d2", "d1"], 402: ["d9"]}


def test_minimal_record_and_empty_file(tmp_path):
    path = tmp_path / "one.sgml"
    path.write_text("<DOC><DOCNO> LA010189-0001 </DOCNO><TEXT>apple harvest</TEXT></DOC>")
    assert [(d.docno, d.text) for d in parse_trec_docs(path)] == [("LA010189-0001", "apple harvest")]
    empty = tmp_path / "empty.sgml"
    empty.write_text("")
    assert list(parse_trec_docs(empty)) == []


def test_entities_decoded(tmp_path):
    path = tmp_path / "e.sgml"
    path.write_text("<DOC><DOCNO>E</DOCNO><TEXT>a &lt;b&gt; &amp; c</TEXT></DOC>")
    assert next(parse_trec_docs(path)).text == "a <b> & c"


def test_write_run_examples(tmp_path):
    text = format_run({401: [ScoredHit("LA010189-0001", 0.73125, 1)]}, "DE_MscHyper")
    assert text == "401 Q0 LA010189-0001 1 0.731250 DE_MscHyper\n"
    path = tmp_path / "empty.run"
    write_run({}, "x", path)
    assert path.read_text() == ""


def test_empty_qrels(tmp_path):
    path = tmp_path / "q"
    path.write_text("")
    assert parse_qrels(path) == {}


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from(["<DOC>", "</DOC>", "<DOCNO>", "</DOCNO>", "<TEXT>", "</TEXT>",
                                 "<HEADLINE>", "x1", "y", "&amp;", "<", ">", "\n", "\xff"]), max_size=40))
def test_tag_soup_never_crashes(tmp_path_factory, parts):
    path = tmp_path_factory.mktemp("soup") / "s.sgml"
    path.write_bytes("".join(parts).encode("utf-8", errors="replace"))
    stats = ParseStats()
    docs = list(parse_trec_docs(path, stats=stats))
    assert len(docs) == stats.documents
    assert len({d.docno for d in docs}) == len(docs)
    try:
        list(parse_trec_docs(path, strict=True))
    except TrecParseError as exc:
        assert exc.location.startswith("byte ")
