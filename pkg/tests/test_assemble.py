import json
import logging

import numpy as np
import pytest

from reviewgen.assemble import (
    ReviewEntry,
    assemble_review,
    parse_entries,
    render,
)
from reviewgen.corpus import CorpusIndex, PaperRecord
from reviewgen.graph import TopicPartition


def make_index():
    papers = {
        "10": PaperRecord(
            pmid="10",
            title="First paper",
            body_sentences=["Low scorer here.", "Top pick [[CIT:99]].", "Middle one."],
            year=2019,
            doi="10.1/abc",
        ),
        "11": PaperRecord(
            pmid="11",
            title="Second paper",
            body_sentences=["Only sentence."],
            cited_pmids=["10"],
        ),
        "12": PaperRecord(pmid="12", title="Empty paper", cited_pmids=["10"]),
    }
    return CorpusIndex(papers)


SCORES = {
    "10": [0.1, 0.9, 0.3],
    "11": [0.5],
    "12": [],
}


class TestAssembleReview:
    def test_argmax_selection(self):
        entries = assemble_review(make_index(), ["10"], SCORES)
        assert len(entries) == 1
        e = entries[0]
        assert e.sentence_index == 1
        assert e.best_sentence == "Top pick."  # marker stripped
        assert e.score == 0.9
        assert e.title == "First paper"
        assert e.year == 2019
        assert e.doi == "10.1/abc"
        assert e.citations == 2  # cited by 11 and 12
        assert e.topic == -1

    def test_tie_goes_to_earlier_sentence(self):
        index = make_index()
        entries = assemble_review(index, ["10"], {"10": [0.5, 0.2, 0.5]})
        assert entries[0].sentence_index == 0

    def test_entry_order_follows_key_papers(self):
        entries = assemble_review(make_index(), ["11", "10"], SCORES)
        assert [e.pmid for e in entries] == ["11", "10"]

    def test_per_paper_best_first(self):
        entries = assemble_review(make_index(), ["10"], SCORES, per_paper=2)
        assert [(e.sentence_index, e.score) for e in entries] == [(1, 0.9), (2, 0.3)]

    def test_per_paper_clipped_to_sentence_count(self):
        entries = assemble_review(make_index(), ["11"], SCORES, per_paper=5)
        assert len(entries) == 1

    def test_positive_scaling_keeps_selection(self):
        index = make_index()
        base = assemble_review(index, ["10", "11"], SCORES)
        scaled = assemble_review(
            index, ["10", "11"], {p: [3.0 * s for s in v] for p, v in SCORES.items()}
        )
        assert [e.sentence_index for e in base] == [e.sentence_index for e in scaled]

    def test_zero_sentence_paper_skipped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="reviewgen.assemble"):
            entries = assemble_review(make_index(), ["12", "11"], SCORES)
        assert [e.pmid for e in entries] == ["11"]
        assert any("12" in message for message in caplog.messages)

    def test_topic_from_partition(self):
        partition = TopicPartition(assignment={"10": 3}, modularity=0.5)
        entries = assemble_review(make_index(), ["10", "11"], SCORES, partition=partition)
        assert entries[0].topic == 3
        assert entries[1].topic == -1  # not in the partition

    def test_missing_scores_rejected(self):
        with pytest.raises(KeyError, match="11"):
            assemble_review(make_index(), ["11"], {"10": [0.1, 0.2, 0.3]})

    def test_wrong_score_count_rejected(self):
        with pytest.raises(ValueError, match="10"):
            assemble_review(make_index(), ["10"], {"10": [0.1, 0.2]})

    def test_non_finite_score_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            assemble_review(make_index(), ["10"], {"10": [0.1, np.nan, 0.3]})

    def test_bad_per_paper(self):
        with pytest.raises(ValueError):
            assemble_review(make_index(), ["10"], SCORES, per_paper=0)

    def test_unknown_paper(self):
        with pytest.raises(KeyError):
            assemble_review(make_index(), ["77"], {"77": [0.1]})


AWKWARD = ReviewEntry(
    pmid="42",
    title="Tabs\tand\nnewlines \\ here",
    year=None,
    topic=0,
    citations=7,
    doi=None,
    sentence_index=4,
    best_sentence="Cell | with pipe\tand tab",
    score=1 / 3,
)

PLAIN = ReviewEntry(
    pmid="43",
    title="Plain title",
    year=2020,
    topic=2,
    citations=0,
    doi="10.5/x",
    sentence_index=0,
    best_sentence="A plain sentence.",
    score=0.25,
)


class TestRenderParse:
    def test_tsv_roundtrip_lossless(self):
        text = render([AWKWARD, PLAIN], "tsv")
        assert parse_entries(text, "tsv") == [AWKWARD, PLAIN]
        # one header plus one line per entry, tabs inside fields escaped
        assert len(text.rstrip("\n").split("\n")) == 3

    def test_json_roundtrip_lossless(self):
        text = render([AWKWARD, PLAIN], "json")
        assert parse_entries(text, "json") == [AWKWARD, PLAIN]
        assert json.loads(text)[0]["pmid"] == "42"

    def test_tsv_score_exact(self):
        text = render([AWKWARD], "tsv")
        assert parse_entries(text, "tsv")[0].score == 1 / 3

    def test_empty_entries(self):
        assert parse_entries(render([], "tsv"), "tsv") == []
        assert parse_entries(render([], "json"), "json") == []

    def test_markdown_layout(self):
        text = render([PLAIN], "markdown")
        lines = text.rstrip("\n").split("\n")
        assert lines[0] == "| Paper | Year | Summary sentence | Score |"
        assert lines[1] == "| --- | --- | --- | --- |"
        assert lines[2] == "| Plain title | 2020 | A plain sentence. | 0.250 |"

    def test_markdown_escapes_pipes_and_rounds(self):
        text = render([AWKWARD], "markdown")
        row = text.rstrip("\n").split("\n")[2]
        assert "Cell \\| with pipe" in row
        assert "| 0.333 |" in row

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError, match="format"):
            render([], "html")
        with pytest.raises(ValueError, match="format"):
            parse_entries("", "markdown")

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError, match="header"):
            parse_entries("pmid\ttitle\n", "tsv")

    def test_wrong_column_count_rejected(self):
        text = render([PLAIN], "tsv")
        broken = text.rstrip("\n") + "\textra\n"
        with pytest.raises(ValueError, match="columns"):
            parse_entries(broken, "tsv")

    def test_extractive_guarantee_on_fixture(self, index):
        # every emitted sentence is a verbatim substring of the marker-
        # stripped source paper body
        pmids = [p for p in sorted(index.papers) if not index.paper(p).is_review][:5]
        scores = {
            p: [0.01 * i for i in range(len(index.paper(p).body_sentences))]
            for p in pmids
        }
        from reviewgen.corpus import strip_citation_markers

        for entry in assemble_review(index, pmids, scores, per_paper=2):
            body = strip_citation_markers(
                " ".join(index.paper(entry.pmid).body_sentences)
            )
            assert entry.best_sentence in body
