import numpy as np
import pytest

from reviewgen.corpus import CorpusIndex, PaperRecord, strip_citation_markers
from reviewgen.labels import (
    NoCitationContexts,
    build_training_set,
    compute_targets,
    extract_citation_contexts,
    make_blocks,
    read_blocks_jsonl,
    write_blocks_jsonl,
)
from reviewgen.metrics import rouge_combined


def two_paper_corpus():
    paper = PaperRecord(
        pmid="123",
        title="target paper",
        body_sentences=["X drives Y strongly.", "Unrelated filler words here.", "X drives Y."],
    )
    review = PaperRecord(
        pmid="900",
        title="the review",
        body_sentences=[
            "Intro sentence.",
            "X drives Y [[CIT:123]].",
            "Another topic [[CIT:777]].",
        ],
        cited_pmids=["123", "777"],
        is_review=True,
    )
    return CorpusIndex({"123": paper, "900": review})


class TestExtractContexts:
    def test_single_citing_sentence(self):
        index = two_paper_corpus()
        contexts = extract_citation_contexts(index, "123")
        assert len(contexts) == 1
        ctx = contexts[0]
        assert ctx.source_review == "900"
        assert ctx.target_paper == "123"
        assert ctx.context_text == "X drives Y [[CIT:123]]."

    def test_no_review_citers(self):
        index = two_paper_corpus()
        # the review itself is cited by nobody
        assert extract_citation_contexts(index, "900") == []

    def test_unknown_paper(self):
        with pytest.raises(KeyError):
            extract_citation_contexts(two_paper_corpus(), "nope")

    def test_two_citing_sentences_concatenated_in_order(self):
        paper = PaperRecord(pmid="1", title="t", body_sentences=["Some sentence."])
        review = PaperRecord(
            pmid="2",
            title="r",
            body_sentences=[
                "Second use [[CIT:1]] appears late.",
                "Middle filler.",
                "First use [[CIT:1]] appears early.",
            ],
            cited_pmids=["1"],
            is_review=True,
        )
        index = CorpusIndex({"1": paper, "2": review})
        contexts = extract_citation_contexts(index, "1")
        assert len(contexts) == 1
        assert contexts[0].context_text == (
            "Second use [[CIT:1]] appears late. First use [[CIT:1]] appears early."
        )

    def test_window_expansion_clipped_and_deduplicated(self):
        paper = PaperRecord(pmid="1", title="t", body_sentences=["S."])
        review = PaperRecord(
            pmid="2",
            title="r",
            body_sentences=["A.", "B [[CIT:1]].", "C.", "D [[CIT:1]]."],
            cited_pmids=["1"],
            is_review=True,
        )
        index = CorpusIndex({"1": paper, "2": review})
        (ctx,) = extract_citation_contexts(index, "1", window=1)
        # windows {0,1,2} and {2,3} merge without repeating sentence C
        assert ctx.context_text == "A. B [[CIT:1]]. C. D [[CIT:1]]."

    def test_exclude_reviews(self):
        index = two_paper_corpus()
        assert extract_citation_contexts(index, "123", exclude_reviews={"900"}) == []

    def test_non_review_citers_ignored(self):
        paper = PaperRecord(pmid="1", title="t", body_sentences=["S."])
        citer = PaperRecord(
            pmid="2",
            title="not a review",
            body_sentences=["Cites [[CIT:1]]."],
            cited_pmids=["1"],
            is_review=False,
        )
        index = CorpusIndex({"1": paper, "2": citer})
        assert extract_citation_contexts(index, "1") == []


class TestComputeTargets:
    def test_matches_direct_rouge(self):
        index = two_paper_corpus()
        targets = compute_targets(index, "123")
        reference = ["X drives Y."]  # context with marker stripped
        for i, sentence in enumerate(index.paper("123").body_sentences):
            expected = rouge_combined(reference, strip_citation_markers(sentence))
            assert targets[i] == expected

    def test_identical_sentence_scores_one(self):
        index = two_paper_corpus()
        targets = compute_targets(index, "123")
        assert targets[2] == 1.0

    def test_disjoint_sentence_scores_zero(self):
        index = two_paper_corpus()
        targets = compute_targets(index, "123")
        assert targets[1] == 0.0

    def test_no_contexts_raises(self):
        index = two_paper_corpus()
        with pytest.raises(NoCitationContexts):
            compute_targets(index, "900")

    def test_range(self, index):
        for pmid, record in index.papers.items():
            if record.is_review:
                continue
            targets = compute_targets(index, pmid)
            assert ((targets >= 0) & (targets <= 1)).all()


class TestMakeBlocks:
    def test_hand_cases(self):
        assert make_blocks(20, 10, 5) == [range(0, 10), range(5, 15), range(10, 20)]
        assert make_blocks(8, 10, 5) == [range(0, 8)]
        assert make_blocks(12, 10, 5) == [range(0, 10), range(5, 12)]

    def test_zero_sentences(self):
        assert make_blocks(0) == []

    def test_coverage_and_exact_overlap(self):
        for count in range(1, 101):
            blocks = make_blocks(count, 10, 5)
            covered = sorted({i for b in blocks for i in b})
            assert covered == list(range(count))
            assert all(len(b) >= 1 for b in blocks)
            for a, b in zip(blocks, blocks[1:]):
                assert len(set(a) & set(b)) == 5

    def test_no_intersection(self):
        assert make_blocks(7, 3, 0) == [range(0, 3), range(3, 6), range(6, 7)]

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            make_blocks(5, 5, 5)
        with pytest.raises(ValueError):
            make_blocks(5, 3, -1)
        with pytest.raises(ValueError):
            make_blocks(-1, 10, 5)


class TestBuildTrainingSet:
    def test_fixture_block_arithmetic(self, index):
        blocks = build_training_set(index)
        expected = 0
        for pmid, record in index.papers.items():
            if record.is_review:
                continue
            expected += len(make_blocks(len(record.body_sentences), 10, 5))
        assert len(blocks) == expected

    def test_ordered_by_pmid_then_start(self, index):
        blocks = build_training_set(index)
        keys = [(b.pmid, b.start) for b in blocks]
        assert keys == sorted(keys)

    def test_reviews_never_labeled(self, index):
        blocks = build_training_set(index)
        reviews = {p for p, r in index.papers.items() if r.is_review}
        assert not ({b.pmid for b in blocks} & reviews)

    def test_holdout_excludes_sole_citer(self):
        index = two_paper_corpus()
        assert build_training_set(index, holdout_reviews={"900"}) == []
        blocks = build_training_set(index)
        assert {b.pmid for b in blocks} == {"123"}

    def test_sentences_are_marker_stripped(self, index):
        for block in build_training_set(index):
            for sentence in block.sentences:
                assert "[[CIT:" not in sentence

    def test_targets_align_with_compute_targets(self, index):
        blocks = build_training_set(index)
        by_pmid = {}
        for block in blocks:
            by_pmid.setdefault(block.pmid, []).append(block)
        for pmid, paper_blocks in by_pmid.items():
            targets = compute_targets(index, pmid)
            for block in paper_blocks:
                assert np.array_equal(block.targets, targets[block.start : block.start + len(block.sentences)])

    def test_leakage_guard(self, index):
        holdout = "100090"
        baseline = build_training_set(index, holdout_reviews={holdout})
        # corrupt the held-out review's text completely
        papers = dict(index.papers)
        record = papers[holdout]
        papers[holdout] = PaperRecord(
            pmid=record.pmid,
            title="garbled",
            abstract="garbled",
            body_sentences=["Totally different text [[CIT:100001]]."],
            cited_pmids=record.cited_pmids,
            is_review=True,
            year=record.year,
        )
        perturbed = build_training_set(CorpusIndex(papers), holdout_reviews={holdout})
        assert len(baseline) == len(perturbed)
        for a, b in zip(baseline, perturbed):
            assert a.pmid == b.pmid and a.start == b.start
            assert np.array_equal(a.targets, b.targets)


class TestBlocksJsonl:
    def test_roundtrip(self, tmp_path, index):
        blocks = build_training_set(index)
        path = tmp_path / "blocks.jsonl"
        write_blocks_jsonl(blocks, path)
        loaded = read_blocks_jsonl(path)
        assert len(loaded) == len(blocks)
        for a, b in zip(blocks, loaded):
            assert a.pmid == b.pmid
            assert a.start == b.start
            assert a.sentences == b.sentences
            assert np.array_equal(a.targets, b.targets)
