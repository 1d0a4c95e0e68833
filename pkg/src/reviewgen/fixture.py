"""Bundled synthetic corpus: 5 topics, 45 research papers, 5 reviews.

Small enough for fast tests, structured enough to exercise the whole
pipeline: topic-specific vocabulary (so similarity clusters recover the
topics), within-topic citations (so co-citation and coupling are
non-trivial), and one review per topic whose citing sentences reuse
most of the words of one highlight sentence per cited paper (so the
regression targets have a clear signal).

Fully deterministic: rebuilt corpora are byte-identical.

Run ``python -m reviewgen.fixture out.jsonl`` to write the snapshot.
"""

from __future__ import annotations

import random
import sys

from .corpus import CorpusIndex, PaperRecord

TOPICS = (
    (
        "alzheimer disease",
        ["amyloid", "tau", "plaque", "hippocampus", "memory",
         "dementia", "cognitive", "neurodegeneration"],
    ),
    (
        "parkinson disease",
        ["dopamine", "nigra", "tremor", "motor", "levodopa",
         "synuclein", "bradykinesia", "gait"],
    ),
    (
        "breast cancer",
        ["tumor", "her2", "estrogen", "mammography", "metastasis",
         "chemotherapy", "receptor", "oncogene"],
    ),
    (
        "influenza vaccine",
        ["antibody", "hemagglutinin", "strain", "immunization", "titer",
         "adjuvant", "epitope", "seroconversion"],
    ),
    (
        "gut microbiome",
        ["microbiota", "bacteroides", "dysbiosis", "metagenomics", "probiotic",
         "firmicutes", "mucosa", "fermentation"],
    ),
)

FILLER = [
    "study", "patients", "results", "analysis", "clinical", "data",
    "treatment", "effect", "baseline", "cohort", "followup", "outcome",
    "measured", "observed", "protocol", "assay", "sample", "statistical",
]

PAPERS_PER_TOPIC = 9


def _research_pmid(topic: int, i: int) -> str:
    return str(100001 + topic * 100 + i)


def _review_pmid(topic: int) -> str:
    return str(100090 + topic * 100)


def _external_pmid(topic: int, k: int) -> str:
    return str(800000 + topic * 10 + k)


# one review per topic; the natural holdout set for benchmarks
REVIEW_PMIDS = tuple(_review_pmid(t) for t in range(len(TOPICS)))


def _highlight(topic: int, i: int, words: list[str]) -> str:
    w = words
    marker = f"biomarker{topic}{i}"
    return (
        f"We observed that {marker} elevates {w[i % 8]} and {w[(i + 3) % 8]} "
        f"levels across {17 + i} independent cohort samples."
    )


def _research_paper(topic: int, i: int, rng: random.Random) -> PaperRecord:
    phrase, words = TOPICS[topic]
    pmid = _research_pmid(topic, i)
    qualifier = "Longitudinal " if i >= 8 else ""
    title = (
        f"{qualifier}{words[i % 8].capitalize() if not qualifier else words[i % 8]} "
        f"and {words[(i + 1) % 8]} dynamics in {phrase}."
    )
    abstract = (
        f"We examine {words[i % 8]} regulation in {phrase}. "
        f"A {FILLER[i % len(FILLER)]} of {40 + 3 * i} patients shows "
        f"{words[(i + 2) % 8]} changes linked to {words[(i + 5) % 8]}."
    )
    n_body = 12 + i % 5
    h = 3 + i % 4
    body = []
    for j in range(n_body):
        if j == h:
            body.append(_highlight(topic, i, words))
        else:
            a = words[rng.randrange(8)]
            b = FILLER[rng.randrange(len(FILLER))]
            c = FILLER[rng.randrange(len(FILLER))]
            body.append(
                f"The {b} {c} for {a} was {rng.randint(2, 95)} percent "
                f"in group {chr(65 + j % 4)}."
            )
    cited = [_research_pmid(topic, j) for j in range(max(0, i - 2), i)]
    cited += [_external_pmid(topic, i % 3), _external_pmid(topic, (i + 1) % 3)]
    return PaperRecord(
        pmid=pmid,
        title=title,
        abstract=abstract,
        body_sentences=body,
        figure_captions=[f"Figure 1: {words[i % 8]} distribution."],
        table_captions=[],
        cited_pmids=cited,
        is_review=False,
        year=2006 + i,
        doi=f"10.1234/rg.{pmid}",
    )


def _citing_sentence(topic: int, i: int, words: list[str]) -> str:
    # reuses most of the highlight so the target signal is unambiguous
    w = words
    marker = f"biomarker{topic}{i}"
    pmid = _research_pmid(topic, i)
    return (
        f"Earlier work observed that {marker} elevates {w[i % 8]} and "
        f"{w[(i + 3) % 8]} levels across independent cohort samples "
        f"[[CIT:{pmid}]]."
    )


def _review_paper(topic: int) -> PaperRecord:
    phrase, words = TOPICS[topic]
    pmid = _review_pmid(topic)
    body = [
        f"This review surveys recent progress on {phrase}.",
        f"Interest in {words[0]} and {words[1]} has grown steadily.",
    ]
    for i in range(PAPERS_PER_TOPIC):
        body.append(_citing_sentence(topic, i, words))
        if i % 3 == 2:
            body.append(
                f"Together these findings refine the role of {words[i % 8]} "
                f"in {phrase}."
            )
    body.append(f"Open questions remain about {words[2]} and {words[6]}.")
    return PaperRecord(
        pmid=pmid,
        title=f"{phrase.capitalize()}: a review of mechanisms and markers.",
        abstract=(
            f"We summarize the evidence connecting {words[0]}, {words[3]} "
            f"and {words[5]} to {phrase}."
        ),
        body_sentences=body,
        figure_captions=[],
        table_captions=[],
        cited_pmids=[_research_pmid(topic, i) for i in range(PAPERS_PER_TOPIC)],
        is_review=True,
        year=2021,
        doi=f"10.1234/rg.{pmid}",
    )


def fixture_records() -> list[PaperRecord]:
    rng = random.Random(7)
    records = []
    for topic in range(len(TOPICS)):
        for i in range(PAPERS_PER_TOPIC):
            records.append(_research_paper(topic, i, rng))
        records.append(_review_paper(topic))
    return records


def fixture_corpus() -> CorpusIndex:
    return CorpusIndex({r.pmid: r for r in fixture_records()})


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m reviewgen.fixture OUT_JSONL", file=sys.stderr)
        return 2
    from .corpus import write_corpus_jsonl

    write_corpus_jsonl(fixture_corpus(), args[0])
    return 0


if __name__ == "__main__":
    sys.exit(main())
