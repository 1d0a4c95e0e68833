"""Evaluation: top-n summary benchmark and the annotation report.

The benchmark treats each held-out review as the ideal summary of the
papers it cites: pool every body sentence of the cited papers, score
them with a scorer backend, pick the global top n, and compare that
extract to the review's own text with combined ROUGE.  Because the
candidate counts n-grams per selected sentence, the score is exactly
non-decreasing in n.
"""

from __future__ import annotations

import csv
import logging
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, strip_citation_markers
from .labels import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_INTERSECTION,
    NoCitationContexts,
    SentenceBlock,
    compute_targets,
)
from .metrics import RougeReference
from .scorer import score_sentences

logger = logging.getLogger(__name__)

ANNOTATION_LABELS = ("not_relevant", "relevant", "useful")


class OracleScorer:
    """Scores every sentence with its true regression target.

    Upper bound for any trained scorer on noiseless targets; used to
    sanity-check the benchmark itself.
    """

    def __init__(self, index: CorpusIndex, window: int = 0):
        self.index = index
        self.window = window
        self._cache: dict[str, np.ndarray] = {}

    def _targets(self, pmid: str) -> np.ndarray:
        cached = self._cache.get(pmid)
        if cached is None:
            try:
                cached = compute_targets(self.index, pmid, window=self.window)
            except NoCitationContexts:
                n = len(self.index.paper(pmid).body_sentences)
                cached = np.zeros(n, dtype=np.float64)
            self._cache[pmid] = cached
        return cached

    def score_block(self, block: SentenceBlock) -> list[float]:
        targets = self._targets(block.pmid)
        return [float(targets[i]) for i in block.indices]

    def close(self) -> None:
        pass


class RandomScorer:
    """Seeded uniform scores, stable per (paper, sentence index).

    The score of a sentence does not depend on block shape or call
    order, so reruns and different blockings agree exactly.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score_block(self, block: SentenceBlock) -> list[float]:
        return [
            random.Random(f"{self.seed}:{block.pmid}:{i}").random()
            for i in block.indices
        ]

    def close(self) -> None:
        pass


@dataclass
class BenchmarkResult:
    per_review: dict[tuple[str, int], float]
    means: dict[int, float]
    skipped: list[str] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["review_pmid\tn\trouge"]
        for (pmid, n), score in sorted(self.per_review.items()):
            lines.append(f"{pmid}\t{n}\t{score!r}")
        return "\n".join(lines) + "\n"

    def summary_tsv(self) -> str:
        lines = ["n\tmean_rouge"]
        for n in sorted(self.means):
            lines.append(f"{n}\t{self.means[n]!r}")
        return "\n".join(lines) + "\n"


def benchmark(
    index: CorpusIndex,
    holdout_reviews: Iterable[str],
    scorer,
    n_values: Sequence[int] = (1, 5, 10),
    block_size: int = DEFAULT_BLOCK_SIZE,
    intersection: int = DEFAULT_INTERSECTION,
    mode: str = "mean",
) -> BenchmarkResult:
    """Top-n extract quality of a scorer against held-out reviews.

    For each review: pool the body sentences of its in-corpus cited
    papers, score them, select the top n by (score desc, pmid asc,
    sentence index asc), and report combined ROUGE of the selection
    against the review's full body text.  Reviews citing no in-corpus
    papers are skipped with a warning.
    """
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError(f"n_values must be positive integers, got {n_values}")
    per_review: dict[tuple[str, int], float] = {}
    skipped: list[str] = []
    scored_reviews: list[str] = []
    for review_pmid in sorted(set(holdout_reviews)):
        review = index.paper(review_pmid)
        cited = [p for p in review.cited_pmids if p in index]
        pool: list[tuple[float, str, int, str]] = []
        for pmid in sorted(cited):
            sentences = [
                strip_citation_markers(s) for s in index.paper(pmid).body_sentences
            ]
            if not sentences:
                continue
            scores = score_sentences(
                scorer,
                pmid,
                sentences,
                block_size=block_size,
                intersection=intersection,
                mode=mode,
            )
            pool.extend(
                (float(scores[i]), pmid, i, sentences[i])
                for i in range(len(sentences))
            )
        if not pool:
            logger.warning("skipping review %s: no in-corpus cited sentences", review_pmid)
            skipped.append(review_pmid)
            continue
        pool.sort(key=lambda e: (-e[0], e[1], e[2]))
        reference = RougeReference(
            [strip_citation_markers(" ".join(review.body_sentences))]
        )
        for n in n_values:
            parts = [entry[3] for entry in pool[:n]]
            per_review[(review_pmid, n)] = reference.combined_parts(parts)
        scored_reviews.append(review_pmid)
    means = {
        n: (
            sum(per_review[(pmid, n)] for pmid in scored_reviews) / len(scored_reviews)
            if scored_reviews
            else 0.0
        )
        for n in n_values
    }
    return BenchmarkResult(per_review=per_review, means=means, skipped=skipped)


@dataclass(frozen=True)
class AnnotationRecord:
    query: str
    pmid: str
    sentence: str
    label: str

    def __post_init__(self):
        if self.label not in ANNOTATION_LABELS:
            raise ValueError(f"unknown annotation label: {self.label!r}")


def _normalize_label(raw: str) -> str:
    return raw.strip().lower().replace("-", "_").replace(" ", "_")


def read_annotations(path: str | Path) -> tuple[list[AnnotationRecord], list[str]]:
    """Parse annotation CSV rows (query, pmid, sentence, label).

    A header row is recognized and skipped.  Rows with a wrong column
    count or an unknown label are rejected individually; the second
    return value collects one message per rejected row.
    """
    records: list[AnnotationRecord] = []
    errors: list[str] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or (lineno == 1 and [c.strip().lower() for c in row] == ["query", "pmid", "sentence", "label"]):
                continue
            if len(row) != 4:
                errors.append(f"line {lineno}: expected 4 columns, got {len(row)}")
                continue
            label = _normalize_label(row[3])
            if label not in ANNOTATION_LABELS:
                errors.append(f"line {lineno}: unknown label {row[3]!r}")
                continue
            records.append(
                AnnotationRecord(
                    query=row[0].strip(), pmid=row[1].strip(), sentence=row[2], label=label
                )
            )
    return records, errors


@dataclass
class AnnotationReport:
    rows: list[tuple[str, dict[str, int]]]
    mean: dict[str, int]

    def to_tsv(self) -> str:
        lines = ["query\tnot_relevant\trelevant\tuseful"]
        for query, pct in self.rows:
            lines.append(
                f"{query}\t" + "\t".join(str(pct[l]) for l in ANNOTATION_LABELS)
            )
        lines.append(
            "Mean Values:\t" + "\t".join(str(self.mean[l]) for l in ANNOTATION_LABELS)
        )
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| Query | Not Relevant | Relevant | Useful |",
            "| --- | --- | --- | --- |",
        ]
        for query, pct in self.rows:
            cells = " | ".join(f"{pct[l]}%" for l in ANNOTATION_LABELS)
            lines.append(f"| {query} | {cells} |")
        cells = " | ".join(f"{self.mean[l]}%" for l in ANNOTATION_LABELS)
        lines.append(f"| Mean Values: | {cells} |")
        return "\n".join(lines) + "\n"


def annotation_report(records: Sequence[AnnotationRecord]) -> AnnotationReport:
    """Per-query label percentages (integer-rounded) plus a mean row.

    Queries are ordered lexicographically, so the report is invariant
    under record permutation.  The mean row averages the per-query
    integer percentages.
    """
    if not records:
        raise ValueError("annotation report needs at least one record")
    by_query: dict[str, list[AnnotationRecord]] = {}
    for record in records:
        by_query.setdefault(record.query, []).append(record)
    rows: list[tuple[str, dict[str, int]]] = []
    for query in sorted(by_query):
        group = by_query[query]
        pct = {
            label: round(100 * sum(1 for r in group if r.label == label) / len(group))
            for label in ANNOTATION_LABELS
        }
        rows.append((query, pct))
    mean = {
        label: round(sum(pct[label] for _, pct in rows) / len(rows))
        for label in ANNOTATION_LABELS
    }
    return AnnotationReport(rows=rows, mean=mean)
