"""Regression targets from review citation contexts, and block splitting.

For a paper cited by review papers, the sentences of those reviews that
carry a ``[[CIT:<pmid>]]`` marker for it form its citation contexts (one
context per citing review, the marked sentences concatenated in document
order, optionally expanded by a window of neighbours).  Each body
sentence then gets a target in [0, 1]: its combined ROUGE against the
full context set.  Papers without any context are excluded from
training, never defaulted to zero targets.

Long papers are split into overlapping sentence blocks; consecutive
blocks of one paper overlap by exactly the configured intersection (5 by
default, block size 10).

Exported blocks are JSONL lines ``{"pmid", "start", "sentences",
"targets"}``; sentence text in blocks is marker-stripped, matching what
scorers consume.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, cited_in_text, strip_citation_markers
from .metrics import RougeReference

DEFAULT_BLOCK_SIZE = 10
DEFAULT_INTERSECTION = 5


class NoCitationContexts(ValueError):
    """The paper has no citation context under the given review set."""


@dataclass
class CitationContext:
    source_review: str
    target_paper: str
    context_text: str


@dataclass
class SentenceBlock:
    """A window of consecutive sentences of one paper."""

    pmid: str
    start: int
    sentences: list[str]

    @property
    def indices(self) -> range:
        return range(self.start, self.start + len(self.sentences))


@dataclass
class LabeledBlock(SentenceBlock):
    targets: np.ndarray = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "pmid": self.pmid,
                "start": self.start,
                "sentences": self.sentences,
                "targets": [float(t) for t in self.targets],
            },
            ensure_ascii=False,
        )


def extract_citation_contexts(
    index: CorpusIndex,
    paper: str,
    window: int = 0,
    exclude_reviews: Iterable[str] = (),
) -> list[CitationContext]:
    """Citation contexts of ``paper`` from its citing reviews.

    Every review sentence whose inline markers resolve to the paper is
    selected, expanded by ``window`` sentences on each side; the selected
    sentences of one review are concatenated in document order into a
    single context.  Reviews in ``exclude_reviews`` are ignored (holdout
    support).
    """
    if paper not in index:
        raise KeyError(paper)
    excluded = set(exclude_reviews)
    contexts = []
    for review_pmid in index.review_citers.get(paper, ()):
        if review_pmid in excluded:
            continue
        body = index.paper(review_pmid).body_sentences
        hits = [i for i, sentence in enumerate(body) if paper in cited_in_text(sentence)]
        if not hits:
            continue
        selected = sorted(
            {
                j
                for i in hits
                for j in range(max(0, i - window), min(len(body), i + window + 1))
            }
        )
        contexts.append(
            CitationContext(
                source_review=review_pmid,
                target_paper=paper,
                context_text=" ".join(body[j] for j in selected),
            )
        )
    return contexts


def compute_targets(
    index: CorpusIndex,
    paper: str,
    window: int = 0,
    exclude_reviews: Iterable[str] = (),
) -> np.ndarray:
    """Combined ROUGE of each body sentence against the paper's contexts.

    All contexts form one multi-reference set.  Markers are stripped from
    both sides before scoring.  Raises :class:`NoCitationContexts` when
    the paper has no usable context.
    """
    contexts = extract_citation_contexts(
        index, paper, window=window, exclude_reviews=exclude_reviews
    )
    if not contexts:
        raise NoCitationContexts(f"no citation contexts for {paper}")
    reference = RougeReference(
        [strip_citation_markers(c.context_text) for c in contexts]
    )
    body = index.paper(paper).body_sentences
    return np.array(
        [reference.combined(strip_citation_markers(s)) for s in body],
        dtype=np.float64,
    )


def make_blocks(
    sentence_count: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    intersection: int = DEFAULT_INTERSECTION,
) -> list[range]:
    """Index ranges covering [0, sentence_count) with fixed overlap.

    Starts advance by ``block_size - intersection``; the final block is
    truncated at the end of the text.  Every index is covered and no
    block is empty.
    """
    if intersection < 0:
        raise ValueError(f"intersection must be >= 0, got {intersection}")
    if block_size <= intersection:
        raise ValueError(
            f"block_size must exceed intersection, got {block_size} <= {intersection}"
        )
    if sentence_count < 0:
        raise ValueError(f"sentence_count must be >= 0, got {sentence_count}")
    if sentence_count == 0:
        return []
    stride = block_size - intersection
    blocks = []
    start = 0
    while True:
        end = min(start + block_size, sentence_count)
        blocks.append(range(start, end))
        if end >= sentence_count:
            return blocks
        start += stride


def build_training_set(
    index: CorpusIndex,
    holdout_reviews: Iterable[str] = (),
    block_size: int = DEFAULT_BLOCK_SIZE,
    intersection: int = DEFAULT_INTERSECTION,
    window: int = 0,
) -> list[LabeledBlock]:
    """Labeled blocks for every non-review paper with usable contexts.

    Contexts from reviews in ``holdout_reviews`` never contribute, so a
    paper cited only by holdout reviews is excluded entirely.  Output is
    ordered by pmid, then block start.
    """
    holdout = frozenset(holdout_reviews)
    blocks: list[LabeledBlock] = []
    for pmid, record in index.papers.items():
        if record.is_review or not record.body_sentences:
            continue
        try:
            targets = compute_targets(
                index, pmid, window=window, exclude_reviews=holdout
            )
        except NoCitationContexts:
            continue
        stripped = [strip_citation_markers(s) for s in record.body_sentences]
        for indices in make_blocks(len(stripped), block_size, intersection):
            blocks.append(
                LabeledBlock(
                    pmid=pmid,
                    start=indices.start,
                    sentences=[stripped[i] for i in indices],
                    targets=targets[indices.start : indices.stop].copy(),
                )
            )
    return blocks


def write_blocks_jsonl(blocks: Iterable[LabeledBlock], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for block in blocks:
            fh.write(block.to_json())
            fh.write("\n")


def read_blocks_jsonl(path: str | Path) -> list[LabeledBlock]:
    blocks = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            blocks.append(
                LabeledBlock(
                    pmid=entry["pmid"],
                    start=entry["start"],
                    sentences=list(entry["sentences"]),
                    targets=np.array(entry["targets"], dtype=np.float64),
                )
            )
    return blocks
