"""Turn key papers and sentence scores into the final review table."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import CorpusIndex, strip_citation_markers
from .graph import TopicPartition

logger = logging.getLogger(__name__)

RENDER_FORMATS = ("tsv", "markdown", "json")

_TSV_COLUMNS = (
    "pmid",
    "title",
    "year",
    "topic",
    "citations",
    "doi",
    "sentence_index",
    "best_sentence",
    "score",
)


@dataclass(frozen=True)
class ReviewEntry:
    pmid: str
    title: str
    year: int | None
    topic: int
    citations: int
    doi: str | None
    sentence_index: int
    best_sentence: str
    score: float


def assemble_review(
    index: CorpusIndex,
    key_papers: Sequence[str],
    scores: Mapping[str, Sequence[float]],
    partition: TopicPartition | None = None,
    per_paper: int = 1,
) -> list[ReviewEntry]:
    """Pick the top ``per_paper`` sentences of each key paper, in order.

    Ties go to the earlier sentence.  Papers without body sentences are
    skipped with a warning.  Entry order follows ``key_papers``; a
    paper's own entries are ordered best-first.
    """
    if per_paper < 1:
        raise ValueError(f"per_paper must be >= 1, got {per_paper}")
    entries: list[ReviewEntry] = []
    for pmid in key_papers:
        record = index.paper(pmid)
        if pmid not in scores:
            raise KeyError(f"no scores for key paper {pmid}")
        paper_scores = np.asarray(scores[pmid], dtype=np.float64)
        n = len(record.body_sentences)
        if n == 0:
            logger.warning("skipping %s: no body sentences", pmid)
            continue
        if paper_scores.shape != (n,):
            raise ValueError(
                f"{pmid}: {paper_scores.shape[0] if paper_scores.ndim else 0} scores "
                f"for {n} sentences"
            )
        if not np.isfinite(paper_scores).all():
            raise ValueError(f"{pmid}: non-finite sentence score")
        # stable sort on negated scores keeps the earlier index on ties
        order = np.argsort(-paper_scores, kind="stable")[: min(per_paper, n)]
        topic = partition.assignment.get(pmid, -1) if partition else -1
        for idx in order:
            i = int(idx)
            entries.append(
                ReviewEntry(
                    pmid=pmid,
                    title=record.title,
                    year=record.year,
                    topic=topic,
                    citations=index.citation_count(pmid),
                    doi=record.doi,
                    sentence_index=i,
                    best_sentence=strip_citation_markers(record.body_sentences[i]),
                    score=float(paper_scores[i]),
                )
            )
    return entries


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(value: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(value):
        c = value[i]
        if c == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _cell(value: str) -> str:
    return " ".join(value.split()).replace("|", "\\|")


def render(entries: Sequence[ReviewEntry], format: str = "tsv") -> str:
    """Serialize entries; tsv and json are lossless, markdown is display."""
    if format not in RENDER_FORMATS:
        raise ValueError(f"unknown render format: {format!r}")
    if format == "json":
        return json.dumps([asdict(e) for e in entries], indent=2) + "\n"
    if format == "tsv":
        lines = ["\t".join(_TSV_COLUMNS)]
        for e in entries:
            lines.append(
                "\t".join(
                    [
                        e.pmid,
                        _escape(e.title),
                        "" if e.year is None else str(e.year),
                        str(e.topic),
                        str(e.citations),
                        "" if e.doi is None else _escape(e.doi),
                        str(e.sentence_index),
                        _escape(e.best_sentence),
                        repr(e.score),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    lines = [
        "| Paper | Year | Summary sentence | Score |",
        "| --- | --- | --- | --- |",
    ]
    for e in entries:
        # display cells must stay on one line with pipes escaped
        title = _cell(e.title)
        sentence = _cell(e.best_sentence)
        year = "" if e.year is None else str(e.year)
        lines.append(f"| {title} | {year} | {sentence} | {e.score:.3f} |")
    return "\n".join(lines) + "\n"


def parse_entries(text: str, format: str = "tsv") -> list[ReviewEntry]:
    """Inverse of render for the lossless formats (tsv, json)."""
    if format == "json":
        return [ReviewEntry(**item) for item in json.loads(text)]
    if format != "tsv":
        raise ValueError(f"cannot parse render format: {format!r}")
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != "\t".join(_TSV_COLUMNS):
        raise ValueError("missing or wrong tsv header")
    entries = []
    for line in lines[1:]:
        cols = line.split("\t")
        if len(cols) != len(_TSV_COLUMNS):
            raise ValueError(f"expected {len(_TSV_COLUMNS)} columns, got {len(cols)}")
        entries.append(
            ReviewEntry(
                pmid=cols[0],
                title=_unescape(cols[1]),
                year=int(cols[2]) if cols[2] else None,
                topic=int(cols[3]),
                citations=int(cols[4]),
                doi=_unescape(cols[5]) if cols[5] else None,
                sentence_index=int(cols[6]),
                best_sentence=_unescape(cols[7]),
                score=float(cols[8]),
            )
        )
    return entries
