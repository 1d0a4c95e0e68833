"""Corpus snapshot ingestion and lookup tables.

The canonical interchange format is JSONL, one paper per line:

    {"pmid": str, "title": str, "abstract": str, "sentences": [str],
     "fig_captions": [str], "table_captions": [str], "citations": [str],
     "is_review": bool, "year": int, "doi": str|null}

Only ``pmid`` and ``title`` are mandatory; everything else defaults.  A
JATS-XML reader maps onto the same schema.  Inline citations inside
sentence text use the literal marker ``[[CIT:<pmid>]]``; ingestion
preserves markers, scoring and output strip them.

A built index is immutable by convention: nothing in this package
mutates a :class:`CorpusIndex` after construction, so concurrent reads
are safe.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from xml.etree import ElementTree

CITATION_MARKER_RE = re.compile(r"\[\[CIT:([^\]\s]+)\]\]")

# terminal punctuation starts a new sentence only before an uppercase letter;
# these literals suppress the split (decimal points are already safe because
# they are never followed by whitespace)
ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "Fig.", "vs.")


class DuplicatePmidError(ValueError):
    """Two corpus entries share a pmid."""


@dataclass
class IngestError:
    line: int
    error: str

    def to_json(self) -> str:
        return json.dumps({"line": self.line, "error": self.error})


@dataclass
class PaperRecord:
    """One paper of the corpus snapshot."""

    pmid: str
    title: str
    abstract: str = ""
    body_sentences: list[str] = field(default_factory=list)
    figure_captions: list[str] = field(default_factory=list)
    table_captions: list[str] = field(default_factory=list)
    cited_pmids: list[str] = field(default_factory=list)
    is_review: bool = False
    year: int = 0
    doi: str | None = None


class CorpusIndex:
    """Lookup tables over a corpus: papers, reverse citations, review citers.

    ``reverse_citations`` is the exact transpose of the citation relation
    restricted to pmids present in the corpus; ``review_citers`` restricts
    it further to citing papers flagged as reviews.  Citing lists are
    sorted lexicographically so repeated ingests are identical.
    """

    def __init__(self, papers: dict[str, PaperRecord]):
        self.papers = {pmid: papers[pmid] for pmid in sorted(papers)}
        reverse: dict[str, list[str]] = {pmid: [] for pmid in self.papers}
        reviewers: dict[str, list[str]] = {pmid: [] for pmid in self.papers}
        for pmid, record in self.papers.items():
            for cited in record.cited_pmids:
                if cited in reverse:
                    reverse[cited].append(pmid)
                    if record.is_review:
                        reviewers[cited].append(pmid)
        self.reverse_citations = {p: sorted(v) for p, v in reverse.items()}
        self.review_citers = {p: sorted(v) for p, v in reviewers.items()}

    def __len__(self) -> int:
        return len(self.papers)

    def __contains__(self, pmid: str) -> bool:
        return pmid in self.papers

    def paper(self, pmid: str) -> PaperRecord:
        return self.papers[pmid]

    def citation_count(self, pmid: str) -> int:
        return len(self.reverse_citations.get(pmid, ()))


def strip_citation_markers(text: str) -> str:
    """Remove ``[[CIT:...]]`` markers, collapsing leftover whitespace.

    Whitespace preceding a marker goes with it, so "x [[CIT:1]]." comes
    back as "x.", not "x .".
    """
    return " ".join(re.sub(r"\s*" + CITATION_MARKER_RE.pattern, "", text).split())


def cited_in_text(text: str) -> list[str]:
    """Pmids referenced by inline markers, in order of appearance."""
    return CITATION_MARKER_RE.findall(text)


def split_sentences(raw_text: str) -> list[str]:
    """Rule-based sentence splitter.

    Splits after ``.?!`` followed by whitespace and an uppercase letter,
    except when the text so far ends in one of :data:`ABBREVIATIONS`.
    Whitespace runs are collapsed first, so joining the result with
    single spaces reproduces the input up to collapsed whitespace.
    """
    text = " ".join(raw_text.split())
    if not text:
        return []
    sentences = []
    start = 0
    for i, ch in enumerate(text):
        if ch not in ".?!":
            continue
        if i + 1 >= len(text) or text[i + 1] != " ":
            continue
        nxt = i + 1
        while nxt < len(text) and text[nxt] == " ":
            nxt += 1
        if nxt >= len(text) or not text[nxt].isupper():
            continue
        if ch == "." and text[: i + 1].endswith(ABBREVIATIONS):
            continue
        sentence = text[start : i + 1].strip()
        if sentence:
            sentences.append(sentence)
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _as_str_list(value, name: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list) or any(not isinstance(x, str) for x in value):
        raise ValueError(f"{name} must be a list of strings")
    return list(value)


def record_from_dict(entry: dict) -> PaperRecord:
    """Validate one JSONL entry and normalize it into a PaperRecord.

    Citation lists are deduplicated (first occurrence wins) and
    self-citations dropped.
    """
    if not isinstance(entry, dict):
        raise ValueError("entry is not a JSON object")
    pmid = entry.get("pmid")
    if not isinstance(pmid, str) or not pmid:
        raise ValueError("missing or empty pmid")
    title = entry.get("title")
    if not isinstance(title, str) or not title:
        raise ValueError("missing or empty title")
    abstract = entry.get("abstract") or ""
    if not isinstance(abstract, str):
        raise ValueError("abstract must be a string")
    year = entry.get("year", 0)
    if not isinstance(year, int) or isinstance(year, bool):
        raise ValueError("year must be an integer")
    is_review = entry.get("is_review", False)
    if not isinstance(is_review, bool):
        raise ValueError("is_review must be a boolean")
    doi = entry.get("doi")
    if doi is not None and not isinstance(doi, str):
        raise ValueError("doi must be a string or null")
    citations = []
    seen = set()
    for cited in _as_str_list(entry.get("citations"), "citations"):
        if cited == pmid or cited in seen:
            continue
        seen.add(cited)
        citations.append(cited)
    return PaperRecord(
        pmid=pmid,
        title=title,
        abstract=abstract,
        body_sentences=_as_str_list(entry.get("sentences"), "sentences"),
        figure_captions=_as_str_list(entry.get("fig_captions"), "fig_captions"),
        table_captions=_as_str_list(entry.get("table_captions"), "table_captions"),
        cited_pmids=citations,
        is_review=is_review,
        year=year,
        doi=doi,
    )


def record_to_dict(record: PaperRecord) -> dict:
    return {
        "pmid": record.pmid,
        "title": record.title,
        "abstract": record.abstract,
        "sentences": list(record.body_sentences),
        "fig_captions": list(record.figure_captions),
        "table_captions": list(record.table_captions),
        "citations": list(record.cited_pmids),
        "is_review": record.is_review,
        "year": record.year,
        "doi": record.doi,
    }


def _parse_jsonl(path: Path) -> tuple[list[PaperRecord], list[IngestError]]:
    records = []
    errors = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                records.append(record_from_dict(entry))
            except DuplicatePmidError:
                raise
            except (ValueError, TypeError) as exc:
                errors.append(IngestError(line=lineno, error=str(exc)))
    return records, errors


def _element_text(element: ElementTree.Element, ref_pmids: dict[str, str]) -> str:
    """Flatten an element to text, replacing bibr xrefs with CIT markers."""
    parts = []
    if element.tag == "xref" and element.get("ref-type") == "bibr":
        rid = element.get("rid", "")
        pmid = ref_pmids.get(rid)
        if pmid:
            parts.append(f"[[CIT:{pmid}]]")
        return "".join(parts)
    if element.text:
        parts.append(element.text)
    for child in element:
        parts.append(_element_text(child, ref_pmids))
        if child.tail:
            parts.append(child.tail)
    return "".join(parts)


def _jats_article_record(article: ElementTree.Element) -> PaperRecord:
    pmid_el = article.find(".//front//article-meta/article-id[@pub-id-type='pmid']")
    if pmid_el is None or not (pmid_el.text or "").strip():
        raise ValueError("missing or empty pmid")
    pmid = pmid_el.text.strip()
    title_el = article.find(".//front//article-title")
    title = "".join(title_el.itertext()).strip() if title_el is not None else ""
    if not title:
        raise ValueError("missing or empty title")

    ref_pmids: dict[str, str] = {}
    citations: list[str] = []
    for ref in article.findall(".//back//ref-list//ref"):
        cited = ref.find(".//pub-id[@pub-id-type='pmid']")
        if cited is None or not (cited.text or "").strip():
            continue
        cited_pmid = cited.text.strip()
        rid = ref.get("id")
        if rid:
            ref_pmids[rid] = cited_pmid
        citations.append(cited_pmid)

    abstract_el = article.find(".//front//abstract")
    abstract = (
        " ".join("".join(abstract_el.itertext()).split()) if abstract_el is not None else ""
    )

    body = article.find("body")
    sentences: list[str] = []
    fig_captions: list[str] = []
    table_captions: list[str] = []
    if body is not None:
        caption_paragraphs: set[int] = set()
        for cap in body.findall(".//caption"):
            for p in cap.findall(".//p"):
                caption_paragraphs.add(id(p))
        for fig in body.findall(".//fig"):
            cap = fig.find("caption")
            if cap is not None:
                fig_captions.append(" ".join("".join(cap.itertext()).split()))
        for tab in body.findall(".//table-wrap"):
            cap = tab.find("caption")
            if cap is not None:
                table_captions.append(" ".join("".join(cap.itertext()).split()))
        for paragraph in body.findall(".//p"):
            if id(paragraph) in caption_paragraphs:
                continue
            sentences.extend(split_sentences(_element_text(paragraph, ref_pmids)))

    year = 0
    year_el = article.find(".//front//pub-date/year")
    if year_el is not None and (year_el.text or "").strip().isdigit():
        year = int(year_el.text.strip())

    doi_el = article.find(".//front//article-meta/article-id[@pub-id-type='doi']")
    doi = doi_el.text.strip() if doi_el is not None and doi_el.text else None

    article_type = (article.get("article-type") or "").lower()
    return record_from_dict(
        {
            "pmid": pmid,
            "title": title,
            "abstract": abstract,
            "sentences": sentences,
            "fig_captions": fig_captions,
            "table_captions": table_captions,
            "citations": citations,
            "is_review": "review" in article_type,
            "year": year,
            "doi": doi,
        }
    )


def _parse_jats(path: Path) -> tuple[list[PaperRecord], list[IngestError]]:
    tree = ElementTree.parse(path)
    root = tree.getroot()
    articles = [root] if root.tag == "article" else root.findall(".//article")
    records = []
    errors = []
    for ordinal, article in enumerate(articles, start=1):
        try:
            records.append(_jats_article_record(article))
        except ValueError as exc:
            errors.append(IngestError(line=ordinal, error=str(exc)))
    return records, errors


def ingest_corpus(
    source: str | Path, format: str = "jsonl"
) -> tuple[CorpusIndex, list[IngestError]]:
    """Parse a corpus snapshot into a :class:`CorpusIndex`.

    Malformed entries are skipped and reported; a duplicate pmid is a
    hard failure.  Citations pointing outside the snapshot stay in
    ``cited_pmids`` (they still count for bibliographic coupling) but
    produce no reverse edges.
    """
    path = Path(source)
    if format == "jsonl":
        records, errors = _parse_jsonl(path)
    elif format == "jats_xml":
        records, errors = _parse_jats(path)
    else:
        raise ValueError(f"unknown corpus format: {format!r}")
    papers: dict[str, PaperRecord] = {}
    for record in records:
        if record.pmid in papers:
            raise DuplicatePmidError(f"duplicate pmid: {record.pmid}")
        papers[record.pmid] = record
    return CorpusIndex(papers), errors


def write_corpus_jsonl(index: CorpusIndex, path: str | Path) -> None:
    """Write the normalized snapshot, one sorted paper per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for pmid in index.papers:
            fh.write(json.dumps(record_to_dict(index.papers[pmid]), ensure_ascii=False))
            fh.write("\n")


def write_ingest_report(errors: list[IngestError], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for err in errors:
            fh.write(err.to_json())
            fh.write("\n")
