"""Extractive review generation over a citation-linked paper corpus."""

from .assemble import ReviewEntry, assemble_review, parse_entries, render
from .corpus import (
    CorpusIndex,
    DuplicatePmidError,
    IngestError,
    PaperRecord,
    cited_in_text,
    ingest_corpus,
    split_sentences,
    strip_citation_markers,
    write_corpus_jsonl,
)
from .evaluate import (
    AnnotationRecord,
    AnnotationReport,
    BenchmarkResult,
    OracleScorer,
    RandomScorer,
    annotation_report,
    benchmark,
    read_annotations,
)
from .graph import (
    Edge,
    SimilarityGraph,
    TopicPartition,
    bibliographic_coupling,
    build_similarity_graph,
    cocitation_counts,
    detect_topics,
    modularity,
    search_papers,
    select_key_papers,
    tfidf_cosine,
)
from .labels import (
    CitationContext,
    LabeledBlock,
    NoCitationContexts,
    SentenceBlock,
    build_training_set,
    compute_targets,
    extract_citation_contexts,
    make_blocks,
    read_blocks_jsonl,
    write_blocks_jsonl,
)
from .metrics import RougeReference, mse, ngram_counts, rouge_combined, rouge_n, tokenize
from .scorer import (
    FEATURE_VERSION,
    BaselineScorer,
    ExternalScorer,
    FeatureExtractor,
    ScorerModel,
    ScorerProtocolError,
    aggregate_scores,
    score_blocks,
    score_sentences,
    train_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "AnnotationReport",
    "BaselineScorer",
    "BenchmarkResult",
    "CitationContext",
    "CorpusIndex",
    "DuplicatePmidError",
    "Edge",
    "ExternalScorer",
    "FEATURE_VERSION",
    "FeatureExtractor",
    "IngestError",
    "LabeledBlock",
    "NoCitationContexts",
    "OracleScorer",
    "PaperRecord",
    "RandomScorer",
    "ReviewEntry",
    "RougeReference",
    "ScorerModel",
    "ScorerProtocolError",
    "SentenceBlock",
    "SimilarityGraph",
    "TopicPartition",
    "aggregate_scores",
    "annotation_report",
    "assemble_review",
    "benchmark",
    "bibliographic_coupling",
    "build_similarity_graph",
    "build_training_set",
    "cited_in_text",
    "cocitation_counts",
    "compute_targets",
    "detect_topics",
    "extract_citation_contexts",
    "ingest_corpus",
    "make_blocks",
    "modularity",
    "mse",
    "ngram_counts",
    "parse_entries",
    "read_annotations",
    "read_blocks_jsonl",
    "render",
    "rouge_combined",
    "rouge_n",
    "score_blocks",
    "score_sentences",
    "search_papers",
    "select_key_papers",
    "split_sentences",
    "strip_citation_markers",
    "tfidf_cosine",
    "tokenize",
    "train_baseline",
    "write_blocks_jsonl",
    "write_corpus_jsonl",
]
