"""Sentence scoring: baseline linear regressor and external scorer client.

The baseline replaces a neural sentence encoder with six explicit
features per sentence, keeping the regression objective, block handling
and the rest of the pipeline fully testable on a desk-scale corpus:

    f1  relative position in the paper, in [0, 1]
    f2  token count over the paper's longest sentence
    f3  combined ROUGE against the paper's abstract
    f4  combined ROUGE against the paper's title
    f5  mean corpus IDF of the sentence tokens, scaled to [0, 1]
    f6  1 if any token contains a digit, else 0

Training is full-batch gradient descent on mean squared error against
the block targets.  Features are standardized internally for
conditioning; stored weights are always in raw feature space.

External scorers are child processes speaking line-delimited JSON over
stdin/stdout.  Server first: ``{"protocol": "scorer/1", "max_block": N}``.
Then one request ``{"id": int, "sentences": [str]}`` per line, answered
by ``{"id": int, "scores": [float]}`` with matching id and length.  Any
malformed line aborts the session.  Exactly one request is in flight
per connection.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .corpus import CorpusIndex, strip_citation_markers
from .labels import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_INTERSECTION,
    LabeledBlock,
    SentenceBlock,
    make_blocks,
)
from .metrics import RougeReference, tokenize

FEATURE_VERSION = 1
FEATURE_NAMES = (
    "position",
    "rel_length",
    "rouge_abstract",
    "rouge_title",
    "mean_idf",
    "has_numeric",
)
PROTOCOL_NAME = "scorer/1"


class ScorerProtocolError(RuntimeError):
    """External scorer session failed; carries the offending block id."""


class FeatureExtractor:
    """Deterministic per-sentence features over one corpus index."""

    def __init__(self, index: CorpusIndex):
        self.index = index
        self._n_docs = len(index.papers)
        df: Counter = Counter()
        for record in index.papers.values():
            df.update(set(tokenize(record.title + " " + record.abstract)))
        self._df = df
        self._idf_cap = math.log(1.0 + self._n_docs) if self._n_docs else 1.0
        self._paper_cache: dict[str, tuple[list[list[str]], int, RougeReference, RougeReference]] = {}

    def _paper_stats(self, pmid: str):
        cached = self._paper_cache.get(pmid)
        if cached is None:
            record = self.index.paper(pmid)
            token_lists = [
                tokenize(strip_citation_markers(s)) for s in record.body_sentences
            ]
            max_len = max((len(t) for t in token_lists), default=0)
            abstract_ref = RougeReference([record.abstract])
            title_ref = RougeReference([record.title])
            cached = (token_lists, max_len, abstract_ref, title_ref)
            self._paper_cache[pmid] = cached
        return cached

    def _idf(self, token: str) -> float:
        return math.log((1.0 + self._n_docs) / (1.0 + self._df.get(token, 0)))

    def features(self, pmid: str, sentence_index: int) -> np.ndarray:
        record = self.index.paper(pmid)
        n = len(record.body_sentences)
        if not 0 <= sentence_index < n:
            raise IndexError(f"sentence {sentence_index} out of range for {pmid} ({n})")
        token_lists, max_len, abstract_ref, title_ref = self._paper_stats(pmid)
        tokens = token_lists[sentence_index]
        sentence = strip_citation_markers(record.body_sentences[sentence_index])
        f1 = sentence_index / (n - 1) if n > 1 else 0.0
        f2 = len(tokens) / max_len if max_len else 0.0
        f3 = abstract_ref.combined(sentence)
        f4 = title_ref.combined(sentence)
        if tokens and self._idf_cap > 0:
            f5 = sum(self._idf(t) for t in tokens) / len(tokens) / self._idf_cap
        else:
            f5 = 0.0
        f6 = 1.0 if any(any(c.isdigit() for c in t) for t in tokens) else 0.0
        return np.array([f1, f2, f3, f4, f5, f6], dtype=np.float64)

    def block_matrix(self, block: SentenceBlock) -> np.ndarray:
        return np.stack([self.features(block.pmid, i) for i in block.indices])


def featurize(index: CorpusIndex, paper: str, sentence_index: int) -> np.ndarray:
    """One-off feature vector; build a FeatureExtractor for bulk use."""
    return FeatureExtractor(index).features(paper, sentence_index)


@dataclass
class ScorerModel:
    weights: np.ndarray
    bias: float
    training_log: list[tuple[int, float]] = field(default_factory=list)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights + self.bias

    def save(self, path: str | Path) -> None:
        payload = {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "feature_version": FEATURE_VERSION,
        }
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ScorerModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        version = payload.get("feature_version")
        if version != FEATURE_VERSION:
            raise ValueError(
                f"model feature_version {version} does not match {FEATURE_VERSION}"
            )
        return cls(
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
        )


def train_baseline(
    blocks: Sequence[LabeledBlock],
    index: CorpusIndex,
    epochs: int = 2000,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> ScorerModel:
    """Fit the linear baseline by full-batch gradient descent.

    Deterministic given (blocks, seed, hyperparameters): weights start
    from a tiny seeded normal draw and the loss of every epoch lands in
    ``training_log``.
    """
    if not blocks:
        raise ValueError("cannot train on an empty block list")
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
    extractor = FeatureExtractor(index)
    X = np.concatenate([extractor.block_matrix(b) for b in blocks], axis=0)
    r = np.concatenate([np.asarray(b.targets, dtype=np.float64) for b in blocks])

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std_safe = np.where(std > 0, std, 1.0)
    Xs = (X - mean) / std_safe

    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 1e-3, size=X.shape[1])
    b = 0.0
    losses = np.zeros(epochs, dtype=np.float64)
    b = float(_kernels.gd_fit(Xs, r, w, b, learning_rate, epochs, losses))

    # undo standardization so stored weights apply to raw features
    raw_w = w / std_safe
    raw_b = b - float(raw_w @ mean)
    log = [(e, float(losses[e])) for e in range(epochs)]
    return ScorerModel(weights=raw_w, bias=raw_b, training_log=log)


class BaselineScorer:
    """Scores blocks with a trained linear model over extracted features."""

    def __init__(self, model: ScorerModel, index: CorpusIndex):
        self.model = model
        self.extractor = FeatureExtractor(index)

    def score_block(self, block: SentenceBlock) -> list[float]:
        return [float(s) for s in self.model.predict(self.extractor.block_matrix(block))]

    def close(self) -> None:
        pass


class ExternalScorer:
    """Client for a scorer child process speaking the line protocol."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._next_id = 0
        handshake = self._read_line("handshake")
        try:
            header = json.loads(handshake)
            protocol = header["protocol"]
            self.max_block = int(header["max_block"])
        except (ValueError, KeyError, TypeError):
            self._abort()
            raise ScorerProtocolError(f"malformed handshake: {handshake!r}")
        if protocol != PROTOCOL_NAME:
            self._abort()
            raise ScorerProtocolError(f"unsupported protocol: {protocol!r}")

    def _read_line(self, what: str) -> str:
        line = self._proc.stdout.readline()
        if not line:
            self._abort()
            raise ScorerProtocolError(f"scorer closed the stream before {what}")
        return line.rstrip("\n")

    def _abort(self) -> None:
        try:
            self._proc.kill()
        except OSError:
            pass
        self._proc.wait()

    def score_block(self, block: SentenceBlock) -> list[float]:
        label = f"{block.pmid}[{block.start}]"
        if not block.sentences:
            raise ScorerProtocolError(f"empty block {label}")
        if len(block.sentences) > self.max_block:
            raise ScorerProtocolError(
                f"block {label} has {len(block.sentences)} sentences, "
                f"server limit is {self.max_block}"
            )
        request_id = self._next_id
        self._next_id += 1
        try:
            self._proc.stdin.write(
                json.dumps({"id": request_id, "sentences": block.sentences}) + "\n"
            )
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._abort()
            raise ScorerProtocolError(f"scorer pipe broke on block {label}: {exc}")
        line = self._read_line(f"response for block {label}")
        try:
            response = json.loads(line)
            scores = [float(s) for s in response["scores"]]
            ok = response["id"] == request_id and len(scores) == len(block.sentences)
        except (ValueError, KeyError, TypeError):
            ok = False
        if not ok or any(not math.isfinite(s) for s in scores):
            self._abort()
            raise ScorerProtocolError(f"malformed response for block {label}: {line!r}")
        return scores

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._abort()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def score_blocks(scorer, blocks: Sequence[SentenceBlock]) -> list[np.ndarray]:
    """One finite score per sentence per block; fails loudly, never partially."""
    results = []
    for block in blocks:
        scores = np.asarray(scorer.score_block(block), dtype=np.float64)
        if scores.shape != (len(block.sentences),) or not np.isfinite(scores).all():
            raise ScorerProtocolError(
                f"scorer returned bad scores for {block.pmid}[{block.start}]"
            )
        results.append(scores)
    return results


def aggregate_scores(
    block_scores: Sequence[Sequence[float]],
    blocks: Sequence[range],
    mode: str = "mean",
) -> np.ndarray:
    """Per-sentence scores from overlapping block scores.

    ``mean`` averages every block score covering a sentence; ``max``
    takes the largest.  Block order does not matter.  Blocks must cover
    a dense index range starting at 0.
    """
    if mode not in ("mean", "max"):
        raise ValueError(f"unknown aggregation mode: {mode!r}")
    if len(block_scores) != len(blocks):
        raise ValueError("block_scores and blocks length mismatch")
    n = max((rng.stop for rng in blocks), default=0)
    sums = np.zeros(n, dtype=np.float64)
    counts = np.zeros(n, dtype=np.int64)
    best = np.full(n, -np.inf, dtype=np.float64)
    for scores, rng in zip(block_scores, blocks):
        if len(scores) != len(rng):
            raise ValueError(f"scores length {len(scores)} != block length {len(rng)}")
        for offset, i in enumerate(rng):
            sums[i] += scores[offset]
            counts[i] += 1
            best[i] = max(best[i], scores[offset])
    if (counts == 0).any():
        missing = int(np.argmin(counts))
        raise RuntimeError(f"sentence {missing} not covered by any block")
    return sums / counts if mode == "mean" else best


def score_sentences(
    scorer,
    pmid: str,
    sentences: Sequence[str],
    block_size: int = DEFAULT_BLOCK_SIZE,
    intersection: int = DEFAULT_INTERSECTION,
    mode: str = "mean",
) -> np.ndarray:
    """Block, score and aggregate a whole paper's sentences."""
    ranges = make_blocks(len(sentences), block_size, intersection)
    blocks = [
        SentenceBlock(pmid=pmid, start=r.start, sentences=[sentences[i] for i in r])
        for r in ranges
    ]
    return aggregate_scores(score_blocks(scorer, blocks), ranges, mode=mode)
