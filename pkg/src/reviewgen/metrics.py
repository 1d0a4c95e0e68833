"""Recall-oriented n-gram metrics and the regression loss.

ROUGE-n here is the multi-reference recall form: clipped n-gram matches
(min of reference and candidate counts, summed over references) divided
by the total reference n-gram count.  The combined score averages the
n=1 and n=2 values.  A zero denominator yields 0 rather than an error,
so degenerate single-token sentences never abort label generation.

Tokenization is deliberately dumb and deterministic: lowercase, split on
anything that is not a letter or digit (underscore included), keep
digits and non-ASCII letters.  No stemming, no stopwords.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Sequence

import numpy as np

from . import _kernels

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# keys are packed into int64 by Horner's rule; beyond this the dict path is used
_PACK_LIMIT = np.int64(2) ** 62


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens in document order."""
    return _TOKEN_RE.findall(text.lower())


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Occurrence counts of every contiguous n-gram (as token tuples)."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


class RougeReference:
    """Reference side of ROUGE, precomputed for repeated candidates.

    Labeling and benchmarking score many candidate sentences against one
    fixed reference set, so the per-reference n-gram tables are built
    once.  Tokens are mapped to integer ids (candidate-only tokens all
    collapse to id 0, which can never match a reference key) and n-grams
    are packed into sorted int64 key arrays for the matching kernel;
    orders whose packed keys would overflow fall back to Counter dicts.
    """

    def __init__(self, reference_texts: Sequence[str], orders: Sequence[int] = (1, 2)):
        for n in orders:
            if n < 1:
                raise ValueError(f"n-gram order must be >= 1, got {n}")
        self.orders = tuple(orders)
        ref_tokens = [tokenize(t) for t in reference_texts]
        self._vocab: dict[str, int] = {}
        for toks in ref_tokens:
            for tok in toks:
                if tok not in self._vocab:
                    # id 0 is reserved for candidate-only tokens
                    self._vocab[tok] = len(self._vocab) + 1
        self._base = np.int64(len(self._vocab) + 1)
        self._packed: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}
        self._counters: dict[int, list[Counter]] = {}
        self._denominators: dict[int, int] = {}
        for n in self.orders:
            self._denominators[n] = sum(max(0, len(t) - n + 1) for t in ref_tokens)
            if self._packable(n):
                tables = []
                for toks in ref_tokens:
                    keys = _kernels.pack_ngrams(self._ids(toks), n, self._base)
                    tables.append(_kernels.unique_counts(np.sort(keys)))
                self._packed[n] = tables
            else:
                self._counters[n] = [ngram_counts(t, n) for t in ref_tokens]

    def _packable(self, n: int) -> bool:
        return int(self._base) ** n < int(_PACK_LIMIT)

    def _ids(self, tokens: Sequence[str]) -> np.ndarray:
        vocab = self._vocab
        return np.fromiter(
            (vocab.get(t, 0) for t in tokens), dtype=np.int64, count=len(tokens)
        )

    def _score_token_lists(self, token_lists: Sequence[Sequence[str]], n: int) -> float:
        if n not in self._denominators:
            raise ValueError(f"order {n} not precomputed (have {self.orders})")
        denominator = self._denominators[n]
        if denominator == 0:
            return 0.0
        matched = 0
        if n in self._packed:
            arrays = [
                _kernels.pack_ngrams(self._ids(toks), n, self._base)
                for toks in token_lists
            ]
            keys = np.concatenate(arrays) if arrays else np.empty(0, dtype=np.int64)
            if keys.size == 0:
                return 0.0
            cand_keys, cand_counts = _kernels.unique_counts(np.sort(keys))
            for ref_keys, ref_counts in self._packed[n]:
                matched += int(
                    _kernels.clipped_overlap(ref_keys, ref_counts, cand_keys, cand_counts)
                )
        else:
            cand: Counter = Counter()
            for toks in token_lists:
                cand.update(ngram_counts(toks, n))
            for ref in self._counters[n]:
                matched += sum(min(c, cand[g]) for g, c in ref.items() if g in cand)
        return matched / denominator

    def score(self, candidate: str, n: int) -> float:
        """ROUGE-n of the candidate against the stored references."""
        return self._score_token_lists([tokenize(candidate)], n)

    def score_parts(self, parts: Sequence[str], n: int) -> float:
        """ROUGE-n of a multi-sentence candidate.

        Each part contributes its own n-grams; no n-gram spans a part
        boundary, so adding parts can only grow the match count.  This
        makes top-n summary scores exactly non-decreasing in n.
        """
        return self._score_token_lists([tokenize(p) for p in parts], n)

    def combined(self, candidate: str) -> float:
        """Mean ROUGE over the precomputed orders."""
        return sum(self.score(candidate, n) for n in self.orders) / len(self.orders)

    def combined_parts(self, parts: Sequence[str]) -> float:
        """Mean ROUGE over the precomputed orders for a multi-part candidate."""
        return sum(self.score_parts(parts, n) for n in self.orders) / len(self.orders)


def rouge_n(reference_texts: Sequence[str], candidate: str, n: int) -> float:
    """Multi-reference ROUGE-n with clipped matches, in [0, 1].

    Returns 0 when the references contain no n-grams at all.
    """
    return RougeReference(reference_texts, (n,)).score(candidate, n)


def rouge_combined(reference_texts: Sequence[str], candidate: str) -> float:
    """Mean of ROUGE-1 and ROUGE-2."""
    return RougeReference(reference_texts, (1, 2)).combined(candidate)


def mse(predicted: Sequence[float], target: Sequence[float]) -> float:
    """Mean squared error between two equal-length score vectors."""
    y = np.asarray(predicted, dtype=np.float64)
    r = np.asarray(target, dtype=np.float64)
    if y.shape != r.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: {y.shape} vs {r.shape}")
    if y.size == 0:
        raise ValueError("mse of empty vectors is undefined")
    d = y - r
    return float(d @ d) / y.size
