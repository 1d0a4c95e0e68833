"""Citation-derived similarity structures, topic detection, key-paper ranking.

Pairwise similarity between candidate papers combines four signals:
direct citation (either direction, 0/1), co-citation count (papers citing
both), bibliographic coupling (shared references, external ones included),
and TF-IDF cosine over title+abstract.  Count components are normalized by
the maximum observed in the candidate set before the weighted sum.

Topics come from Louvain modularity optimization with a seeded node visit
order, so runs reproduce exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import CorpusIndex
from .metrics import tokenize

RANK_MODES = ("cited", "recent", "relevant")


@dataclass
class Edge:
    """Undirected weighted edge with its per-component breakdown."""

    u: str
    v: str
    weight: float
    citation: int
    cocitation: int
    coupling: int
    text: float


@dataclass
class SimilarityGraph:
    nodes: list[str]
    edges: list[Edge]
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def to_tsv(self) -> str:
        lines = ["pmid1\tpmid2\tweight\tcitation\tcocitation\tcoupling\ttext"]
        for e in self.edges:
            lines.append(
                f"{e.u}\t{e.v}\t{e.weight!r}\t{e.citation}\t{e.cocitation}"
                f"\t{e.coupling}\t{e.text!r}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class TopicPartition:
    assignment: dict[str, int]
    modularity: float
    # modularity after each aggregation level, for monotonicity checks
    history: tuple[float, ...] = field(default_factory=tuple)

    def to_tsv(self) -> str:
        lines = ["pmid\ttopic"]
        for pmid in sorted(self.assignment):
            lines.append(f"{pmid}\t{self.assignment[pmid]}")
        return "\n".join(lines) + "\n"


def _doc_tokens(index: CorpusIndex, pmid: str) -> list[str]:
    record = index.paper(pmid)
    return tokenize(record.title + " " + record.abstract)


def _idf_table(doc_tokens: dict[str, list[str]]) -> dict[str, float]:
    n_docs = len(doc_tokens)
    df: Counter = Counter()
    for tokens in doc_tokens.values():
        df.update(set(tokens))
    return {t: math.log((1 + n_docs) / (1 + d)) for t, d in df.items()}


def search_papers(
    index: CorpusIndex, query: str, rank_by: str = "cited", limit: int = 20
) -> list[str]:
    """Papers whose title+abstract contain every query token, ranked.

    ``cited`` ranks by citation count within the corpus, ``recent`` by
    year, ``relevant`` by TF-IDF cosine between the query and the
    title+abstract (idf over the whole corpus).  Ties always fall back to
    citation count desc, year desc, then pmid ascending, so the result is
    a total order.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if rank_by not in RANK_MODES:
        raise ValueError(f"rank_by must be one of {RANK_MODES}, got {rank_by!r}")
    query_tokens = tokenize(query)
    if not query_tokens:
        raise ValueError("empty query")

    matches = []
    for pmid in index.papers:
        tokens = set(_doc_tokens(index, pmid))
        if all(q in tokens for q in query_tokens):
            matches.append(pmid)
    if not matches:
        return []

    if rank_by == "relevant":
        doc_tokens = {p: _doc_tokens(index, p) for p in index.papers}
        idf = _idf_table(doc_tokens)
        relevance = {
            p: _cosine(_tfidf_vector(Counter(query_tokens), idf),
                       _tfidf_vector(Counter(doc_tokens[p]), idf))
            for p in matches
        }

    def sort_key(pmid: str):
        record = index.paper(pmid)
        if rank_by == "cited":
            primary = index.citation_count(pmid)
        elif rank_by == "recent":
            primary = record.year
        else:
            primary = relevance[pmid]
        return (-primary, -index.citation_count(pmid), -record.year, pmid)

    return sorted(matches, key=sort_key)[:limit]


def _canonical(p: str, q: str) -> tuple[str, str]:
    return (p, q) if p < q else (q, p)


def cocitation_counts(
    index: CorpusIndex, candidates: Iterable[str]
) -> dict[tuple[str, str], int]:
    """Number of distinct papers citing both members of each pair."""
    members = set(candidates)
    counts: Counter = Counter()
    for record in index.papers.values():
        cited = sorted(set(record.cited_pmids) & members)
        for i in range(len(cited)):
            for j in range(i + 1, len(cited)):
                counts[(cited[i], cited[j])] += 1
    return dict(counts)


def bibliographic_coupling(
    index: CorpusIndex, candidates: Iterable[str]
) -> dict[tuple[str, str], int]:
    """Size of the shared-reference set for each candidate pair.

    References outside the corpus snapshot still count.
    """
    members = sorted(set(candidates))
    refs = {p: set(index.paper(p).cited_pmids) for p in members}
    counts = {}
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            shared = len(refs[members[i]] & refs[members[j]])
            if shared:
                counts[(members[i], members[j])] = shared
    return counts


def _tfidf_vector(tf: Counter, idf: dict[str, float]) -> dict[str, float]:
    # presence guard: +1 keeps a term positive even when it appears in
    # every document, so identical documents always reach cosine 1
    return {t: c * idf.get(t, 0.0) + 1.0 for t, c in tf.items()}


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def tfidf_cosine(
    index: CorpusIndex, candidates: Iterable[str]
) -> dict[tuple[str, str], float]:
    """Pairwise cosine of TF-IDF vectors over title+abstract.

    Term weight is ``tf * ln((1+N)/(1+df)) + 1`` for present terms, with
    N and df taken over the candidate set.  A document with no tokens has
    similarity 0 against everything.
    """
    members = sorted(set(candidates))
    if len(members) < 2:
        raise ValueError("need at least 2 candidate documents")
    doc_tokens = {p: _doc_tokens(index, p) for p in members}
    idf = _idf_table(doc_tokens)
    vectors = {p: _tfidf_vector(Counter(doc_tokens[p]), idf) for p in members}
    sims = {}
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            sims[(members[i], members[j])] = _cosine(
                vectors[members[i]], vectors[members[j]]
            )
    return sims


def build_similarity_graph(
    index: CorpusIndex,
    candidates: Iterable[str],
    weights: Sequence[float] = (1.0, 1.0, 1.0, 1.0),
) -> SimilarityGraph:
    """Hybrid similarity graph over the candidate set.

    Combined edge weight is
    ``w_cit*citation + w_cocit*norm(cocitation) + w_coup*norm(coupling)
    + w_text*text`` where the count components are divided by their
    maximum over the candidate set (0 when the maximum is 0).  Edges with
    zero combined weight are dropped.
    """
    w_cit, w_cocit, w_coup, w_text = (float(w) for w in weights)
    if min(w_cit, w_cocit, w_coup, w_text) < 0:
        raise ValueError("similarity weights must be non-negative")
    if w_cit == w_cocit == w_coup == w_text == 0.0:
        raise ValueError("at least one similarity weight must be positive")
    members = sorted(set(candidates))
    if len(members) < 2:
        return SimilarityGraph(nodes=members, edges=[], weights=(w_cit, w_cocit, w_coup, w_text))

    cocit = cocitation_counts(index, members)
    coup = bibliographic_coupling(index, members)
    text = tfidf_cosine(index, members)
    max_cocit = max(cocit.values(), default=0)
    max_coup = max(coup.values(), default=0)

    edges = []
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            pair = (members[i], members[j])
            p, q = pair
            cites = int(
                q in index.paper(p).cited_pmids or p in index.paper(q).cited_pmids
            )
            n_cocit = cocit.get(pair, 0)
            n_coup = coup.get(pair, 0)
            sim = text.get(pair, 0.0)
            weight = (
                w_cit * cites
                + w_cocit * (n_cocit / max_cocit if max_cocit else 0.0)
                + w_coup * (n_coup / max_coup if max_coup else 0.0)
                + w_text * sim
            )
            if weight > 0:
                edges.append(Edge(p, q, weight, cites, n_cocit, n_coup, sim))
    return SimilarityGraph(nodes=members, edges=edges, weights=(w_cit, w_cocit, w_coup, w_text))


def modularity(
    nodes: Sequence[str],
    edges: Sequence[Edge],
    assignment: dict[str, int],
    resolution: float = 1.0,
) -> float:
    """Weighted Newman modularity of a node partition."""
    total = sum(e.weight for e in edges)
    if total == 0.0:
        return 0.0
    degree: dict[str, float] = {n: 0.0 for n in nodes}
    internal: dict[int, float] = {}
    for e in edges:
        degree[e.u] += e.weight
        degree[e.v] += e.weight
        if assignment[e.u] == assignment[e.v]:
            internal[assignment[e.u]] = internal.get(assignment[e.u], 0.0) + e.weight
    tot: dict[int, float] = {}
    for n in nodes:
        c = assignment[n]
        tot[c] = tot.get(c, 0.0) + degree[n]
    q = 0.0
    for c, k in tot.items():
        q += internal.get(c, 0.0) / total - resolution * (k / (2.0 * total)) ** 2
    return q


def _csr(n: int, edge_list: list[tuple[int, int, float]]):
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in edge_list:
        adj[u].append((v, w))
        adj[v].append((u, w))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(adj[i])
    indices = np.empty(indptr[-1], dtype=np.int64)
    weights = np.empty(indptr[-1], dtype=np.float64)
    pos = 0
    for i in range(n):
        for v, w in sorted(adj[i]):
            indices[pos] = v
            weights[pos] = w
            pos += 1
    return indptr, indices, weights


def detect_topics(
    graph: SimilarityGraph, resolution: float = 1.0, seed: int = 0
) -> TopicPartition:
    """Louvain community detection: local moving plus graph aggregation.

    Node visit order is shuffled by a generator seeded with ``seed``,
    which makes the outcome reproducible.  Topic ids are dense from 0,
    assigned by first appearance over the sorted node list.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        raise ValueError("graph has no nodes")
    node_id = {p: i for i, p in enumerate(nodes)}
    n = len(nodes)
    base_edges = [
        (node_id[e.u], node_id[e.v], float(e.weight)) for e in graph.edges if e.weight > 0
    ]
    if not base_edges:
        assignment = {p: i for i, p in enumerate(nodes)}
        return TopicPartition(assignment=assignment, modularity=0.0, history=(0.0,))

    rng = np.random.default_rng(seed)
    # membership[i]: community of original node i, in current-level labels
    membership = np.arange(n, dtype=np.int64)
    level_edges = base_edges
    level_n = n
    self_weight = np.zeros(level_n, dtype=np.float64)
    history = []

    while True:
        indptr, indices, weights = _csr(level_n, level_edges)
        degree = np.zeros(level_n, dtype=np.float64)
        for u, v, w in level_edges:
            degree[u] += w
            degree[v] += w
        degree += 2.0 * self_weight
        m2 = float(degree.sum())
        comm = np.arange(level_n, dtype=np.int64)
        comm_tot = degree.copy()
        neigh_w = np.zeros(level_n, dtype=np.float64)
        touched = np.zeros(level_n, dtype=np.int64)

        while True:
            order = rng.permutation(level_n).astype(np.int64)
            moves = _kernels.louvain_pass(
                indptr, indices, weights, order, comm, comm_tot,
                degree, m2, resolution, neigh_w, touched,
            )
            if moves == 0:
                break

        labels = np.unique(comm)
        relabel = {int(old): new for new, old in enumerate(labels)}
        comm = np.array([relabel[int(c)] for c in comm], dtype=np.int64)
        membership = comm[membership]
        history.append(float(_partition_modularity(base_edges, n, membership, resolution)))
        if labels.size == level_n:
            break

        # aggregate: communities become nodes, intra weight becomes self weight
        new_n = labels.size
        new_self = np.zeros(new_n, dtype=np.float64)
        for i in range(level_n):
            new_self[comm[i]] += self_weight[i]
        agg: dict[tuple[int, int], float] = {}
        for u, v, w in level_edges:
            cu, cv = int(comm[u]), int(comm[v])
            if cu == cv:
                new_self[cu] += w
            else:
                key = (cu, cv) if cu < cv else (cv, cu)
                agg[key] = agg.get(key, 0.0) + w
        level_edges = [(u, v, w) for (u, v), w in sorted(agg.items())]
        self_weight = new_self
        level_n = new_n

    # dense topic ids by first appearance over sorted pmids
    remap: dict[int, int] = {}
    assignment = {}
    for i, pmid in enumerate(nodes):
        c = int(membership[i])
        if c not in remap:
            remap[c] = len(remap)
        assignment[pmid] = remap[c]
    final_q = history[-1] if history else 0.0
    return TopicPartition(assignment=assignment, modularity=final_q, history=tuple(history))


def _partition_modularity(
    base_edges: list[tuple[int, int, float]],
    n: int,
    membership: np.ndarray,
    resolution: float,
) -> float:
    total = sum(w for _, _, w in base_edges)
    if total == 0.0:
        return 0.0
    degree = np.zeros(n, dtype=np.float64)
    internal: dict[int, float] = {}
    for u, v, w in base_edges:
        degree[u] += w
        degree[v] += w
        if membership[u] == membership[v]:
            c = int(membership[u])
            internal[c] = internal.get(c, 0.0) + w
    tot: dict[int, float] = {}
    for i in range(n):
        c = int(membership[i])
        tot[c] = tot.get(c, 0.0) + degree[i]
    q = 0.0
    for c, k in tot.items():
        q += internal.get(c, 0.0) / total - resolution * (k / (2.0 * total)) ** 2
    return q


def select_key_papers(ranked: Sequence[str], k: int) -> list[str]:
    """First ``min(k, len)`` entries of an already-ranked pmid list."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return list(ranked[:k])
