"""Pipeline command line: ingest, graph, labels, train, review, benchmark, report.

Stages communicate through plain files in a workspace directory:

    workspace/
      index/    corpus.jsonl, ingest_report.jsonl
      graph/    members.txt, graph.tsv, topics.tsv
      labels/   blocks.jsonl
      models/   baseline.json, training_log.tsv
      reviews/  review.tsv, review.md, review.json
      bench/    benchmark.tsv, summary.tsv, annotation_report.tsv/.md

Configuration is a key=value file plus per-flag overrides.  Exit codes:
0 success, 1 runtime failure, 2 invalid config or usage or locked
workspace, 3 missing upstream artifact (the message names the stage to
run).  A lock file guards each workspace against concurrent runs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .assemble import assemble_review, render
from .corpus import CorpusIndex, DuplicatePmidError, ingest_corpus, write_corpus_jsonl, write_ingest_report
from .evaluate import (
    OracleScorer,
    RandomScorer,
    annotation_report,
    benchmark,
    read_annotations,
)
from .graph import (
    RANK_MODES,
    build_similarity_graph,
    detect_topics,
    search_papers,
    select_key_papers,
)
from .labels import build_training_set, read_blocks_jsonl, write_blocks_jsonl
from .scorer import (
    BaselineScorer,
    ExternalScorer,
    ScorerModel,
    score_sentences,
    train_baseline,
)
from .corpus import strip_citation_markers

STAGE_DIRS = ("index", "graph", "labels", "models", "reviews", "bench")


class ConfigError(ValueError):
    pass


class MissingStageError(RuntimeError):
    def __init__(self, stage: str, path: Path):
        super().__init__(f"missing artifact {path}; run the '{stage}' stage first")
        self.stage = stage


@dataclass
class PipelineConfig:
    corpus: str = ""
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    block_size: int = 10
    intersection: int = 5
    window: int = 0
    scorer: str = "baseline"
    rank_by: str = "cited"
    k: int = 20
    per_paper: int = 1
    seed: int = 0
    search_limit: int = 100
    aggregation: str = "mean"

    def validate(self) -> None:
        if self.block_size <= self.intersection:
            raise ConfigError(
                f"block_size ({self.block_size}) must exceed intersection "
                f"({self.intersection})"
            )
        if self.intersection < 0 or self.window < 0:
            raise ConfigError("intersection and window must be >= 0")
        if self.k < 1 or self.per_paper < 1 or self.search_limit < 1:
            raise ConfigError("k, per_paper and search_limit must be >= 1")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ConfigError(f"weights must be 4 non-negative numbers, got {self.weights}")
        if self.rank_by not in RANK_MODES:
            raise ConfigError(f"rank_by must be one of {RANK_MODES}")
        if self.aggregation not in ("mean", "max"):
            raise ConfigError("aggregation must be 'mean' or 'max'")
        if self.scorer != "baseline" and not self.scorer.startswith("external:"):
            raise ConfigError(
                f"scorer must be 'baseline' or 'external:<command>', got {self.scorer!r}"
            )


_INT_KEYS = ("block_size", "intersection", "window", "k", "per_paper", "seed", "search_limit")
_STR_KEYS = ("corpus", "scorer", "rank_by", "aggregation")


def _apply_config_pair(config: PipelineConfig, key: str, value: str) -> PipelineConfig:
    key = key.strip()
    value = value.strip()
    if key == "weights":
        parts = value.split(",")
        try:
            weights = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"weights must be numbers, got {value!r}")
        return replace(config, weights=weights)
    if key in _INT_KEYS:
        try:
            return replace(config, **{key: int(value)})
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}")
    if key in _STR_KEYS:
        return replace(config, **{key: value})
    raise ConfigError(f"unknown config key: {key!r}")


def load_config(path: str | Path | None, overrides: list[str] = ()) -> PipelineConfig:
    """Defaults, then a key=value file, then --set overrides, then validate."""
    config = PipelineConfig()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            config = _apply_config_pair(config, key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        config = _apply_config_pair(config, key, value)
    config.validate()
    return config


@dataclass
class Workspace:
    root: Path

    def path(self, stage: str, name: str) -> Path:
        return self.root / stage / name

    def require(self, stage: str, name: str, needed_by_stage: str) -> Path:
        p = self.path(stage, name)
        if not p.exists():
            raise MissingStageError(needed_by_stage, p)
        return p

    def prepare(self) -> None:
        for stage in STAGE_DIRS:
            (self.root / stage).mkdir(parents=True, exist_ok=True)


class WorkspaceLock:
    def __init__(self, root: Path):
        self.path = root / "workspace.lock"

    def __enter__(self):
        try:
            with open(self.path, "x", encoding="utf-8") as fh:
                fh.write("locked\n")
        except FileExistsError:
            raise ConfigError(
                f"workspace is locked ({self.path}); remove the lock if no other run is active"
            )
        return self

    def __exit__(self, *exc_info):
        self.path.unlink(missing_ok=True)


def _load_index(ws: Workspace, for_stage: str) -> CorpusIndex:
    path = ws.require("index", "corpus.jsonl", "ingest")
    index, errors = ingest_corpus(path)
    if errors:
        raise RuntimeError(f"cached index {path} is corrupt ({len(errors)} bad lines)")
    return index


def _make_scorer(name: str, config: PipelineConfig, ws: Workspace, index: CorpusIndex):
    if name == "baseline":
        model_path = ws.require("models", "baseline.json", "train")
        return BaselineScorer(ScorerModel.load(model_path), index)
    if name.startswith("external:"):
        return ExternalScorer(name[len("external:"):])
    if name == "oracle":
        return OracleScorer(index, window=config.window)
    if name == "random":
        return RandomScorer(seed=config.seed)
    raise ConfigError(f"unknown scorer backend: {name!r}")


def cmd_ingest(args, config: PipelineConfig, ws: Workspace) -> int:
    source = args.corpus or config.corpus
    if not source:
        raise ConfigError("no corpus path given (config 'corpus' or --corpus)")
    if not Path(source).exists():
        print(f"corpus file not found: {source}", file=sys.stderr)
        return 1
    index, errors = ingest_corpus(source, format=args.format)
    write_corpus_jsonl(index, ws.path("index", "corpus.jsonl"))
    write_ingest_report(errors, ws.path("index", "ingest_report.jsonl"))
    print(f"ingested {len(index)} papers ({len(errors)} rejected lines)")
    return 0


def cmd_graph(args, config: PipelineConfig, ws: Workspace) -> int:
    index = _load_index(ws, "graph")
    ranked = search_papers(index, args.query, rank_by=config.rank_by, limit=config.search_limit)
    if not ranked:
        print(f"no papers match query: {args.query!r}", file=sys.stderr)
        return 1
    graph = build_similarity_graph(index, ranked, weights=config.weights)
    ws.path("graph", "members.txt").write_text(
        "".join(p + "\n" for p in ranked), encoding="utf-8"
    )
    ws.path("graph", "graph.tsv").write_text(graph.to_tsv(), encoding="utf-8")
    if graph.nodes:
        partition = detect_topics(graph, seed=config.seed)
        ws.path("graph", "topics.tsv").write_text(partition.to_tsv(), encoding="utf-8")
        topics = len(set(partition.assignment.values()))
        print(f"{len(ranked)} members, {len(graph.edges)} edges, {topics} topics")
    else:
        ws.path("graph", "topics.tsv").write_text("pmid\ttopic\n", encoding="utf-8")
        print(f"{len(ranked)} members, empty graph")
    return 0


def cmd_labels(args, config: PipelineConfig, ws: Workspace) -> int:
    index = _load_index(ws, "labels")
    holdout = [p for p in (args.holdout or "").split(",") if p]
    blocks = build_training_set(
        index,
        holdout_reviews=holdout,
        block_size=config.block_size,
        intersection=config.intersection,
        window=config.window,
    )
    write_blocks_jsonl(blocks, ws.path("labels", "blocks.jsonl"))
    papers = len({b.pmid for b in blocks})
    print(f"wrote {len(blocks)} labeled blocks over {papers} papers")
    return 0


def cmd_train(args, config: PipelineConfig, ws: Workspace) -> int:
    index = _load_index(ws, "train")
    blocks_path = ws.require("labels", "blocks.jsonl", "labels")
    blocks = read_blocks_jsonl(blocks_path)
    model = train_baseline(
        blocks, index, epochs=args.epochs, learning_rate=args.lr, seed=config.seed
    )
    model.save(ws.path("models", "baseline.json"))
    log_lines = ["epoch\tmse"] + [f"{e}\t{loss!r}" for e, loss in model.training_log]
    ws.path("models", "training_log.tsv").write_text(
        "\n".join(log_lines) + "\n", encoding="utf-8"
    )
    final = model.training_log[-1][1] if model.training_log else float("nan")
    print(f"trained on {len(blocks)} blocks, final mse {final:.6g}")
    return 0


def cmd_review(args, config: PipelineConfig, ws: Workspace) -> int:
    index = _load_index(ws, "review")
    ranked = search_papers(index, args.query, rank_by=config.rank_by, limit=config.search_limit)
    if not ranked:
        print(f"no papers match query: {args.query!r}", file=sys.stderr)
        return 1
    graph = build_similarity_graph(index, ranked, weights=config.weights)
    partition = detect_topics(graph, seed=config.seed) if graph.nodes else None
    k = args.k or config.k
    key_papers = select_key_papers(ranked, min(k, len(ranked)))
    scorer = _make_scorer(config.scorer, config, ws, index)
    try:
        scores = {}
        for pmid in key_papers:
            sentences = [
                strip_citation_markers(s) for s in index.paper(pmid).body_sentences
            ]
            scores[pmid] = score_sentences(
                scorer,
                pmid,
                sentences,
                block_size=config.block_size,
                intersection=config.intersection,
                mode=config.aggregation,
            )
    finally:
        scorer.close()
    entries = assemble_review(
        index, key_papers, scores, partition, per_paper=config.per_paper
    )
    for fmt, name in (("tsv", "review.tsv"), ("markdown", "review.md"), ("json", "review.json")):
        ws.path("reviews", name).write_text(render(entries, fmt), encoding="utf-8")
    sys.stdout.write(render(entries, "markdown"))
    return 0


def cmd_benchmark(args, config: PipelineConfig, ws: Workspace) -> int:
    index = _load_index(ws, "benchmark")
    try:
        n_values = [int(p) for p in args.n.split(",") if p]
    except ValueError:
        raise ConfigError(f"--n must be comma-separated integers, got {args.n!r}")
    if args.holdout:
        holdout = [p for p in args.holdout.split(",") if p]
    else:
        holdout = [p for p, r in index.papers.items() if r.is_review]
    if not holdout:
        print("no holdout reviews in corpus", file=sys.stderr)
        return 1
    scorer = _make_scorer(args.scorer or config.scorer, config, ws, index)
    try:
        result = benchmark(
            index,
            holdout,
            scorer,
            n_values=n_values,
            block_size=config.block_size,
            intersection=config.intersection,
            mode=config.aggregation,
        )
    finally:
        scorer.close()
    ws.path("bench", "benchmark.tsv").write_text(result.to_tsv(), encoding="utf-8")
    ws.path("bench", "summary.tsv").write_text(result.summary_tsv(), encoding="utf-8")
    sys.stdout.write(result.summary_tsv())
    return 0


def cmd_report(args, config: PipelineConfig, ws: Workspace) -> int:
    records, errors = read_annotations(args.annotations)
    for message in errors:
        print(f"rejected: {message}", file=sys.stderr)
    if not records:
        raise ConfigError(f"no valid annotation records in {args.annotations}")
    report = annotation_report(records)
    ws.path("bench", "annotation_report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    ws.path("bench", "annotation_report.md").write_text(report.to_markdown(), encoding="utf-8")
    sys.stdout.write(report.to_markdown())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reviewgen", description="generate review tables from a paper corpus"
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--workspace", default="workspace", help="artifact directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config value (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus snapshot into the index cache")
    p.add_argument("--corpus", help="corpus file (overrides config)")
    p.add_argument("--format", choices=("jsonl", "jats_xml"), default="jsonl")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("graph", help="search a query and build the similarity graph")
    p.add_argument("--query", required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("labels", help="build labeled sentence blocks")
    p.add_argument("--holdout", help="comma-separated review pmids to exclude")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("train", help="fit the baseline scorer")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("review", help="generate the review table for a query")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, help="number of key papers (overrides config)")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("benchmark", help="top-n ROUGE against held-out reviews")
    p.add_argument("--n", default="1,5,10", help="comma-separated n values")
    p.add_argument("--holdout", help="comma-separated review pmids (default: all reviews)")
    p.add_argument(
        "--scorer",
        help="backend override: baseline, external:<command>, oracle, random",
    )
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="summarize an annotation CSV")
    p.add_argument("--annotations", required=True, help="CSV of query,pmid,sentence,label")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ws = Workspace(Path(args.workspace))
    ws.root.mkdir(parents=True, exist_ok=True)
    try:
        with WorkspaceLock(ws.root):
            ws.prepare()
            return args.func(args, config, ws)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingStageError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except (RuntimeError, ValueError, KeyError, DuplicatePmidError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
