"""Operator entry points: validate, build, recommend, export, serve.

Exit codes: 0 success, 1 usage, 2 data error, 3 I/O.

The batch side (`build`) runs the whole pipeline offline and writes one
catalog file; the query side (`recommend`, `export`, `serve`) only ever reads
a catalog, so serving stays read-only and restart-safe.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from datetime import date
from pathlib import Path

from . import annotator, corpus, ontology, similarity, store
from .service import RecommenderService, card_as_dict, make_server

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

MANIFEST_KEYS = {
    "ontology",
    "metadata",
    "reference_year",
    "jaccard_threshold",
    "cosine_threshold",
    "inclusive_cosine",
    "budget",
    "output",
    "workers",
    "annotations",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bookrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_validate = sub.add_parser("validate", help="check an ontology file and print its report")
    p_validate.add_argument("--ontology", required=True)
    p_validate.set_defaults(func=cmd_validate)

    p_build = sub.add_parser("build", help="run the batch pipeline and write a catalog")
    p_build.add_argument("--manifest", help="JSON run manifest; flags override its fields")
    p_build.add_argument("--ontology")
    p_build.add_argument("--metadata")
    p_build.add_argument("--reference-year", type=int, dest="reference_year")
    p_build.add_argument("--jaccard-threshold", type=float, dest="jaccard_threshold")
    p_build.add_argument("--cosine-threshold", type=float, dest="cosine_threshold")
    p_build.add_argument("--inclusive-cosine", action="store_true", default=None, dest="inclusive_cosine")
    p_build.add_argument("--budget", type=int, help="topics kept per product for display")
    p_build.add_argument("--workers", type=int)
    p_build.add_argument("--output")
    p_build.add_argument("--annotations", help="also dump per-product annotations as JSON Lines")
    p_build.set_defaults(func=cmd_build)

    p_rec = sub.add_parser("recommend", help="query a catalog from the command line")
    _add_query_flags(p_rec)
    p_rec.add_argument("--format", choices=("table", "json"), default="table")
    p_rec.set_defaults(func=cmd_recommend)

    p_exp = sub.add_parser("export", help="export recommendations as CSV or JSON")
    _add_query_flags(p_exp)
    p_exp.add_argument("--format", choices=("csv", "json"), default="csv")
    p_exp.add_argument("--output", help="output file (default: stdout)")
    p_exp.set_defaults(func=cmd_export)

    p_serve = sub.add_parser("serve", help="serve the HTTP API over a catalog")
    p_serve.add_argument("--catalog", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--journal", help="feedback journal path (default: <catalog>.feedback.jsonl)")
    p_serve.add_argument("--today", help="fix the query date (YYYY-MM-DD), for reproducible defaults")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _add_query_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", required=True)
    p.add_argument("--conference", required=True, help="conference product id")
    p.add_argument("--kinds", help="comma-separated subset of book,journal_year,conference_series")
    p.add_argument("--from-year", type=int, dest="from_year")
    p.add_argument("--to-year", type=int, dest="to_year")
    p.add_argument("--limit", type=int)
    p.add_argument("--person", help="substring filter on authors and editors")
    p.add_argument("--today", help="fix the query date (YYYY-MM-DD), for reproducible defaults")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bookrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except store.InvalidQueryError as exc:
        print(f"bookrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ontology.OntologyError, corpus.MetadataError, store.CatalogError, similarity.SimilarityConfigError) as exc:
        print(f"bookrec: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"bookrec: error: {exc}", file=sys.stderr)
        return EXIT_IO


# -- validate ------------------------------------------------------------------------


def _load_ontology(path: str) -> ontology.OntologyGraph:
    with open(path, "rb") as fh:
        return ontology.load_ontology(fh)


def cmd_validate(args: argparse.Namespace) -> int:
    graph = _load_ontology(args.ontology)
    report = graph.validation
    print(f"topics: {len(graph.topics)}")
    print(f"equivalence classes: {len(graph.canonical_topics())}")
    print(f"broader edges: {len(graph.broader_edges)}")
    for line in report.warning_lines():
        print(f"warning: {line}")
    for line in report.info_lines():
        print(f"info: {line}")
    print("ok")
    return EXIT_OK


# -- build ---------------------------------------------------------------------------


def _resolve_manifest(args: argparse.Namespace) -> dict:
    settings: dict = {}
    if args.manifest:
        try:
            with open(args.manifest, "r", encoding="utf-8") as fh:
                manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"manifest {args.manifest}: invalid JSON: {exc.msg}") from None
        if not isinstance(manifest, dict):
            raise UsageError(f"manifest {args.manifest}: must be a JSON object")
        unknown = set(manifest) - MANIFEST_KEYS
        if unknown:
            raise UsageError(f"manifest {args.manifest}: unknown keys {sorted(unknown)}")
        settings.update(manifest)
    for key in MANIFEST_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key in ("ontology", "metadata", "output"):
        if not settings.get(key):
            raise UsageError(f"missing required setting: {key} (flag or manifest)")
    settings.setdefault("reference_year", date.today().year)
    settings.setdefault("jaccard_threshold", similarity.DEFAULT_JACCARD_THRESHOLD)
    settings.setdefault("cosine_threshold", similarity.DEFAULT_COSINE_THRESHOLD)
    settings.setdefault("inclusive_cosine", False)
    settings.setdefault("budget", annotator.DEFAULT_TOPIC_BUDGET)
    settings.setdefault("workers", 1)
    return settings


def run_build(settings: dict) -> store.Catalog:
    """The full batch pipeline; separated from cmd_build for in-process use."""
    graph = _load_ontology(settings["ontology"])
    with open(settings["metadata"], "rb") as fh:
        ingest = corpus.ingest_metadata(fh)
    for diag in ingest.diagnostics:
        print(f"metadata {diag}", file=sys.stderr)

    products = corpus.group_products(ingest.chapters, settings["reference_year"])
    matcher = annotator.build_matcher(graph)
    config = similarity.SimilarityConfig(
        jaccard_threshold=settings["jaccard_threshold"],
        cosine_threshold=settings["cosine_threshold"],
        inclusive_cosine=settings["inclusive_cosine"],
    )

    summaries: dict[str, store.ProductSummary] = {}
    vectors: list[similarity.TopicVector] = []
    conference_vectors: list[similarity.TopicVector] = []
    empty_products: list[str] = []
    annotation_rows = []
    for product in products:
        dist = annotator.annotate_product(matcher, graph, product)
        if dist.is_empty:
            empty_products.append(product.product_id)
        reduced = annotator.reduce_topics(dist, settings["budget"]) if not dist.is_empty else []
        pmc = annotator.infer_pmcs(graph, dist)
        annotation_rows.append((dist, reduced, pmc))
        summaries[product.product_id] = store.ProductSummary(
            product_id=product.product_id,
            kind=product.kind,
            title=product.display_title,
            year_min=product.year_range[0],
            year_max=product.year_range[1],
            authors=product.authors,
            editors=product.editors,
            doi=product.doi,
            acronym=product.acronym,
            weights=dict(sorted(dist.weights.items())),
            reduced=tuple(reduced),
            pmc=pmc,
        )
        vector = similarity.TopicVector(product.product_id, dist.weights)
        vectors.append(vector)
        if product.kind == "conference_series":
            conference_vectors.append(vector)

    if settings.get("annotations"):
        with open(settings["annotations"], "w", encoding="utf-8") as fh:
            annotator.dump_annotations(annotation_rows, fh)

    for product_id in empty_products:
        print(f"warning: {product_id} matched no topics; it cannot be recommended", file=sys.stderr)
    if not conference_vectors:
        print("warning: corpus contains no conference series; score table is empty", file=sys.stderr)

    records, stats = similarity.precompute_with_stats(
        conference_vectors, vectors, config, workers=settings["workers"]
    )
    print(
        f"pairs: {stats.candidate_pairs} candidates, "
        f"{stats.surviving_jaccard} past the jaccard gate, {stats.emitted} persisted"
    )

    used_topics = sorted({t for s in summaries.values() for t in s.weights})
    used = set(used_topics)
    topics = {t: graph.label(t) for t in used_topics}
    edges = [(src, dst) for src, dst in graph.contracted_broader_edges() if src in used and dst in used]

    scores: dict[str, list[similarity.SimilarityRecord]] = {
        v.product_id: [] for v in conference_vectors
    }
    for rec in records:
        scores[rec.conference_id].append(rec)

    return store.Catalog(
        reference_year=settings["reference_year"],
        config=config,
        topics=topics,
        edges=edges,
        products=summaries,
        scores=scores,
    )


def cmd_build(args: argparse.Namespace) -> int:
    settings = _resolve_manifest(args)
    catalog = run_build(settings)
    store.save_catalog(catalog, settings["output"])
    print(
        f"catalog written to {settings['output']}: "
        f"{len(catalog.products)} products, {len(catalog.conference_ids())} conferences, "
        f"{sum(len(v) for v in catalog.scores.values())} scores"
    )
    return EXIT_OK


# -- query-side commands ---------------------------------------------------------------


def _parse_today(value: str | None) -> date | None:
    if value is None:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise UsageError(f"--today must be YYYY-MM-DD, got {value!r}") from None


def _parse_kinds(value: str | None) -> frozenset[str] | None:
    if value is None:
        return None
    kinds = frozenset(k.strip() for k in value.split(",") if k.strip())
    if not kinds:
        raise UsageError("--kinds must name at least one product kind")
    return kinds


def _service_for(args: argparse.Namespace) -> RecommenderService:
    catalog = store.load_catalog(args.catalog)
    return RecommenderService(catalog, today=_parse_today(args.today))


def _query_from(args: argparse.Namespace, service: RecommenderService) -> store.RecommendationQuery:
    return service.build_query(
        conference_id=args.conference,
        kinds=_parse_kinds(args.kinds),
        from_year=args.from_year,
        to_year=args.to_year,
        limit=args.limit,
        person=args.person,
    )


def cmd_recommend(args: argparse.Namespace) -> int:
    service = _service_for(args)
    cards = service.recommend(_query_from(args, service))
    if args.format == "json":
        print(json.dumps([card_as_dict(c) for c in cards], ensure_ascii=False, indent=2))
        return EXIT_OK
    if not cards:
        print("no recommendations match the filters")
        return EXIT_OK
    for card in cards:
        years = f"{card.year_min}" if card.year_min == card.year_max else f"{card.year_min}-{card.year_max}"
        persons = ", ".join(card.persons[:3])
        print(f"{card.score:.6f}  {card.kind:<17} {years:<9} {card.title}  [{persons}]")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    service = _service_for(args)
    q = _query_from(args, service)
    body = service.export_csv(q) if args.format == "csv" else service.export_json(q)
    if args.output:
        Path(args.output).write_bytes(body)
    else:
        sys.stdout.buffer.write(body)
        sys.stdout.buffer.flush()
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    catalog = store.load_catalog(args.catalog)
    journal_path = args.journal or f"{args.catalog}.feedback.jsonl"
    service = RecommenderService(
        catalog, journal=store.FeedbackJournal(journal_path), today=_parse_today(args.today)
    )
    server = make_server(service, args.host, args.port)

    stop = threading.Event()

    def shutdown(signum, frame):
        stop.set()
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, shutdown)
    signal.signal(signal.SIGINT, shutdown)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (journal: {journal_path})", flush=True)
    server.serve_forever()
    server.server_close()
    print("shutdown complete", flush=True)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
