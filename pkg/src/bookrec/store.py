"""Catalog persistence and score queries.

A catalog is one self-contained versioned file produced by a batch build. It
opens with a JSON header line carrying the schema version and per-section line
counts, followed by five sections in fixed order:

  topics    JSON lines  {"id": ..., "label": ...}           canonical topics
  edges     JSON lines  {"src": ..., "dst": ...}            broader edges (child -> parent)
  products  JSON lines  one summary object per product
  scores    TSV lines   conference_id <TAB> product_id <TAB> score
  feedback  JSON lines  one feedback record per line

Score lines carry full float precision so the persisted values equal the
computed ones exactly; the human-facing 6-decimal dump lives in
similarity.dump_scores. Serialization is fully deterministic: identical
catalogs produce identical bytes.

Feedback collected while serving is appended durably to a sidecar JSON Lines
journal (FeedbackJournal) and replayed on top of the catalog at load time.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import PRODUCT_KINDS, normalize_person
from .similarity import SimilarityConfig, SimilarityRecord

CATALOG_FORMAT = "bookrec-catalog"
CATALOG_VERSION = 1
VERDICTS = ("positive", "negative")


class CatalogError(Exception):
    pass


class CatalogVersionError(CatalogError):
    pass


class UnknownIdError(CatalogError, KeyError):
    def __init__(self, kind: str, value: str):
        super().__init__(f"unknown {kind}: {value!r}")
        self.kind = kind
        self.value = value


class InvalidQueryError(CatalogError, ValueError):
    pass


@dataclass(frozen=True)
class FeedbackRecord:
    conference_id: str
    product_id: str
    verdict: str  # positive | negative
    timestamp: int  # UTC seconds


@dataclass(frozen=True)
class ProductSummary:
    product_id: str
    kind: str
    title: str
    year_min: int
    year_max: int
    authors: tuple[str, ...]
    editors: tuple[str, ...]
    doi: str | None
    acronym: str | None
    weights: dict[str, int]  # full closed distribution, keyed by canonical topic
    reduced: tuple[tuple[str, int], ...]  # display topics, weight-descending
    pmc: dict[str, int]


@dataclass(frozen=True)
class RecommendationQuery:
    conference_id: str
    kinds: frozenset[str]
    from_year: int
    to_year: int
    limit: int
    person: str | None = None

    def __post_init__(self) -> None:
        if self.from_year > self.to_year:
            raise InvalidQueryError(f"empty year interval [{self.from_year}, {self.to_year}]")
        if self.limit < 1:
            raise InvalidQueryError("limit must be >= 1")
        unknown = self.kinds - set(PRODUCT_KINDS)
        if unknown:
            raise InvalidQueryError(f"unknown product kinds: {sorted(unknown)}")


@dataclass
class Catalog:
    reference_year: int
    config: SimilarityConfig
    topics: dict[str, str]  # canonical topic id -> display label
    edges: list[tuple[str, str]]  # contracted broader edges (child, parent)
    products: dict[str, ProductSummary]
    scores: dict[str, list[SimilarityRecord]]  # conference -> descending by score
    feedback: list[FeedbackRecord] = field(default_factory=list)

    def conference_ids(self) -> list[str]:
        return sorted(
            pid for pid, p in self.products.items() if p.kind == "conference_series"
        )

    def require_conference(self, conference_id: str) -> ProductSummary:
        product = self.products.get(conference_id)
        if product is None or product.kind != "conference_series":
            raise UnknownIdError("conference", conference_id)
        return product

    def require_product(self, product_id: str) -> ProductSummary:
        product = self.products.get(product_id)
        if product is None:
            raise UnknownIdError("product", product_id)
        return product

    def latest_feedback(self, conference_id: str) -> dict[str, str]:
        """product_id -> most recent verdict for the given conference."""
        latest: dict[str, str] = {}
        for rec in self.feedback:
            if rec.conference_id == conference_id:
                latest[rec.product_id] = rec.verdict
        return latest


def query_scores(catalog: Catalog, q: RecommendationQuery) -> list[SimilarityRecord]:
    """Filter a conference's score list; order (descending score) is preserved."""
    catalog.require_conference(q.conference_id)
    person = normalize_person(q.person) if q.person else None
    out: list[SimilarityRecord] = []
    for rec in catalog.scores.get(q.conference_id, []):
        product = catalog.products[rec.product_id]
        if product.kind not in q.kinds:
            continue
        if product.year_max < q.from_year or product.year_min > q.to_year:
            continue
        if person is not None and not _person_matches(product, person):
            continue
        out.append(rec)
        if len(out) == q.limit:
            break
    return out


def _person_matches(product: ProductSummary, needle: str) -> bool:
    return any(
        needle in normalize_person(name) for name in (*product.authors, *product.editors)
    )


def append_feedback(catalog: Catalog, rec: FeedbackRecord) -> None:
    """Validate ids and append; duplicates allowed, the latest wins for display."""
    if rec.verdict not in VERDICTS:
        raise InvalidQueryError(f"verdict must be one of {VERDICTS}")
    catalog.require_conference(rec.conference_id)
    catalog.require_product(rec.product_id)
    catalog.feedback.append(rec)


# -- serialization -------------------------------------------------------------------


def _jline(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def save_catalog(catalog: Catalog, destination: str | Path) -> None:
    """Atomic write: serialize to a sibling temp file, then rename over."""
    destination = Path(destination)
    lines: list[str] = []
    header = {
        "format": CATALOG_FORMAT,
        "version": CATALOG_VERSION,
        "reference_year": catalog.reference_year,
        "config": {
            "jaccard_threshold": catalog.config.jaccard_threshold,
            "cosine_threshold": catalog.config.cosine_threshold,
            "inclusive_cosine": catalog.config.inclusive_cosine,
        },
        "counts": {
            "topics": len(catalog.topics),
            "edges": len(catalog.edges),
            "products": len(catalog.products),
            "scores": sum(len(v) for v in catalog.scores.values()),
            "feedback": len(catalog.feedback),
        },
    }
    lines.append(_jline(header))
    for tid in sorted(catalog.topics):
        lines.append(_jline({"id": tid, "label": catalog.topics[tid]}))
    for src, dst in sorted(catalog.edges):
        lines.append(_jline({"src": src, "dst": dst}))
    for pid in sorted(catalog.products):
        p = catalog.products[pid]
        lines.append(
            _jline(
                {
                    "id": p.product_id,
                    "kind": p.kind,
                    "title": p.title,
                    "year_min": p.year_min,
                    "year_max": p.year_max,
                    "authors": list(p.authors),
                    "editors": list(p.editors),
                    "doi": p.doi,
                    "acronym": p.acronym,
                    "weights": dict(sorted(p.weights.items())),
                    "reduced": [[t, w] for t, w in p.reduced],
                    "pmc": dict(sorted(p.pmc.items())),
                }
            )
        )
    for conference_id in sorted(catalog.scores):
        for rec in catalog.scores[conference_id]:
            lines.append(f"{rec.conference_id}\t{rec.product_id}\t{rec.score!r}")
    for rec in catalog.feedback:
        lines.append(
            _jline(
                {
                    "conference_id": rec.conference_id,
                    "product_id": rec.product_id,
                    "verdict": rec.verdict,
                    "timestamp": rec.timestamp,
                }
            )
        )

    payload = ("\n".join(lines) + "\n").encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=destination.parent, prefix=destination.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, destination)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_catalog(source: str | Path) -> Catalog:
    path = Path(source)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CatalogError(f"{path}: empty catalog file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise CatalogError(f"{path}: malformed catalog header") from None
    if not isinstance(header, dict) or header.get("format") != CATALOG_FORMAT:
        raise CatalogError(f"{path}: not a catalog file")
    if header.get("version") != CATALOG_VERSION:
        raise CatalogVersionError(
            f"{path}: unsupported catalog version {header.get('version')!r} "
            f"(expected {CATALOG_VERSION})"
        )
    counts = header["counts"]
    expected = 1 + counts["topics"] + counts["edges"] + counts["products"] + counts["scores"] + counts["feedback"]
    if len(lines) != expected:
        raise CatalogError(f"{path}: truncated catalog ({len(lines)} lines, expected {expected})")

    cursor = 1

    def take(n: int) -> list[str]:
        nonlocal cursor
        chunk = lines[cursor:cursor + n]
        cursor += n
        return chunk

    topics = {}
    for line in take(counts["topics"]):
        rec = json.loads(line)
        topics[rec["id"]] = rec["label"]
    edges = []
    for line in take(counts["edges"]):
        rec = json.loads(line)
        edges.append((rec["src"], rec["dst"]))
    products = {}
    for line in take(counts["products"]):
        rec = json.loads(line)
        products[rec["id"]] = ProductSummary(
            product_id=rec["id"],
            kind=rec["kind"],
            title=rec["title"],
            year_min=rec["year_min"],
            year_max=rec["year_max"],
            authors=tuple(rec["authors"]),
            editors=tuple(rec["editors"]),
            doi=rec["doi"],
            acronym=rec["acronym"],
            weights={t: int(w) for t, w in rec["weights"].items()},
            reduced=tuple((t, int(w)) for t, w in rec["reduced"]),
            pmc={c: int(n) for c, n in rec["pmc"].items()},
        )
    scores: dict[str, list[SimilarityRecord]] = {}
    for line in take(counts["scores"]):
        conference_id, product_id, score = line.split("\t")
        scores.setdefault(conference_id, []).append(
            SimilarityRecord(conference_id, product_id, float(score))
        )
    feedback = []
    for line in take(counts["feedback"]):
        rec = json.loads(line)
        feedback.append(
            FeedbackRecord(rec["conference_id"], rec["product_id"], rec["verdict"], int(rec["timestamp"]))
        )

    # canonical form: every conference owns a score list, possibly empty
    for pid, product in products.items():
        if product.kind == "conference_series":
            scores.setdefault(pid, [])

    config = SimilarityConfig(
        jaccard_threshold=header["config"]["jaccard_threshold"],
        cosine_threshold=header["config"]["cosine_threshold"],
        inclusive_cosine=header["config"]["inclusive_cosine"],
    )
    return Catalog(
        reference_year=header["reference_year"],
        config=config,
        topics=topics,
        edges=edges,
        products=products,
        scores=scores,
        feedback=feedback,
    )


class FeedbackJournal:
    """Append-only JSON Lines journal for feedback collected while serving."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, rec: FeedbackRecord) -> None:
        line = _jline(
            {
                "conference_id": rec.conference_id,
                "product_id": rec.product_id,
                "verdict": rec.verdict,
                "timestamp": rec.timestamp,
            }
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def load(self) -> list[FeedbackRecord]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    out.append(
                        FeedbackRecord(
                            rec["conference_id"], rec["product_id"], rec["verdict"], int(rec["timestamp"])
                        )
                    )
        return out

    def replay_into(self, catalog: Catalog) -> int:
        records = self.load()
        for rec in records:
            append_feedback(catalog, rec)
        return len(records)
