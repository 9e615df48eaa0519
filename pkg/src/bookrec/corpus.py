"""Chapter-level metadata ingestion and grouping into recommendable products.

The metadata feed is UTF-8 JSON Lines, one chapter object per line:

    {"chapter_id": "ch1", "title": "...", "abstract": "...", "keywords": [...],
     "year": 2016, "authors": [...], "parent_doi": "10.1007/...",
     "parent_kind": "book" | "journal" | "proceedings", "parent_title": "...",
     "editors": [...], "conference_series_id": "...",
     "series_name": "...", "series_acronym": "..."}

conference_series_id is required for proceedings chapters; series_name and
series_acronym are optional extras carried by proceedings chapters so that the
query side can search series by name or abbreviation.

Grouping rules:
  * book and proceedings chapters form one book product per parent DOI
    (a proceedings volume is itself a recommendable book),
  * journal articles form one product per (journal DOI, publication year),
  * proceedings chapters additionally roll up into one conference-series
    product covering the five calendar years ending at reference_year.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

PARENT_KINDS = ("book", "journal", "proceedings")
PRODUCT_KINDS = ("book", "journal_year", "conference_series")
CONFERENCE_WINDOW_YEARS = 5

_WS = re.compile(r"\s+")


def normalize_person(name: str) -> str:
    return _WS.sub(" ", unicodedata.normalize("NFC", name).lower()).strip()


@dataclass(frozen=True)
class ChapterRecord:
    chapter_id: str
    title: str
    abstract: str
    keywords: tuple[str, ...]
    year: int
    authors: tuple[str, ...]
    parent_doi: str
    parent_kind: str
    parent_title: str
    editors: tuple[str, ...]
    conference_series_id: str | None = None
    series_name: str | None = None
    series_acronym: str | None = None


@dataclass(frozen=True)
class Diagnostic:
    line_no: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}"


@dataclass
class IngestResult:
    chapters: list[ChapterRecord]
    diagnostics: list[Diagnostic] = field(default_factory=list)


class MetadataError(Exception):
    """Fatal ingestion failure: the stream is not JSON Lines at all."""


@dataclass(frozen=True)
class ProductDescriptor:
    product_id: str
    kind: str  # one of PRODUCT_KINDS
    display_title: str
    year_range: tuple[int, int]
    chapters: tuple[ChapterRecord, ...]
    authors: tuple[str, ...]
    editors: tuple[str, ...]
    doi: str | None = None
    acronym: str | None = None


def ingest_metadata(source: BinaryIO | Iterable[bytes]) -> IngestResult:
    """Validate records line by line; keep the good ones, report the bad.

    Raises MetadataError only when the input is non-empty yet no line parses
    as a JSON object.
    """
    chapters: list[ChapterRecord] = []
    diagnostics: list[Diagnostic] = []
    saw_content = False
    saw_object = False

    for line_no, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        if not line.strip():
            continue
        saw_content = True
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(rec, dict):
            diagnostics.append(Diagnostic(line_no, "record is not a JSON object"))
            continue
        saw_object = True
        try:
            chapters.append(_parse_chapter(rec))
        except ValueError as exc:
            diagnostics.append(Diagnostic(line_no, str(exc)))

    if saw_content and not saw_object:
        raise MetadataError("input is not a JSON Lines metadata stream")
    return IngestResult(chapters, diagnostics)


def _require_str(rec: dict, key: str, allow_empty: bool = False) -> str:
    value = rec.get(key)
    if not isinstance(value, str) or (not allow_empty and not value.strip()):
        raise ValueError(f"missing or empty {key}")
    return value


def _str_list(rec: dict, key: str) -> tuple[str, ...]:
    value = rec.get(key, [])
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{key} must be a list of strings")
    return tuple(v for v in value if v.strip())


def _optional_str(rec: dict, key: str) -> str | None:
    value = rec.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"{key} must be a non-empty string when present")
    return value


def _parse_chapter(rec: dict) -> ChapterRecord:
    chapter_id = _require_str(rec, "chapter_id")
    title = _require_str(rec, "title")
    year = rec.get("year")
    if not isinstance(year, int) or isinstance(year, bool) or not 1900 <= year <= 2100:
        raise ValueError("year must be an integer in [1900, 2100]")
    parent_kind = rec.get("parent_kind")
    if parent_kind not in PARENT_KINDS:
        raise ValueError(f"parent_kind must be one of {PARENT_KINDS}")
    series_id = _optional_str(rec, "conference_series_id")
    if parent_kind == "proceedings" and series_id is None:
        raise ValueError("missing series id for proceedings chapter")
    abstract = rec.get("abstract") or ""
    if not isinstance(abstract, str):
        raise ValueError("abstract must be a string")
    return ChapterRecord(
        chapter_id=chapter_id,
        title=title,
        abstract=abstract,
        keywords=_str_list(rec, "keywords"),
        year=year,
        authors=_str_list(rec, "authors"),
        parent_doi=_require_str(rec, "parent_doi"),
        parent_kind=parent_kind,
        parent_title=_require_str(rec, "parent_title"),
        editors=_str_list(rec, "editors"),
        conference_series_id=series_id,
        series_name=_optional_str(rec, "series_name"),
        series_acronym=_optional_str(rec, "series_acronym"),
    )


def _dedup(names: Iterable[str]) -> tuple[str, ...]:
    out: list[str] = []
    seen: set[str] = set()
    for name in names:
        key = normalize_person(name)
        if key and key not in seen:
            seen.add(key)
            out.append(name.strip())
    return tuple(out)


def _make_product(
    product_id: str,
    kind: str,
    title: str,
    chapters: list[ChapterRecord],
    doi: str | None,
    acronym: str | None = None,
) -> ProductDescriptor:
    ordered = tuple(sorted(chapters, key=lambda c: c.chapter_id))
    years = [c.year for c in ordered]
    return ProductDescriptor(
        product_id=product_id,
        kind=kind,
        display_title=title,
        year_range=(min(years), max(years)),
        chapters=ordered,
        authors=_dedup(a for c in ordered for a in c.authors),
        editors=_dedup(e for c in ordered for e in c.editors),
        doi=doi,
        acronym=acronym,
    )


def group_products(chapters: list[ChapterRecord], reference_year: int) -> list[ProductDescriptor]:
    """Deterministic grouping; permuting the input yields identical products."""
    books: dict[str, list[ChapterRecord]] = {}
    journal_years: dict[tuple[str, int], list[ChapterRecord]] = {}
    series: dict[str, list[ChapterRecord]] = {}

    window_min = reference_year - (CONFERENCE_WINDOW_YEARS - 1)
    for ch in chapters:
        if ch.parent_kind in ("book", "proceedings"):
            books.setdefault(ch.parent_doi, []).append(ch)
        else:
            journal_years.setdefault((ch.parent_doi, ch.year), []).append(ch)
        if ch.parent_kind == "proceedings" and window_min <= ch.year <= reference_year:
            series.setdefault(ch.conference_series_id, []).append(ch)

    products: list[ProductDescriptor] = []
    for doi, members in books.items():
        title = min(c.parent_title for c in members)
        products.append(_make_product(f"book:{doi}", "book", title, members, doi))
    for (doi, year), members in journal_years.items():
        title = f"{min(c.parent_title for c in members)} ({year})"
        products.append(_make_product(f"journal:{doi}:{year}", "journal_year", title, members, doi))
    for series_id, members in series.items():
        names = sorted(c.series_name for c in members if c.series_name)
        acronyms = sorted(c.series_acronym for c in members if c.series_acronym)
        newest = max(members, key=lambda c: (c.year, c.chapter_id))
        products.append(
            _make_product(
                f"series:{series_id}",
                "conference_series",
                names[0] if names else series_id,
                members,
                newest.parent_doi,  # link target: the most recent proceedings volume
                acronyms[0] if acronyms else None,
            )
        )
    return sorted(products, key=lambda p: p.product_id)


def person_index(products: list[ProductDescriptor]) -> dict[str, set[str]]:
    """Normalized person name -> ids of products they authored or edited."""
    index: dict[str, set[str]] = {}
    for product in products:
        for name in (*product.authors, *product.editors):
            index.setdefault(normalize_person(name), set()).add(product.product_id)
    return index
