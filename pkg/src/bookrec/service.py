"""Query-side service: conference search, ranked recommendation cards,
side-by-side topic comparison, export, and feedback intake.

RecommenderService is a plain object over an immutable catalog snapshot so it
can be driven directly (CLI, tests) or through the bundled HTTP layer:

  GET  /conferences?q=...
  GET  /conferences/{id}/topics
  GET  /recommendations?conference_id=...&kinds=...&from_year=...&to_year=...&limit=...&person=...
  GET  /compare?conference_id=...&product_id=...&mode=...&min_weight=...
  GET  /export?...&format=csv|json
  POST /feedback {"conference_id": ..., "product_id": ..., "verdict": ...}

All handlers are stateless over the snapshot; feedback is the only mutation
and goes through a single journal writer.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from datetime import date
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable
from urllib.parse import parse_qs, unquote, urlsplit

from .corpus import PRODUCT_KINDS, normalize_person
from .store import (
    Catalog,
    FeedbackJournal,
    FeedbackRecord,
    InvalidQueryError,
    ProductSummary,
    RecommendationQuery,
    UnknownIdError,
    append_feedback,
    query_scores,
)

COMPARE_MODES = ("conference", "product", "intersection", "all")
DEFAULT_RESULT_LIMIT = 20
DEFAULT_YEAR_SPAN = 3  # recommendation year filter covers the last three years
MAX_CARD_TOPICS = 15
AUTHOR_DISPLAY_LIMIT = 5  # show authors when fewer than this, else editors

LINK_TEMPLATE = "https://doi.org/{doi}"


@dataclass(frozen=True)
class TopicEntry:
    topic: str
    label: str
    weight: int


@dataclass(frozen=True)
class RecommendationCard:
    product_id: str
    title: str
    kind: str
    year_min: int
    year_max: int
    link: str
    score: float
    topics: tuple[TopicEntry, ...]
    persons: tuple[str, ...]
    feedback_state: str | None


@dataclass(frozen=True)
class ComparisonNode:
    topic: str
    label: str
    conference_weight: int
    product_weight: int
    membership: str  # conference_only | product_only | both


@dataclass(frozen=True)
class ComparisonGraph:
    nodes: tuple[ComparisonNode, ...]
    edges: tuple[tuple[str, str], ...]


class RecommenderService:
    def __init__(
        self,
        catalog: Catalog,
        journal: FeedbackJournal | None = None,
        today: date | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.catalog = catalog
        self.journal = journal
        self._today = today
        self._clock = clock
        if journal is not None:
            journal.replay_into(catalog)

    def today(self) -> date:
        return self._today or date.today()

    # -- queries ----------------------------------------------------------------

    def search_conferences(self, text: str) -> list[tuple[str, str]]:
        """Case-insensitive substring match on series names and acronyms."""
        needle = normalize_person(text)
        if not needle:
            return []
        hits = []
        for cid in self.catalog.conference_ids():
            product = self.catalog.products[cid]
            name = normalize_person(product.title)
            acronym = normalize_person(product.acronym) if product.acronym else ""
            if needle in name or (acronym and needle in acronym):
                hits.append((cid, product.title))
        return sorted(hits, key=lambda h: (h[1].lower(), h[0]))

    def conference_topics(self, conference_id: str) -> list[TopicEntry]:
        product = self.catalog.require_conference(conference_id)
        return self._topic_entries(product)

    def build_query(
        self,
        conference_id: str,
        kinds: frozenset[str] | None = None,
        from_year: int | None = None,
        to_year: int | None = None,
        limit: int | None = None,
        person: str | None = None,
    ) -> RecommendationQuery:
        this_year = self.today().year
        return RecommendationQuery(
            conference_id=conference_id,
            kinds=kinds if kinds is not None else frozenset(PRODUCT_KINDS),
            from_year=from_year if from_year is not None else this_year - (DEFAULT_YEAR_SPAN - 1),
            to_year=to_year if to_year is not None else this_year,
            limit=limit if limit is not None else DEFAULT_RESULT_LIMIT,
            person=person,
        )

    def recommend(self, q: RecommendationQuery) -> list[RecommendationCard]:
        records = query_scores(self.catalog, q)
        latest = self.catalog.latest_feedback(q.conference_id)
        cards = []
        for rec in records:
            product = self.catalog.products[rec.product_id]
            cards.append(
                RecommendationCard(
                    product_id=product.product_id,
                    title=product.title,
                    kind=product.kind,
                    year_min=product.year_min,
                    year_max=product.year_max,
                    link=LINK_TEMPLATE.format(doi=product.doi) if product.doi else "",
                    score=rec.score,
                    topics=tuple(self._topic_entries(product)),
                    persons=self._display_persons(product),
                    feedback_state=latest.get(product.product_id),
                )
            )
        return cards

    def compare(
        self, conference_id: str, product_id: str, mode: str = "all", min_weight: int = 0
    ) -> ComparisonGraph:
        """Union of both full topic distributions, filtered by view mode and
        by the weight slider; broader edges restricted to surviving nodes.

        No similarity record is required: any catalogued pair can be explored.
        """
        if mode not in COMPARE_MODES:
            raise InvalidQueryError(f"mode must be one of {COMPARE_MODES}")
        if min_weight < 0:
            raise InvalidQueryError("min_weight must be >= 0")
        conference = self.catalog.require_conference(conference_id)
        product = self.catalog.require_product(product_id)
        cw, pw = conference.weights, product.weights

        nodes = []
        for topic in sorted(set(cw) | set(pw)):
            in_conf = topic in cw
            in_prod = topic in pw
            if mode == "conference" and not in_conf:
                continue
            if mode == "product" and not in_prod:
                continue
            if mode == "intersection" and not (in_conf and in_prod):
                continue
            if max(cw.get(topic, 0), pw.get(topic, 0)) < min_weight:
                continue
            membership = "both" if in_conf and in_prod else ("conference_only" if in_conf else "product_only")
            nodes.append(
                ComparisonNode(
                    topic=topic,
                    label=self.catalog.topics.get(topic, topic),
                    conference_weight=cw.get(topic, 0),
                    product_weight=pw.get(topic, 0),
                    membership=membership,
                )
            )
        kept = {n.topic for n in nodes}
        edges = tuple(
            (src, dst) for src, dst in sorted(self.catalog.edges) if src in kept and dst in kept
        )
        return ComparisonGraph(nodes=tuple(nodes), edges=edges)

    def submit_feedback(
        self, conference_id: str, product_id: str, verdict: str, timestamp: int | None = None
    ) -> FeedbackRecord:
        rec = FeedbackRecord(
            conference_id=conference_id,
            product_id=product_id,
            verdict=verdict,
            timestamp=int(self._clock()) if timestamp is None else timestamp,
        )
        append_feedback(self.catalog, rec)  # validates ids and verdict
        if self.journal is not None:
            self.journal.append(rec)
        return rec

    # -- export -----------------------------------------------------------------

    def export_csv(self, q: RecommendationQuery) -> bytes:
        """RFC-4180 CSV, CRLF line endings, header row always present."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(["title", "kind", "year_min", "year_max", "score", "link", "topics"])
        for card in self.recommend(q):
            topics = ";".join(f"{t.label}:{t.weight}" for t in card.topics)
            writer.writerow(
                [card.title, card.kind, card.year_min, card.year_max, f"{card.score:.6f}", card.link, topics]
            )
        return buf.getvalue().encode("utf-8")

    def export_json(self, q: RecommendationQuery) -> bytes:
        cards = [card_as_dict(c) for c in self.recommend(q)]
        return json.dumps(cards, ensure_ascii=False, indent=2).encode("utf-8")

    # -- helpers ------------------------------------------------------------------

    def _topic_entries(self, product: ProductSummary) -> list[TopicEntry]:
        return [
            TopicEntry(topic=t, label=self.catalog.topics.get(t, t), weight=w)
            for t, w in product.reduced[:MAX_CARD_TOPICS]
        ]

    @staticmethod
    def _display_persons(product: ProductSummary) -> tuple[str, ...]:
        if 0 < len(product.authors) < AUTHOR_DISPLAY_LIMIT:
            return product.authors
        return product.editors


def card_as_dict(card: RecommendationCard) -> dict:
    return {
        "product_id": card.product_id,
        "title": card.title,
        "kind": card.kind,
        "year_min": card.year_min,
        "year_max": card.year_max,
        "link": card.link,
        "score": card.score,
        "topics": [{"topic": t.topic, "label": t.label, "weight": t.weight} for t in card.topics],
        "persons": list(card.persons),
        "feedback": card.feedback_state,
    }


# -- HTTP layer ---------------------------------------------------------------------


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _int_param(params: dict[str, list[str]], key: str) -> int | None:
    values = params.get(key)
    if not values:
        return None
    try:
        return int(values[0])
    except ValueError:
        raise ApiError(400, "invalid_parameter", f"{key} must be an integer") from None


def _str_param(params: dict[str, list[str]], key: str) -> str | None:
    values = params.get(key)
    return values[0] if values else None


def _kinds_param(params: dict[str, list[str]]) -> frozenset[str] | None:
    raw = _str_param(params, "kinds")
    if raw is None or raw == "":
        return None
    return frozenset(k.strip() for k in raw.split(",") if k.strip())


class RecommenderHandler(BaseHTTPRequestHandler):
    service: RecommenderService  # injected by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args) -> None:
        print(f"{self.address_string()} {fmt % args}", flush=True)

    # -- plumbing -----------------------------------------------------------------

    def _send(self, status: int, body: bytes, content_type: str, extra: dict[str, str] | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        for key, value in (extra or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict | list) -> None:
        self._send(status, json.dumps(payload, ensure_ascii=False).encode("utf-8"), "application/json; charset=utf-8")

    def _send_error_payload(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def _dispatch(self, handler: Callable[[], None]) -> None:
        try:
            handler()
        except ApiError as exc:
            self._send_error_payload(exc.status, exc.code, exc.message)
        except UnknownIdError as exc:
            self._send_error_payload(404, f"unknown_{exc.kind}", str(exc))
        except InvalidQueryError as exc:
            self._send_error_payload(400, "invalid_query", str(exc))
        except BrokenPipeError:
            pass
        except Exception as exc:  # noqa: BLE001 - last-resort barrier per request
            self._send_error_payload(500, "internal_error", f"{type(exc).__name__}: {exc}")

    # -- routes -------------------------------------------------------------------

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        params = parse_qs(url.query)
        parts = [unquote(p) for p in url.path.split("/") if p]

        if url.path == "/conferences":
            self._dispatch(lambda: self._get_conferences(params))
        elif len(parts) == 3 and parts[0] == "conferences" and parts[2] == "topics":
            self._dispatch(lambda: self._get_conference_topics(parts[1]))
        elif url.path == "/recommendations":
            self._dispatch(lambda: self._get_recommendations(params))
        elif url.path == "/compare":
            self._dispatch(lambda: self._get_compare(params))
        elif url.path == "/export":
            self._dispatch(lambda: self._get_export(params))
        else:
            self._send_error_payload(404, "unknown_route", f"no such endpoint: {url.path}")

    def do_POST(self) -> None:
        if urlsplit(self.path).path == "/feedback":
            self._dispatch(self._post_feedback)
        else:
            self._send_error_payload(404, "unknown_route", f"no such endpoint: {self.path}")

    def _get_conferences(self, params: dict[str, list[str]]) -> None:
        text = _str_param(params, "q") or ""
        hits = self.service.search_conferences(text)
        self._send_json(200, {"conferences": [{"conference_id": cid, "name": name} for cid, name in hits]})

    def _get_conference_topics(self, conference_id: str) -> None:
        entries = self.service.conference_topics(conference_id)
        self._send_json(
            200,
            {
                "conference_id": conference_id,
                "topics": [{"topic": e.topic, "label": e.label, "weight": e.weight} for e in entries],
            },
        )

    def _build_query(self, params: dict[str, list[str]]) -> RecommendationQuery:
        conference_id = _str_param(params, "conference_id")
        if not conference_id:
            raise ApiError(400, "invalid_parameter", "conference_id is required")
        return self.service.build_query(
            conference_id=conference_id,
            kinds=_kinds_param(params),
            from_year=_int_param(params, "from_year"),
            to_year=_int_param(params, "to_year"),
            limit=_int_param(params, "limit"),
            person=_str_param(params, "person"),
        )

    def _get_recommendations(self, params: dict[str, list[str]]) -> None:
        q = self._build_query(params)
        cards = self.service.recommend(q)
        self._send_json(
            200,
            {
                "conference_id": q.conference_id,
                "query": {
                    "kinds": sorted(q.kinds),
                    "from_year": q.from_year,
                    "to_year": q.to_year,
                    "limit": q.limit,
                    "person": q.person,
                },
                "cards": [card_as_dict(c) for c in cards],
            },
        )

    def _get_compare(self, params: dict[str, list[str]]) -> None:
        conference_id = _str_param(params, "conference_id")
        product_id = _str_param(params, "product_id")
        if not conference_id or not product_id:
            raise ApiError(400, "invalid_parameter", "conference_id and product_id are required")
        mode = _str_param(params, "mode") or "all"
        min_weight = _int_param(params, "min_weight")
        graph = self.service.compare(conference_id, product_id, mode, min_weight or 0)
        self._send_json(
            200,
            {
                "conference_id": conference_id,
                "product_id": product_id,
                "mode": mode,
                "min_weight": min_weight or 0,
                "nodes": [
                    {
                        "topic": n.topic,
                        "label": n.label,
                        "conference_weight": n.conference_weight,
                        "product_weight": n.product_weight,
                        "membership": n.membership,
                    }
                    for n in graph.nodes
                ],
                "edges": [{"src": src, "dst": dst} for src, dst in graph.edges],
            },
        )

    def _get_export(self, params: dict[str, list[str]]) -> None:
        fmt = _str_param(params, "format") or "csv"
        if fmt not in ("csv", "json"):
            raise ApiError(400, "invalid_parameter", "format must be csv or json")
        q = self._build_query(params)
        if fmt == "csv":
            body = self.service.export_csv(q)
            self._send(
                200,
                body,
                "text/csv; charset=utf-8",
                {"Content-Disposition": 'attachment; filename="recommendations.csv"'},
            )
        else:
            body = self.service.export_json(q)
            self._send(
                200,
                body,
                "application/json; charset=utf-8",
                {"Content-Disposition": 'attachment; filename="recommendations.json"'},
            )

    def _post_feedback(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ApiError(400, "invalid_parameter", "body must be a JSON object") from None
        if not isinstance(payload, dict):
            raise ApiError(400, "invalid_parameter", "body must be a JSON object")
        missing = [k for k in ("conference_id", "product_id", "verdict") if not payload.get(k)]
        if missing:
            raise ApiError(400, "invalid_parameter", f"missing fields: {', '.join(missing)}")
        rec = self.service.submit_feedback(
            payload["conference_id"], payload["product_id"], payload["verdict"]
        )
        self._send_json(
            200,
            {
                "ok": True,
                "conference_id": rec.conference_id,
                "product_id": rec.product_id,
                "verdict": rec.verdict,
                "timestamp": rec.timestamp,
            },
        )


def make_server(service: RecommenderService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (RecommenderHandler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
