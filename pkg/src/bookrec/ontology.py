"""Research-topic taxonomy: loading, validation, and closure queries.

The taxonomy file is UTF-8 JSON Lines. Each line is either a topic record

    {"rec": "topic", "id": "semantic_web", "label": "Semantic Web", "pmc": ["I21017"]}

or an edge record

    {"rec": "edge", "kind": "broaderGeneric", "src": "linked_data", "dst": "semantic_web"}

Record order does not matter. Supported edge kinds are ``relatedEquivalent``
(topics interchangeable for retrieval), ``broaderGeneric`` (dst is a broader
area of src), ``narrowerGeneric`` (stored as the reversed broaderGeneric), and
``contributesTo`` (parsed and counted, never used downstream).

After loading, equivalent topics are collapsed into classes keyed by their
lexicographically smallest member, and the broader relation is contracted to
class representatives. The contracted relation must be acyclic.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

EDGE_KINDS = ("relatedEquivalent", "broaderGeneric", "narrowerGeneric", "contributesTo")

_WS = re.compile(r"\s+")


class OntologyError(Exception):
    """Base class for taxonomy loading and query failures."""


class OntologyParseError(OntologyError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class OntologyIntegrityError(OntologyError):
    pass


class OntologyCycleError(OntologyError):
    def __init__(self, cycle: list[str]):
        super().__init__("broaderGeneric cycle after equivalence contraction: " + " -> ".join(cycle))
        self.cycle = cycle


class UnknownTopicError(OntologyError, KeyError):
    def __init__(self, topic_id: str):
        super().__init__(f"unknown topic: {topic_id!r}")
        self.topic_id = topic_id


def normalize_label(raw: str) -> str:
    """Lowercase, Unicode-NFC, inner whitespace collapsed to single spaces."""
    return _WS.sub(" ", unicodedata.normalize("NFC", raw).lower()).strip()


@dataclass(frozen=True)
class Topic:
    id: str
    label: str  # normalized form, see normalize_label
    pmc_codes: tuple[str, ...] = ()


@dataclass
class ValidationReport:
    """Advisory findings; never fatal.

    duplicate_labels: label shared by more than one equivalence class (warning).
    topics_without_pmc: topic ids with no product-market code attached (info).
    contributes_to_edges: count of parsed-but-inert contributesTo edges (info).
    """

    duplicate_labels: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    topics_without_pmc: list[str] = field(default_factory=list)
    contributes_to_edges: int = 0

    def warning_lines(self) -> list[str]:
        return [
            f"label {label!r} shared by classes {', '.join(classes)}"
            for label, classes in self.duplicate_labels
        ]

    def info_lines(self) -> list[str]:
        lines = [f"{len(self.topics_without_pmc)} topics carry no PMC code"]
        lines.append(f"{self.contributes_to_edges} contributesTo edges retained but unused")
        return lines


class OntologyGraph:
    """Immutable after construction; safe to share across threads."""

    def __init__(
        self,
        topics: dict[str, Topic],
        equivalent_edges: list[tuple[str, str]],
        broader_edges: list[tuple[str, str]],
        contributes_edges: list[tuple[str, str]],
    ):
        self.topics = topics
        self.equivalent_edges = equivalent_edges
        # (child, parent): parent is the broader area
        self.broader_edges = broader_edges
        self.contributes_edges = contributes_edges

        self._canonical = self._build_equivalence_classes()
        grouped: dict[str, list[str]] = {}
        for tid, rep in self._canonical.items():
            grouped.setdefault(rep, []).append(tid)
        self._members = {rep: tuple(sorted(ids)) for rep, ids in grouped.items()}

        self._parents, self._children = self._contract_broader()
        order = self._toposort()
        self._ancestors = self._close_upward(order)
        self._class_labels = {
            rep: frozenset(normalize_label(self.topics[m].label) for m in members)
            for rep, members in self._members.items()
        }
        self._descendant_labels = self._close_labels_downward(order)
        self._class_pmcs = {
            rep: frozenset(code for m in members for code in self.topics[m].pmc_codes)
            for rep, members in self._members.items()
        }
        self.validation = validate_ontology(self)

    # -- derived index construction ------------------------------------------------

    def _build_equivalence_classes(self) -> dict[str, str]:
        parent = {tid: tid for tid in self.topics}

        def find(x: str) -> str:
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for a, b in self.equivalent_edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                # keep the lexicographically smaller id as the class root
                if rb < ra:
                    ra, rb = rb, ra
                parent[rb] = ra
        return {tid: find(tid) for tid in self.topics}

    def _contract_broader(self) -> tuple[dict[str, frozenset[str]], dict[str, frozenset[str]]]:
        parents: dict[str, set[str]] = {rep: set() for rep in self._members}
        children: dict[str, set[str]] = {rep: set() for rep in self._members}
        for child, par in self.broader_edges:
            c, p = self._canonical[child], self._canonical[par]
            if c == p:
                raise OntologyCycleError([child, par, child])
            parents[c].add(p)
            children[p].add(c)
        return (
            {rep: frozenset(ps) for rep, ps in parents.items()},
            {rep: frozenset(cs) for rep, cs in children.items()},
        )

    def _toposort(self) -> list[str]:
        """Order class representatives so every parent precedes its children."""
        indegree = {rep: len(self._parents[rep]) for rep in self._members}
        queue = sorted(rep for rep, d in indegree.items() if d == 0)
        order: list[str] = []
        while queue:
            node = queue.pop()
            order.append(node)
            for child in sorted(self._children[node]):
                indegree[child] -= 1
                if indegree[child] == 0:
                    queue.append(child)
        if len(order) != len(self._members):
            raise OntologyCycleError(self._find_cycle())
        return order

    def _find_cycle(self) -> list[str]:
        state: dict[str, int] = {}  # 1 = on stack, 2 = done
        trail: list[str] = []

        def visit(node: str) -> list[str] | None:
            state[node] = 1
            trail.append(node)
            for par in sorted(self._parents[node]):
                if state.get(par) == 1:
                    return trail[trail.index(par):] + [par]
                if par not in state:
                    found = visit(par)
                    if found:
                        return found
            trail.pop()
            state[node] = 2
            return None

        for rep in sorted(self._members):
            if rep not in state:
                found = visit(rep)
                if found:
                    return found
        raise AssertionError("toposort failed but no cycle found")

    def _close_upward(self, order: list[str]) -> dict[str, frozenset[str]]:
        closed: dict[str, frozenset[str]] = {}
        for rep in order:  # parents come first
            acc: set[str] = set()
            for par in self._parents[rep]:
                acc.add(par)
                acc.update(closed[par])
            closed[rep] = frozenset(acc)
        return closed

    def _close_labels_downward(self, order: list[str]) -> dict[str, frozenset[str]]:
        closed: dict[str, frozenset[str]] = {}
        for rep in reversed(order):  # children come first
            acc = set(self._class_labels[rep])
            for child in self._children[rep]:
                acc.update(closed[child])
            closed[rep] = frozenset(acc)
        return closed

    # -- queries --------------------------------------------------------------------

    def canonical(self, topic_id: str) -> str:
        """Class representative: the lexicographically smallest equivalent id."""
        try:
            return self._canonical[topic_id]
        except KeyError:
            raise UnknownTopicError(topic_id) from None

    def class_members(self, topic_id: str) -> tuple[str, ...]:
        return self._members[self.canonical(topic_id)]

    def ancestors(self, topic_id: str) -> frozenset[str]:
        """Canonical representatives of all strictly broader areas."""
        return self._ancestors[self.canonical(topic_id)]

    def parents(self, topic_id: str) -> frozenset[str]:
        return self._parents[self.canonical(topic_id)]

    def children(self, topic_id: str) -> frozenset[str]:
        return self._children[self.canonical(topic_id)]

    def descendant_labels(self, topic_id: str) -> frozenset[str]:
        """Trigger phrases for a topic: labels of its class and every narrower class."""
        return self._descendant_labels[self.canonical(topic_id)]

    def class_labels(self, topic_id: str) -> frozenset[str]:
        return self._class_labels[self.canonical(topic_id)]

    def class_pmc_codes(self, topic_id: str) -> frozenset[str]:
        """PMC codes attached to any member of the topic's equivalence class."""
        return self._class_pmcs[self.canonical(topic_id)]

    def label(self, topic_id: str) -> str:
        try:
            return self.topics[topic_id].label
        except KeyError:
            raise UnknownTopicError(topic_id) from None

    def canonical_topics(self) -> list[str]:
        return sorted(self._members)

    def contracted_broader_edges(self) -> list[tuple[str, str]]:
        """(child, parent) pairs over class representatives, sorted."""
        return sorted(
            (child, parent) for parent, kids in self._children.items() for child in kids
        )


def load_ontology(source: BinaryIO | Iterable[bytes]) -> OntologyGraph:
    """Parse the JSON Lines taxonomy format and build all derived indexes.

    Raises OntologyParseError for malformed records, OntologyIntegrityError for
    dangling ids / self-edges / duplicate ids, OntologyCycleError when the
    contracted broader relation has a cycle.
    """
    topics: dict[str, Topic] = {}
    pending_edges: list[tuple[int, str, str, str]] = []

    for line_no, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise OntologyParseError(line_no, f"invalid JSON: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise OntologyParseError(line_no, "record is not a JSON object")

        kind = rec.get("rec")
        if kind == "topic":
            topics[_parse_topic_id(rec, line_no, topics)] = _parse_topic(rec, line_no)
        elif kind == "edge":
            pending_edges.append(_parse_edge(rec, line_no))
        else:
            raise OntologyParseError(line_no, f"unknown rec value: {kind!r}")

    equivalent: list[tuple[str, str]] = []
    broader: list[tuple[str, str]] = []
    contributes: list[tuple[str, str]] = []
    for line_no, kind, src, dst in pending_edges:
        for endpoint in (src, dst):
            if endpoint not in topics:
                raise OntologyIntegrityError(f"line {line_no}: edge references unknown topic {endpoint!r}")
        if src == dst:
            raise OntologyIntegrityError(f"line {line_no}: self-edge on {src!r}")
        if kind == "relatedEquivalent":
            equivalent.append((src, dst))
        elif kind == "broaderGeneric":
            broader.append((src, dst))
        elif kind == "narrowerGeneric":
            broader.append((dst, src))  # one canonical internal direction
        else:
            contributes.append((src, dst))

    return OntologyGraph(topics, equivalent, broader, contributes)


def _parse_topic_id(rec: dict, line_no: int, seen: dict[str, Topic]) -> str:
    tid = rec.get("id")
    if not isinstance(tid, str) or not tid:
        raise OntologyParseError(line_no, "topic record needs a non-empty string id")
    if tid in seen:
        raise OntologyIntegrityError(f"line {line_no}: duplicate topic id {tid!r}")
    return tid


def _parse_topic(rec: dict, line_no: int) -> Topic:
    label = rec.get("label")
    if not isinstance(label, str) or not normalize_label(label):
        raise OntologyParseError(line_no, "topic label empty after normalization")
    pmc = rec.get("pmc", [])
    if pmc is None:
        pmc = []
    if not isinstance(pmc, list) or not all(isinstance(c, str) and c for c in pmc):
        raise OntologyParseError(line_no, "pmc must be a list of non-empty strings")
    if len(set(pmc)) != len(pmc):
        raise OntologyParseError(line_no, "duplicate pmc codes on one topic")
    return Topic(id=rec["id"], label=normalize_label(label), pmc_codes=tuple(pmc))


def _parse_edge(rec: dict, line_no: int) -> tuple[int, str, str, str]:
    kind = rec.get("kind")
    if kind not in EDGE_KINDS:
        raise OntologyParseError(line_no, f"unknown edge kind: {kind!r}")
    src, dst = rec.get("src"), rec.get("dst")
    if not (isinstance(src, str) and src and isinstance(dst, str) and dst):
        raise OntologyParseError(line_no, "edge needs non-empty src and dst")
    return line_no, kind, src, dst


def validate_ontology(graph: OntologyGraph) -> ValidationReport:
    """Pure advisory report; see ValidationReport for the finding classes."""
    label_owners: dict[str, set[str]] = {}
    for rep in graph.canonical_topics():
        for label in graph.class_labels(rep):
            label_owners.setdefault(label, set()).add(rep)
    duplicates = sorted(
        (label, tuple(sorted(owners)))
        for label, owners in label_owners.items()
        if len(owners) > 1
    )
    without_pmc = sorted(t.id for t in graph.topics.values() if not t.pmc_codes)
    return ValidationReport(
        duplicate_labels=duplicates,
        topics_without_pmc=without_pmc,
        contributes_to_edges=len(graph.contributes_edges),
    )


def dump_ontology(graph: OntologyGraph) -> bytes:
    """Serialize back to the JSON Lines format; load(dump(g)) is isomorphic to g."""
    lines = []
    for tid in sorted(graph.topics):
        topic = graph.topics[tid]
        lines.append(
            json.dumps(
                {"rec": "topic", "id": topic.id, "label": topic.label, "pmc": list(topic.pmc_codes)},
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    edges = (
        [("relatedEquivalent", s, d) for s, d in graph.equivalent_edges]
        + [("broaderGeneric", s, d) for s, d in graph.broader_edges]
        + [("contributesTo", s, d) for s, d in graph.contributes_edges]
    )
    for kind, src, dst in sorted(edges):
        lines.append(
            json.dumps(
                {"rec": "edge", "kind": kind, "src": src, "dst": dst},
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
