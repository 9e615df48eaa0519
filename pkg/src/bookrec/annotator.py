"""Topic detection and per-product topic distributions.

A chapter is tagged with a topic when the chapter text carries one of the
topic's trigger phrases: its own label, any label of an equivalent topic, or
any label found in its narrower subtree. Title, abstract, and each keyword are
scanned as separate units, so a phrase never matches across field boundaries.
Phrases match as contiguous token runs; tokens are maximal alphanumeric spans,
which rules out substring hits like "biontology matching".

A product's topic weight is the number of its chapters tagged with the topic.
Because triggers include the narrower subtree, tagging is upward closed: a
chapter tagged with a topic is tagged with every broader topic too.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

from .corpus import ChapterRecord, ProductDescriptor
from .ontology import OntologyGraph, normalize_label

DEFAULT_TOPIC_BUDGET = 15  # matches the card display cap

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Maximal alphanumeric token spans of the normalized text."""
    return _TOKEN.findall(normalize_label(text))


@dataclass
class LabelMatcher:
    """Compiled phrase dictionary: normalized label -> canonical topics it triggers."""

    label_to_topics: dict[str, frozenset[str]]
    _token_index: dict[tuple[str, ...], frozenset[str]] = field(repr=False, default_factory=dict)
    _phrase_lengths: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        index: dict[tuple[str, ...], set[str]] = {}
        for label, topics in self.label_to_topics.items():
            tokens = tuple(tokenize(label))
            if tokens:
                index.setdefault(tokens, set()).update(topics)
        self._token_index = {k: frozenset(v) for k, v in index.items()}
        self._phrase_lengths = tuple(sorted({len(k) for k in self._token_index}))

    def match_tokens(self, tokens: list[str]) -> set[str]:
        found: set[str] = set()
        n = len(tokens)
        for width in self._phrase_lengths:
            if width > n:
                break
            for start in range(n - width + 1):
                hit = self._token_index.get(tuple(tokens[start:start + width]))
                if hit:
                    found.update(hit)
        return found


@dataclass
class TopicDistribution:
    product_id: str
    weights: dict[str, int]  # canonical topic -> chapters tagged with it
    chapter_topics: dict[str, frozenset[str]]

    @property
    def is_empty(self) -> bool:
        return not self.weights


def build_matcher(graph: OntologyGraph) -> LabelMatcher:
    """Every ontology label becomes a key; the value set holds each canonical
    topic that claims the label through itself, an equivalent, or a narrower
    descendant."""
    label_to_topics: dict[str, set[str]] = {}
    for rep in graph.canonical_topics():
        claimants = {rep, *graph.ancestors(rep)}
        for label in graph.class_labels(rep):
            label_to_topics.setdefault(label, set()).update(claimants)
    return LabelMatcher({label: frozenset(t) for label, t in label_to_topics.items()})


def match_chapter(matcher: LabelMatcher, chapter: ChapterRecord) -> frozenset[str]:
    """Canonical topics triggered anywhere in title, abstract, or a keyword."""
    found: set[str] = set()
    for unit in (chapter.title, chapter.abstract, *chapter.keywords):
        if unit:
            found.update(matcher.match_tokens(tokenize(unit)))
    return frozenset(found)


def annotate_product(
    matcher: LabelMatcher, graph: OntologyGraph, product: ProductDescriptor
) -> TopicDistribution:
    """Tag every chapter, close upward, and count chapters per topic.

    A product whose chapters trigger nothing yields an empty distribution;
    callers record those in the run report since such products can never be
    recommended.
    """
    chapter_topics: dict[str, frozenset[str]] = {}
    counts: Counter[str] = Counter()
    for chapter in product.chapters:
        matched = match_chapter(matcher, chapter)
        closed = set(matched)
        for topic in matched:
            closed.update(graph.ancestors(topic))
        tagged = frozenset(closed)
        chapter_topics[chapter.chapter_id] = tagged
        counts.update(tagged)
    return TopicDistribution(product.product_id, dict(counts), chapter_topics)


def reduce_topics(dist: TopicDistribution, budget: int = DEFAULT_TOPIC_BUDGET) -> list[tuple[str, int]]:
    """Greedy set cover over topic-bearing chapters, then pad with the
    heaviest leftover topics until the budget is spent.

    Tie order at each greedy step: most uncovered chapters, then higher total
    weight, then smaller topic id. The returned list is sorted by weight
    descending, ties by topic id.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    covers: dict[str, set[str]] = {}
    for chapter_id, topics in dist.chapter_topics.items():
        for topic in topics:
            covers.setdefault(topic, set()).add(chapter_id)

    uncovered = {c for c, topics in dist.chapter_topics.items() if topics}
    chosen: list[str] = []
    remaining = dict(covers)
    while uncovered and len(chosen) < budget and remaining:
        best = min(
            remaining,
            key=lambda t: (-len(remaining[t] & uncovered), -dist.weights[t], t),
        )
        if not remaining[best] & uncovered:
            break
        chosen.append(best)
        uncovered -= remaining[best]
        del remaining[best]

    if len(chosen) < budget:
        leftovers = sorted(
            (t for t in dist.weights if t not in chosen),
            key=lambda t: (-dist.weights[t], t),
        )
        chosen.extend(leftovers[: budget - len(chosen)])

    return sorted(((t, dist.weights[t]) for t in chosen), key=lambda tw: (-tw[1], tw[0]))


def infer_pmcs(graph: OntologyGraph, dist: TopicDistribution) -> dict[str, int]:
    """PMC code -> number of chapters tagged with at least one topic carrying it."""
    chapters_per_code: dict[str, set[str]] = {}
    for chapter_id, topics in dist.chapter_topics.items():
        for topic in topics:
            for code in graph.class_pmc_codes(topic):
                chapters_per_code.setdefault(code, set()).add(chapter_id)
    return {code: len(chs) for code, chs in sorted(chapters_per_code.items())}


def dump_annotations(
    rows: list[tuple[TopicDistribution, list[tuple[str, int]], dict[str, int]]], fh
) -> None:
    """JSON Lines dump, one object per product:
    {"product_id": ..., "weights": {...}, "reduced": [[topic, count], ...], "pmc": {...}}
    """
    for dist, reduced, pmc in rows:
        fh.write(
            json.dumps(
                {
                    "product_id": dist.product_id,
                    "weights": dict(sorted(dist.weights.items())),
                    "reduced": [[t, w] for t, w in reduced],
                    "pmc": dict(sorted(pmc.items())),
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
        )
