"""Batch pairwise similarity between conference series and editorial products.

Every (conference, product) pair other than a self-pair is a candidate. A
cheap Jaccard index over the topic support sets acts as a pruning gate; only
pairs at or above the Jaccard threshold get a cosine score, and only scores
above the persistence threshold are kept (strictly above by default, see
SimilarityConfig.inclusive_cosine). Cosine works on the weighted vectors, so
it ranks by topical orientation regardless of how many chapters a product has.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from . import _simkernels

DEFAULT_JACCARD_THRESHOLD = 0.125
DEFAULT_COSINE_THRESHOLD = 0.5


class SimilarityConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityConfig:
    jaccard_threshold: float = DEFAULT_JACCARD_THRESHOLD
    cosine_threshold: float = DEFAULT_COSINE_THRESHOLD
    # False: persist only scores strictly above the cosine threshold
    inclusive_cosine: bool = False

    def __post_init__(self) -> None:
        for name in ("jaccard_threshold", "cosine_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SimilarityConfigError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class TopicVector:
    product_id: str
    entries: Mapping[str, float]  # topic -> positive weight; keys are the support


@dataclass(frozen=True)
class SimilarityRecord:
    conference_id: str
    product_id: str
    score: float


@dataclass(frozen=True)
class PruneStats:
    candidate_pairs: int
    surviving_jaccard: int
    emitted: int


def jaccard(a: TopicVector, b: TopicVector) -> float:
    """Intersection over union of the supports; weights are ignored."""
    sa, sb = set(a.entries), set(b.entries)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


def cosine(a: TopicVector, b: TopicVector) -> float:
    """Angle-based similarity of the weighted vectors; 0 if either is empty."""
    if not a.entries or not b.entries:
        return 0.0
    shared = set(a.entries) & set(b.entries)
    dot = sum(a.entries[t] * b.entries[t] for t in sorted(shared))
    norm_a = math.sqrt(sum(w * w for w in a.entries.values()))
    norm_b = math.sqrt(sum(w * w for w in b.entries.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


class _Csr:
    """Row-per-vector sparse matrix over a shared topic index."""

    def __init__(self, vectors: list[TopicVector], topic_index: dict[str, int]):
        self.ids = [v.product_id for v in vectors]
        indices: list[np.ndarray] = []
        weights: list[np.ndarray] = []
        indptr = np.zeros(len(vectors) + 1, np.int64)
        for row, vector in enumerate(vectors):
            pairs = sorted((topic_index[t], float(w)) for t, w in vector.entries.items())
            indices.append(np.array([p[0] for p in pairs], np.int64))
            weights.append(np.array([p[1] for p in pairs], np.float64))
            indptr[row + 1] = indptr[row] + len(pairs)
        self.indices = np.concatenate(indices) if indices else np.zeros(0, np.int64)
        self.weights = np.concatenate(weights) if weights else np.zeros(0, np.float64)
        self.indptr = indptr
        self.norm_sq = np.zeros(len(vectors), np.float64)
        for row in range(len(vectors)):
            segment = self.weights[indptr[row]:indptr[row + 1]]
            self.norm_sq[row] = float(np.sum(segment * segment))

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray, float]:
        start, end = self.indptr[i], self.indptr[i + 1]
        return self.indices[start:end], self.weights[start:end], float(self.norm_sq[i])


def precompute_with_stats(
    conferences: list[TopicVector],
    products: list[TopicVector],
    config: SimilarityConfig | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> tuple[list[SimilarityRecord], PruneStats]:
    """Single pass that yields both the surviving records and the pair counts."""
    config = config or SimilarityConfig()
    topic_index = {
        t: i
        for i, t in enumerate(
            sorted({t for v in (*conferences, *products) for t in v.entries})
        )
    }
    conf_order = sorted(range(len(conferences)), key=lambda i: conferences[i].product_id)
    conf_csr = _Csr([conferences[i] for i in conf_order], topic_index)
    prod_csr = _Csr(products, topic_index)
    row_of = {pid: row for row, pid in enumerate(prod_csr.ids)}

    n_products = len(products)
    candidates = 0
    survived_total = 0
    per_conf: list[list[SimilarityRecord]] = [[] for _ in conf_order]
    lock = threading.Lock()

    def scan(ci: int) -> None:
        nonlocal candidates, survived_total
        conference_id = conf_csr.ids[ci]
        self_row = row_of.get(conference_id, -1)
        c_idx, c_w, c_norm_sq = conf_csr.row(ci)
        rows, scores, survived = _simkernels.scan_conference(
            c_idx, c_w, c_norm_sq,
            prod_csr.indices, prod_csr.weights, prod_csr.indptr, prod_csr.norm_sq,
            len(topic_index), self_row,
            config.jaccard_threshold, config.cosine_threshold, config.inclusive_cosine,
            backend=backend,
        )
        hits = sorted(
            ((float(s), prod_csr.ids[int(r)]) for r, s in zip(rows, scores)),
            key=lambda item: (-item[0], item[1]),
        )
        per_conf[ci] = [SimilarityRecord(conference_id, pid, s) for s, pid in hits]
        with lock:
            candidates += n_products - (1 if self_row >= 0 else 0)
            survived_total += survived

    if workers > 1 and len(conf_order) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(scan, range(len(conf_order))))
    else:
        for ci in range(len(conf_order)):
            scan(ci)

    records = [rec for bucket in per_conf for rec in bucket]
    stats = PruneStats(candidates, survived_total, len(records))
    return records, stats


def precompute(
    conferences: list[TopicVector],
    products: list[TopicVector],
    config: SimilarityConfig | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> list[SimilarityRecord]:
    """All surviving (conference, product, score) triples, sorted by
    (conference_id, score descending, product_id).

    Output is identical for any worker count: conferences are partitioned,
    each slice is scored and sorted independently, and slices are merged in
    conference order.
    """
    records, _ = precompute_with_stats(conferences, products, config, workers, backend)
    return records


def prune_stats(
    conferences: list[TopicVector],
    products: list[TopicVector],
    config: SimilarityConfig | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> PruneStats:
    """Pair counts observed by the same pass precompute runs."""
    _, stats = precompute_with_stats(conferences, products, config, workers, backend)
    return stats


def dump_scores(records: Iterable[SimilarityRecord], fh: IO[str]) -> None:
    """Tab-separated score dump, 6 decimal places."""
    for rec in records:
        fh.write(f"{rec.conference_id}\t{rec.product_id}\t{rec.score:.6f}\n")
