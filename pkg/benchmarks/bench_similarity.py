"""Benchmark the batch similarity pass: numba kernel vs pure-numpy fallback.

    python benchmarks/bench_similarity.py [--conferences N] [--products N]
                                          [--topics N] [--density N] [--workers N]

The synthetic corpus is seeded and identical for both backends; the script
asserts both produce the same records before reporting timings. The numba
number includes JIT warmup on a tiny corpus so the measured run is compile-free
(matching steady-state batch behavior; set BOOKREC_NO_NUMBA=1 anywhere else in
the pipeline to force the numpy path).
"""

from __future__ import annotations

import argparse
import random
import time

from bookrec.similarity import SimilarityConfig, TopicVector, precompute_with_stats


def synth_corpus(n_conferences: int, n_products: int, n_topics: int, density: int, seed: int = 97):
    rng = random.Random(seed)
    topics = [f"t{i:05d}" for i in range(n_topics)]

    def vector(pid: str) -> TopicVector:
        # clustered supports so a realistic share of pairs passes the gate
        anchor = rng.randrange(n_topics)
        support_size = rng.randint(max(2, density // 2), density)
        support = {topics[(anchor + offset) % n_topics] for offset in range(support_size)}
        return TopicVector(pid, {t: rng.randint(1, 40) for t in support})

    conferences = [vector(f"conf{i:04d}") for i in range(n_conferences)]
    products = [vector(f"prod{i:05d}") for i in range(n_products)]
    return conferences, products


def run(backend: str, conferences, products, config, workers: int):
    started = time.perf_counter()
    records, stats = precompute_with_stats(
        conferences, products, config, workers=workers, backend=backend
    )
    elapsed = time.perf_counter() - started
    return records, stats, elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--conferences", type=int, default=120)
    parser.add_argument("--products", type=int, default=4000)
    parser.add_argument("--topics", type=int, default=1500)
    parser.add_argument("--density", type=int, default=60, help="max topics per vector")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    conferences, products = synth_corpus(args.conferences, args.products, args.topics, args.density)
    config = SimilarityConfig()
    pairs = args.conferences * args.products
    print(
        f"corpus: {args.conferences} conferences x {args.products} products "
        f"({pairs} candidate pairs), <= {args.density} topics per vector"
    )

    # warm up the JIT on a tiny slice so compile time is not measured
    precompute_with_stats(conferences[:1], products[:10], config, backend="numba")

    results = {}
    for backend in ("numba", "numpy"):
        records, stats, elapsed = run(backend, conferences, products, config, args.workers)
        results[backend] = records
        rate = pairs / elapsed / 1e6
        print(
            f"{backend:>6}: {elapsed:8.3f}s  {rate:6.2f}M pairs/s  "
            f"(past gate: {stats.surviving_jaccard}, persisted: {stats.emitted})"
        )

    assert results["numba"] == results["numpy"], "backends disagree"
    print("backends agree: identical record lists")


if __name__ == "__main__":
    main()
