"""Taxonomy-driven recommendation of editorial products for conference series.

Pipeline: load a research-topic taxonomy (ontology), ingest chapter metadata
and group it into products (corpus), tag every product with a weighted topic
distribution (annotator), precompute Jaccard-pruned cosine similarity between
conference series and all products (similarity), persist everything in a
catalog (store), and answer editor queries over it (service, cli).
"""

__version__ = "0.1.0"
