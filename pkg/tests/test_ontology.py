from __future__ import annotations

import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bookrec.ontology import (
    OntologyCycleError,
    OntologyIntegrityError,
    OntologyParseError,
    UnknownTopicError,
    dump_ontology,
    load_ontology,
    normalize_label,
    validate_ontology,
)


def graph_from(*records: dict):
    payload = "\n".join(json.dumps(r) for r in records).encode("utf-8")
    return load_ontology(io.BytesIO(payload))


def topic(tid: str, label: str | None = None, pmc: list[str] | None = None) -> dict:
    return {"rec": "topic", "id": tid, "label": label or tid, "pmc": pmc or []}


def edge(kind: str, src: str, dst: str) -> dict:
    return {"rec": "edge", "kind": kind, "src": src, "dst": dst}


class TestLoading:
    def test_single_broader_edge(self):
        g = graph_from(topic("A"), topic("B"), topic("C"), edge("broaderGeneric", "B", "A"))
        assert g.ancestors("B") == {"A"}
        assert g.ancestors("A") == frozenset()

    def test_equivalence_is_symmetric(self):
        g = graph_from(topic("A"), topic("B"), edge("relatedEquivalent", "A", "B"))
        assert g.canonical("A") == g.canonical("B")
        assert set(g.class_members("B")) == {"A", "B"}

    def test_two_cycle_rejected(self):
        with pytest.raises(OntologyCycleError):
            graph_from(
                topic("A"), topic("B"),
                edge("broaderGeneric", "A", "B"), edge("broaderGeneric", "B", "A"),
            )

    def test_contracted_self_loop_rejected(self):
        # equivalent topics with a broader edge between them contract to a 1-cycle
        with pytest.raises(OntologyCycleError):
            graph_from(
                topic("A"), topic("B"),
                edge("relatedEquivalent", "A", "B"), edge("broaderGeneric", "A", "B"),
            )

    def test_narrower_is_reversed_broader(self):
        g = graph_from(topic("A"), topic("B"), edge("narrowerGeneric", "A", "B"))
        assert g.ancestors("B") == {"A"}

    def test_parse_error_reports_line_number(self):
        payload = b'{"rec":"topic","id":"A","label":"a"}\nnot json\n'
        with pytest.raises(OntologyParseError) as exc:
            load_ontology(io.BytesIO(payload))
        assert exc.value.line_no == 2

    def test_unknown_rec_value(self):
        with pytest.raises(OntologyParseError):
            graph_from({"rec": "mystery", "id": "A"})

    def test_dangling_edge_endpoint(self):
        with pytest.raises(OntologyIntegrityError):
            graph_from(topic("A"), edge("broaderGeneric", "A", "GHOST"))

    def test_self_edge_rejected(self):
        with pytest.raises(OntologyIntegrityError):
            graph_from(topic("A"), edge("broaderGeneric", "A", "A"))

    def test_duplicate_topic_id(self):
        with pytest.raises(OntologyIntegrityError):
            graph_from(topic("A"), topic("A"))

    def test_empty_label_rejected(self):
        with pytest.raises(OntologyParseError):
            graph_from({"rec": "topic", "id": "A", "label": "   "})

    def test_duplicate_pmc_rejected(self):
        with pytest.raises(OntologyParseError):
            graph_from({"rec": "topic", "id": "A", "label": "a", "pmc": ["X", "X"]})

    def test_label_normalization(self):
        g = graph_from(topic("A", label="  Semantic\t WEB  "))
        assert g.label("A") == "semantic web"
        assert normalize_label("Linked  Data") == "linked data"


class TestCanonical:
    def test_isolated_topic_is_its_own_representative(self):
        g = graph_from(topic("A"))
        assert g.canonical("A") == "A"

    def test_chain_collapses_to_one_class(self):
        g = graph_from(
            topic("A"), topic("B"), topic("C"),
            edge("relatedEquivalent", "A", "B"), edge("relatedEquivalent", "B", "C"),
        )
        assert g.canonical("A") == g.canonical("B") == g.canonical("C")

    def test_representative_is_lexicographically_smallest(self):
        # expected value confirmed by the brute-force component oracle
        ids = {"Z", "A", "M"}
        pairs = [("Z", "A"), ("A", "M")]
        expected = oracles.equivalence_classes(ids, pairs)
        assert expected["Z"] == "A"
        g = graph_from(
            topic("Z"), topic("A"), topic("M"),
            edge("relatedEquivalent", "Z", "A"), edge("relatedEquivalent", "A", "M"),
        )
        for tid in ids:
            assert g.canonical(tid) == "A" == expected[tid]

    def test_unknown_topic(self):
        g = graph_from(topic("A"))
        with pytest.raises(UnknownTopicError):
            g.canonical("nope")


class TestAncestors:
    def test_root_has_no_ancestors(self):
        g = graph_from(topic("A"))
        assert g.ancestors("A") == frozenset()

    def test_chain(self):
        g = graph_from(
            topic("linked_data"), topic("semantic_web"), topic("ai"),
            edge("broaderGeneric", "linked_data", "semantic_web"),
            edge("broaderGeneric", "semantic_web", "ai"),
        )
        assert g.ancestors("linked_data") == {"semantic_web", "ai"}

    def test_diamond(self):
        ids = {"A", "B", "C", "D"}
        broader = [("D", "B"), ("D", "C"), ("B", "A"), ("C", "A")]
        expected = oracles.brute_ancestors(ids, [], broader, "D")
        assert expected == {"A", "B", "C"}
        g = graph_from(
            *(topic(t) for t in sorted(ids)),
            *(edge("broaderGeneric", s, d) for s, d in broader),
        )
        assert g.ancestors("D") == expected


class TestDescendantLabels:
    def test_leaf_singleton(self):
        g = graph_from(topic("A", label="alpha"))
        assert g.descendant_labels("A") == {"alpha"}

    def test_narrower_and_equivalent_labels(self):
        ids = {"semantic_web", "linked_data", "lod"}
        equivalent = [("linked_data", "lod")]
        broader = [("linked_data", "semantic_web")]
        labels = {"semantic_web": "semantic web", "linked_data": "linked data", "lod": "linked open data"}
        expected = oracles.brute_descendant_labels(ids, equivalent, broader, labels, "semantic_web")
        assert expected == {"semantic web", "linked data", "linked open data"}
        g = graph_from(
            topic("semantic_web", "Semantic Web"),
            topic("linked_data", "Linked Data"),
            topic("lod", "Linked Open Data"),
            edge("relatedEquivalent", "linked_data", "lod"),
            edge("broaderGeneric", "linked_data", "semantic_web"),
        )
        assert g.descendant_labels("semantic_web") == expected

    def test_two_children_three_labels(self):
        g = graph_from(
            topic("P", "parent"), topic("C1", "child one"), topic("C2", "child two"),
            edge("broaderGeneric", "C1", "P"), edge("broaderGeneric", "C2", "P"),
        )
        assert g.descendant_labels("P") == {"parent", "child one", "child two"}


class TestValidation:
    def test_clean_graph_has_no_warnings(self):
        g = graph_from(topic("A"), topic("B"), topic("C"))
        assert g.validation.duplicate_labels == []

    def test_duplicate_label_across_classes(self):
        g = graph_from(topic("A", label="networks"), topic("B", label="networks"))
        assert g.validation.duplicate_labels == [("networks", ("A", "B"))]

    def test_duplicate_label_within_class_is_fine(self):
        g = graph_from(
            topic("A", label="networks"), topic("B", label="networks"),
            edge("relatedEquivalent", "A", "B"),
        )
        assert g.validation.duplicate_labels == []

    def test_contributes_to_counted_but_inert(self):
        g = graph_from(
            topic("A"), topic("B"), topic("C"),
            edge("contributesTo", "A", "B"), edge("contributesTo", "B", "C"),
        )
        assert g.validation.contributes_to_edges == 2
        # inert: no closure effect
        assert g.ancestors("A") == frozenset()

    def test_report_is_pure(self, fixture_graph):
        assert validate_ontology(fixture_graph) == fixture_graph.validation


class TestInvariants:
    def test_partition_property(self, fixture_graph):
        members = [fixture_graph.class_members(rep) for rep in fixture_graph.canonical_topics()]
        flat = [tid for m in members for tid in m]
        assert len(flat) == len(set(flat)) == len(fixture_graph.topics)

    def test_ancestor_monotonicity_over_direct_edges(self, fixture_graph):
        for child, parent in fixture_graph.contracted_broader_edges():
            assert fixture_graph.ancestors(child) >= fixture_graph.ancestors(parent) | {parent}

    def test_descendant_labels_contain_own_label(self, fixture_graph):
        for tid in fixture_graph.topics:
            assert fixture_graph.label(tid) in fixture_graph.descendant_labels(tid)

    def test_dump_load_round_trip_is_isomorphic(self, fixture_graph):
        reloaded = load_ontology(io.BytesIO(dump_ontology(fixture_graph)))
        assert set(reloaded.topics) == set(fixture_graph.topics)
        for tid in fixture_graph.topics:
            assert reloaded.canonical(tid) == fixture_graph.canonical(tid)
            assert reloaded.ancestors(tid) == fixture_graph.ancestors(tid)
            assert reloaded.descendant_labels(tid) == fixture_graph.descendant_labels(tid)
            assert reloaded.class_pmc_codes(tid) == fixture_graph.class_pmc_codes(tid)
        assert reloaded.validation == fixture_graph.validation
        # serialization is stable
        assert dump_ontology(reloaded) == dump_ontology(fixture_graph)

    def test_fixture_graph_matches_brute_force_oracle(self, fixture_graph):
        ids = set(fixture_graph.topics)
        equivalent = fixture_graph.equivalent_edges
        broader = fixture_graph.broader_edges
        labels = {tid: fixture_graph.label(tid) for tid in ids}
        canon = oracles.equivalence_classes(ids, equivalent)
        for tid in ids:
            assert fixture_graph.canonical(tid) == canon[tid]
            assert fixture_graph.ancestors(tid) == oracles.brute_ancestors(ids, equivalent, broader, tid)
            assert fixture_graph.descendant_labels(tid) == oracles.brute_descendant_labels(
                ids, equivalent, broader, labels, tid
            )


# random small taxonomies: a DAG over base topics plus alias topics joined by
# equivalence, which keeps the contracted relation acyclic by construction
@st.composite
def small_taxonomies(draw):
    n_base = draw(st.integers(min_value=1, max_value=8))
    base = [f"t{i:02d}" for i in range(n_base)]
    possible = [(base[i], base[j]) for i in range(n_base) for j in range(i)]
    broader = draw(st.lists(st.sampled_from(possible), unique=True, max_size=12)) if possible else []
    n_alias = draw(st.integers(min_value=0, max_value=4))
    aliases = [(f"x{i}", draw(st.sampled_from(base))) for i in range(n_alias)]
    return base, aliases, broader


@settings(max_examples=60, deadline=None)
@given(small_taxonomies())
def test_random_taxonomy_matches_oracle(tax):
    base, aliases, broader = tax
    records = [topic(t, label=f"label {t}") for t in base]
    records += [topic(a, label=f"label {a}") for a, _ in aliases]
    records += [edge("relatedEquivalent", a, b) for a, b in aliases]
    records += [edge("broaderGeneric", s, d) for s, d in broader]
    g = graph_from(*records)

    ids = set(base) | {a for a, _ in aliases}
    labels = {t: f"label {t}" for t in ids}
    equivalent = [(a, b) for a, b in aliases]
    canon = oracles.equivalence_classes(ids, equivalent)
    for tid in sorted(ids):
        assert g.canonical(tid) == canon[tid]
        assert g.ancestors(tid) == oracles.brute_ancestors(ids, equivalent, broader, tid)
        assert g.descendant_labels(tid) == oracles.brute_descendant_labels(ids, equivalent, broader, labels, tid)
