import pytest
from hypothesis import given, strategies as st

from twingraph.graphs import (
    CANONICAL_RELATIONS,
    DEFAULT_VOCABULARY,
    BAD_GOLD_WEIGHT,
    BAD_PROVENANCE,
    DUPLICATE_TRIPLE,
    EMPTY_ENDPOINT,
    ENDPOINT_NOT_ENTITY,
    GOLD_NOT_CANDIDATE,
    MENTION_NOT_ENTITY,
    NO_GOLD_ANSWERS,
    NO_MEDIUMS,
    UNKNOWN_RELATION,
    ConceptGraph,
    CoupledInstance,
    RelationVocabulary,
    SceneGraph,
    Triple,
    histogram_table,
    mediums,
    normalize_entity,
    relation_histogram,
    validate,
)


def make_instance(**overrides):
    scene = SceneGraph(
        entities=frozenset({"woman", "car", "street"}),
        triples=(
            Triple("woman", "in_front_of", "car"),
            Triple("car", "at_location", "street"),
        ),
        mentions=("woman", "car", "street"),
    )
    concept = ConceptGraph(
        entities=frozenset({"car", "vehicle", "driving"}),
        triples=(
            Triple("car", "is_a", "vehicle"),
            Triple("car", "used_for", "driving"),
        ),
        provenance=("kg", "kg"),
    )
    fields = dict(
        id="inst-0",
        scene=scene,
        concept=concept,
        question="what is the woman standing by?",
        topic_entities=("car",),
        gold_answers=(("vehicle", 1.0),),
    )
    fields.update(overrides)
    return CoupledInstance(**fields)


class TestVocabulary:
    def test_has_twelve_relations(self):
        assert len(DEFAULT_VOCABULARY) == 12
        assert len([n for n, c in CANONICAL_RELATIONS if c == "spatial"]) == 7
        assert len([n for n, c in CANONICAL_RELATIONS if c == "object"]) == 5

    def test_contains_and_category(self):
        assert "in_front_of" in DEFAULT_VOCABULARY
        assert DEFAULT_VOCABULARY.category("in_front_of") == "spatial"
        assert DEFAULT_VOCABULARY.category("wears") == "object"
        assert "is_a" not in DEFAULT_VOCABULARY

    def test_rejects_altered_entry_sets(self):
        with pytest.raises(ValueError):
            RelationVocabulary(entries=(("at_location", "spatial"),))
        with pytest.raises(ValueError):
            RelationVocabulary(entries=CANONICAL_RELATIONS + (("flies_over", "spatial"),))


def test_normalize_entity_folds_case_and_spacing():
    assert normalize_entity("  Fire  Hydrant ") == "fire hydrant"
    assert normalize_entity("Car") == "car"
    assert normalize_entity("\tdog\n") == "dog"


@given(st.text())
def test_normalize_entity_is_idempotent(s):
    once = normalize_entity(s)
    assert normalize_entity(once) == once


def test_mediums_follow_mention_order_and_dedupe():
    scene = SceneGraph(
        entities=frozenset({"b", "a", "c"}),
        triples=(),
        mentions=("c", "a", "c", "b"),
    )
    concept = ConceptGraph(entities=frozenset({"a", "c", "z"}), triples=(), provenance=())
    assert mediums(scene, concept) == ("c", "a")


class TestValidate:
    def test_valid_instance_has_no_violations(self):
        assert validate(make_instance()) == []

    def test_unknown_scene_relation(self):
        inst = make_instance()
        scene = SceneGraph(
            entities=inst.scene.entities,
            triples=inst.scene.triples + (Triple("woman", "hovers_over", "car"),),
            mentions=inst.scene.mentions,
        )
        codes = [v.code for v in validate(make_instance(scene=scene))]
        assert UNKNOWN_RELATION in codes

    def test_concept_relations_are_open_vocabulary(self):
        # "is_a" and "used_for" are fine on the concept side.
        assert validate(make_instance()) == []

    def test_endpoint_and_mention_checks(self):
        scene = SceneGraph(
            entities=frozenset({"woman"}),
            triples=(Triple("woman", "holds", "phone"),),
            mentions=("woman", "ghost"),
        )
        codes = [v.code for v in validate(make_instance(scene=scene))]
        assert ENDPOINT_NOT_ENTITY in codes
        assert MENTION_NOT_ENTITY in codes

    def test_empty_endpoint_and_duplicate(self):
        scene = SceneGraph(
            entities=frozenset({"woman", "car", ""}),
            triples=(
                Triple("woman", "next_to", "car"),
                Triple("woman", "next_to", "car"),
                Triple("woman", "holds", ""),
            ),
            mentions=("woman", "car"),
        )
        codes = [v.code for v in validate(make_instance(scene=scene))]
        assert DUPLICATE_TRIPLE in codes
        assert EMPTY_ENDPOINT in codes

    def test_gold_answer_rules(self):
        codes = [v.code for v in validate(make_instance(gold_answers=()))]
        assert NO_GOLD_ANSWERS in codes
        codes = [v.code for v in validate(make_instance(gold_answers=(("spaceship", 1.0),)))]
        assert GOLD_NOT_CANDIDATE in codes
        codes = [v.code for v in validate(make_instance(gold_answers=(("vehicle", 0.0),)))]
        assert BAD_GOLD_WEIGHT in codes
        codes = [v.code for v in validate(make_instance(gold_answers=(("vehicle", 1.5),)))]
        assert BAD_GOLD_WEIGHT in codes

    def test_provenance_length_and_tags(self):
        inst = make_instance()
        concept = ConceptGraph(
            entities=inst.concept.entities,
            triples=inst.concept.triples,
            provenance=("kg",),
        )
        codes = [v.code for v in validate(make_instance(concept=concept))]
        assert BAD_PROVENANCE in codes
        concept = ConceptGraph(
            entities=inst.concept.entities,
            triples=inst.concept.triples,
            provenance=("kg", "wiki"),
        )
        codes = [v.code for v in validate(make_instance(concept=concept))]
        assert BAD_PROVENANCE in codes

    def test_disjoint_graphs_flagged(self):
        concept = ConceptGraph(
            entities=frozenset({"vehicle", "driving"}),
            triples=(Triple("vehicle", "enables", "driving"),),
            provenance=("kg",),
        )
        codes = [v.code for v in validate(make_instance(concept=concept, gold_answers=(("vehicle", 1.0),)))]
        assert NO_MEDIUMS in codes


def test_relation_histogram_counts_and_order():
    inst = make_instance()
    hist = relation_histogram([inst, inst])
    assert list(hist)[:12] == list(DEFAULT_VOCABULARY.names)
    assert hist["in_front_of"] == 2
    assert hist["at_location"] == 2
    assert hist["wears"] == 0
    assert sum(hist.values()) == 4


def test_histogram_table_renders_all_rows():
    table = histogram_table(relation_histogram([make_instance()]))
    lines = table.splitlines()
    assert len(lines) == 14  # header + 12 relations + total
    assert lines[-1].split()[-1] == "2"
