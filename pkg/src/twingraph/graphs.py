"""Data model for coupled scene/concept graphs and their shared mediums.

A scene graph holds visual facts extracted from an image caption under a
fixed 12-relation vocabulary; a concept graph holds open-vocabulary
commonsense facts linked to the mentioned entities.  Entities appearing in
both graphs are the *mediums* that later bridge the two modalities.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

SPATIAL = "spatial"
OBJECT = "object"

# Canonical condensed relation set: seven spatial, five object relations.
CANONICAL_RELATIONS: tuple[tuple[str, str], ...] = (
    ("at_location", SPATIAL),
    ("next_to", SPATIAL),
    ("in_front_of", SPATIAL),
    ("surrounded_by", SPATIAL),
    ("covered_by", SPATIAL),
    ("includes", SPATIAL),
    ("holds", SPATIAL),
    ("has_property", OBJECT),
    ("has_color", OBJECT),
    ("made_of", OBJECT),
    ("wears", OBJECT),
    ("intends_to", OBJECT),
)

PROVENANCE_TAGS = ("kg", "synthetic")


def normalize_entity(surface: str) -> str:
    """Case-fold and trim an entity surface form.

    The same normalized form appearing in both graphs denotes the same
    medium, so every identifier entering the data model goes through here.
    """
    return " ".join(surface.strip().lower().split())


@dataclass(frozen=True)
class RelationVocabulary:
    """The fixed scene-relation vocabulary with per-relation categories."""

    entries: tuple[tuple[str, str], ...] = CANONICAL_RELATIONS

    def __post_init__(self):
        names = [name for name, _ in self.entries]
        if len(names) != len(set(names)):
            raise ValueError("relation names must be unique")
        for name, category in self.entries:
            if name != name.lower() or " " in name:
                raise ValueError(f"relation name not normalized: {name!r}")
            if category not in (SPATIAL, OBJECT):
                raise ValueError(f"unknown relation category: {category!r}")
        if dict(self.entries) != dict(CANONICAL_RELATIONS):
            raise ValueError("vocabulary must contain exactly the 12 condensed relations")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def category(self, name: str) -> str:
        return dict(self.entries)[name]

    def __contains__(self, name: str) -> bool:
        return any(name == n for n, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


DEFAULT_VOCABULARY = RelationVocabulary()


@dataclass(frozen=True)
class Triple:
    """A directed labelled edge (head, relation, tail)."""

    head: str
    relation: str
    tail: str

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.head, self.relation, self.tail)


@dataclass(frozen=True)
class SceneGraph:
    """Visual entities and their relations; mentions keep caption order."""

    entities: frozenset[str]
    triples: tuple[Triple, ...]
    mentions: tuple[str, ...]


@dataclass(frozen=True)
class ConceptGraph:
    """Commonsense facts about the mentioned entities (open relation set).

    ``provenance`` tags each triple with its source and is aligned with
    ``triples``.  The entity set doubles as the candidate answer set.
    """

    entities: frozenset[str]
    triples: tuple[Triple, ...]
    provenance: tuple[str, ...]

    @property
    def candidates(self) -> frozenset[str]:
        return self.entities


@dataclass(frozen=True)
class CoupledInstance:
    """One task item: coupled graphs, question context, and gold answers."""

    id: str
    scene: SceneGraph
    concept: ConceptGraph
    question: str
    topic_entities: tuple[str, ...]
    gold_answers: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Violation:
    """A single invariant violation; validation reports these as data."""

    code: str
    message: str
    context: str = ""

    def __str__(self) -> str:
        where = f" [{self.context}]" if self.context else ""
        return f"{self.code}: {self.message}{where}"


# Violation codes
UNKNOWN_RELATION = "UNKNOWN_RELATION"
EMPTY_ENDPOINT = "EMPTY_ENDPOINT"
ENDPOINT_NOT_ENTITY = "ENDPOINT_NOT_ENTITY"
MENTION_NOT_ENTITY = "MENTION_NOT_ENTITY"
DUPLICATE_TRIPLE = "DUPLICATE_TRIPLE"
BAD_PROVENANCE = "BAD_PROVENANCE"
NO_GOLD_ANSWERS = "NO_GOLD_ANSWERS"
BAD_GOLD_WEIGHT = "BAD_GOLD_WEIGHT"
GOLD_NOT_CANDIDATE = "GOLD_NOT_CANDIDATE"
NO_MEDIUMS = "NO_MEDIUMS"


def _check_triples(
    triples: Sequence[Triple],
    entities: frozenset[str],
    label: str,
    out: list[Violation],
) -> None:
    seen: set[tuple[str, str, str]] = set()
    for t in triples:
        key = t.as_tuple()
        if not t.head or not t.tail:
            out.append(Violation(EMPTY_ENDPOINT, f"triple {key} has an empty endpoint", label))
        for endpoint in (t.head, t.tail):
            if endpoint and endpoint not in entities:
                out.append(
                    Violation(ENDPOINT_NOT_ENTITY, f"{endpoint!r} not in {label} entities", label)
                )
        if key in seen:
            out.append(Violation(DUPLICATE_TRIPLE, f"duplicate triple {key}", label))
        seen.add(key)


def validate(
    instance: CoupledInstance,
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
) -> list[Violation]:
    """Collect every invariant violation of ``instance``.

    Pure function of its inputs; an empty report means the instance is a
    valid training item.
    """
    out: list[Violation] = []
    scene, concept = instance.scene, instance.concept

    for t in scene.triples:
        if t.relation not in vocabulary:
            out.append(
                Violation(UNKNOWN_RELATION, f"scene relation {t.relation!r} not in vocabulary", "scene")
            )
    _check_triples(scene.triples, scene.entities, "scene", out)
    for m in scene.mentions:
        if m not in scene.entities:
            out.append(Violation(MENTION_NOT_ENTITY, f"mention {m!r} not a scene entity", "scene"))

    _check_triples(concept.triples, concept.entities, "concept", out)
    if len(concept.provenance) != len(concept.triples):
        out.append(
            Violation(
                BAD_PROVENANCE,
                f"{len(concept.provenance)} provenance tags for {len(concept.triples)} triples",
                "concept",
            )
        )
    for tag in concept.provenance:
        if tag not in PROVENANCE_TAGS:
            out.append(Violation(BAD_PROVENANCE, f"unknown provenance tag {tag!r}", "concept"))

    if not instance.gold_answers:
        out.append(Violation(NO_GOLD_ANSWERS, "instance has no gold answers", instance.id))
    for answer, weight in instance.gold_answers:
        if not (0.0 < weight <= 1.0):
            out.append(
                Violation(BAD_GOLD_WEIGHT, f"gold weight {weight} for {answer!r} outside (0, 1]", instance.id)
            )
        if answer not in concept.entities:
            out.append(
                Violation(GOLD_NOT_CANDIDATE, f"gold answer {answer!r} not a concept entity", instance.id)
            )

    if not mediums(scene, concept):
        out.append(Violation(NO_MEDIUMS, "scene and concept graphs share no mentioned entity", instance.id))
    return out


def mediums(scene: SceneGraph, concept: ConceptGraph) -> tuple[str, ...]:
    """Entities shared by both graphs, in first-mention order, deduplicated."""
    seen: set[str] = set()
    out: list[str] = []
    for m in scene.mentions:
        if m in concept.entities and m not in seen:
            seen.add(m)
            out.append(m)
    return tuple(out)


def relation_histogram(
    corpus: Iterable[CoupledInstance],
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
) -> dict[str, int]:
    """Count scene triples per relation over a corpus.

    Every vocabulary relation is present (possibly with count 0); any
    off-vocabulary relation found in the data is appended after them so the
    total always equals the number of scene triples.
    """
    counts: Counter[str] = Counter()
    for instance in corpus:
        for t in instance.scene.triples:
            counts[t.relation] += 1
    out = {name: counts.pop(name, 0) for name in vocabulary.names}
    for name in sorted(counts):
        out[name] = counts[name]
    return out


def histogram_table(histogram: Mapping[str, int], vocabulary: RelationVocabulary = DEFAULT_VOCABULARY) -> str:
    """Render a relation histogram as a fixed-width text table."""
    width = max(len(name) for name in histogram) if histogram else 12
    width = max(width, len("relation"))
    lines = [f"{'relation':<{width}}  {'category':<8}  {'count':>8}"]
    for name, count in histogram.items():
        category = vocabulary.category(name) if name in vocabulary else "-"
        lines.append(f"{name:<{width}}  {category:<8}  {count:>8}")
    total = sum(histogram.values())
    lines.append(f"{'total':<{width}}  {'':<8}  {total:>8}")
    return "\n".join(lines)
