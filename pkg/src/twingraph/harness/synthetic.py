"""Synthetic task family where answering requires crossing both graphs.

Each instance shows a hub holding exactly one of several items.  Every item
has a concept-side fact, and the question asks for the fact of the held
item.  The concept graph treats all items symmetrically and the question
only lists them, so the held one is identifiable from the scene graph
alone: a model without cross-graph exchange can do no better than guessing
among the items' facts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphs import ConceptGraph, CoupledInstance, SceneGraph, Triple, validate


class InfeasibleSpecError(ValueError):
    """The requested spec cannot produce well-formed instances."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator knobs; the defaults make the standard 200-instance corpus."""

    n_instances: int = 200
    mediums_per_instance: int = 2
    medium_pool: int = 6
    hub_pool: int = 3
    place_pool: int = 4
    note_pool: int = 8
    noise_facts: int = 3
    chain_depth: int = 1
    seed: int = 7

    def __post_init__(self):
        if self.n_instances < 1:
            raise InfeasibleSpecError("n_instances must be at least 1")
        if self.mediums_per_instance < 2:
            raise InfeasibleSpecError("need at least 2 mediums or the answer is forced")
        if self.mediums_per_instance > self.medium_pool:
            raise InfeasibleSpecError(
                f"cannot draw {self.mediums_per_instance} distinct mediums from a pool of {self.medium_pool}"
            )
        if self.chain_depth not in (1, 2):
            raise InfeasibleSpecError(f"chain_depth must be 1 or 2, got {self.chain_depth}")
        if min(self.hub_pool, self.place_pool, self.note_pool) < 1:
            raise InfeasibleSpecError("entity pools must be non-empty")
        if self.noise_facts < 0:
            raise InfeasibleSpecError("noise_facts must be non-negative")


def _item(j: int) -> str:
    return f"item_{j:02d}"


def _fact(j: int) -> str:
    return f"fact_{j:02d}"


def _via(j: int) -> str:
    return f"via_{j:02d}"


def generate(spec: SyntheticSpec = SyntheticSpec()) -> list[CoupledInstance]:
    """Produce the corpus for ``spec``; deterministic in ``spec.seed``.

    Instances come in groups sharing one (items, hub, place, noise) draw:
    the group has one instance per possible held item.  Within a group the
    concept graph and question are identical while the gold differs, so a
    model that ignores the scene graph is capped at 1/k on this corpus.
    """
    rng = np.random.default_rng(spec.seed)
    instances: list[CoupledInstance] = []
    while len(instances) < spec.n_instances:
        item_ids = sorted(rng.choice(spec.medium_pool, size=spec.mediums_per_instance, replace=False).tolist())
        items = [_item(j) for j in item_ids]
        hub = f"hub_{int(rng.integers(spec.hub_pool)):02d}"
        place = f"place_{int(rng.integers(spec.place_pool)):02d}"

        concept_triples: list[Triple] = []
        concept_entities: set[str] = set(items)
        for j in item_ids:
            if spec.chain_depth == 1:
                concept_triples.append(Triple(_item(j), "related_to", _fact(j)))
                concept_entities.add(_fact(j))
            else:
                concept_triples.append(Triple(_item(j), "related_to", _via(j)))
                concept_triples.append(Triple(_via(j), "related_to", _fact(j)))
                concept_entities.update((_via(j), _fact(j)))
        seen = set(t.as_tuple() for t in concept_triples)
        for _ in range(spec.noise_facts):
            subject = items[int(rng.integers(len(items)))]
            note = f"note_{int(rng.integers(spec.note_pool)):02d}"
            triple = Triple(subject, "noted_for", note)
            if triple.as_tuple() in seen:
                continue
            seen.add(triple.as_tuple())
            concept_triples.append(triple)
            concept_entities.add(note)
        concept = ConceptGraph(
            entities=frozenset(concept_entities),
            triples=tuple(concept_triples),
            provenance=tuple("synthetic" for _ in concept_triples),
        )
        question = f"which fact belongs to the held one of {', '.join(items)}?"

        for marked_id in item_ids:
            if len(instances) == spec.n_instances:
                break
            marked = _item(marked_id)
            scene_triples = [Triple(hub, "holds", marked)]
            for item in items:
                if item != marked:
                    scene_triples.append(Triple(hub, "next_to", item))
            scene_triples.append(Triple(hub, "at_location", place))
            scene = SceneGraph(
                entities=frozenset([hub, place, *items]),
                triples=tuple(scene_triples),
                mentions=(hub, *items, place),
            )
            instance = CoupledInstance(
                id=f"syn-{len(instances):04d}",
                scene=scene,
                concept=concept,
                question=question,
                topic_entities=tuple(items),
                gold_answers=((_fact(marked_id), 1.0),),
            )
            problems = validate(instance)
            if problems:
                raise InfeasibleSpecError(f"generated an invalid instance: {problems[0]}")
            instances.append(instance)
    return instances
