"""Twin graph attention with context-aware scoring and medium exchange.

Two structurally identical sub-networks (one per graph) run synchronous
layers of attention-weighted message passing over a shared entity table.
Between layers the embeddings of medium entities are swapped across the
graphs, which is the only channel through which the two modalities talk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import (
    DEFAULT_VOCABULARY,
    CoupledInstance,
    RelationVocabulary,
    Triple,
    mediums,
)
from .numeric import Tensor, ops

INVERSE_SUFFIX = "~inv"

MIN_LAYERS = 1
MAX_LAYERS = 8

ATTENTION_MODES = ("exp", "ratio")


class MissingEmbeddingError(KeyError):
    """An entity or relation has no row in the embedding space."""


class MediumMissingError(ValueError):
    """An instance shares no entity between its graphs, so no exchange is possible."""


@dataclass(frozen=True)
class FusionConfig:
    """Architecture knobs for the twin network.

    ``attention="exp"`` normalizes scores with a softmax; ``"ratio"`` divides
    raw scores by their plain sum, which is cheaper but unstable whenever a
    neighborhood's scores sum to nearly zero.
    """

    layers: int = 3
    dim: int = 64
    context_dim: int = 32
    slope: float = 0.01
    exchange: bool = True
    attention: str = "exp"

    def __post_init__(self):
        if not MIN_LAYERS <= self.layers <= MAX_LAYERS:
            raise ValueError(f"layers must be in [{MIN_LAYERS}, {MAX_LAYERS}], got {self.layers}")
        if self.dim < 1 or self.context_dim < 1:
            raise ValueError("embedding dimensions must be positive")
        if self.attention not in ATTENTION_MODES:
            raise ValueError(f"attention must be one of {ATTENTION_MODES}, got {self.attention!r}")
        if self.slope <= 0.0:
            raise ValueError("slope must be positive")


def inverse_relation(name: str) -> str:
    return name + INVERSE_SUFFIX


@dataclass(frozen=True)
class EmbeddingSpace:
    """Row assignment for entities and per-graph relation tables.

    One entity table serves both graphs (shared rows are what make mediums
    meaningful); each graph gets its own relation table whose second half
    holds the reciprocal relations.
    """

    entities: tuple[str, ...]
    scene_relations: tuple[str, ...]
    concept_relations: tuple[str, ...]

    @classmethod
    def build(
        cls,
        instances: Iterable[CoupledInstance],
        vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
    ) -> "EmbeddingSpace":
        entity_names: set[str] = set()
        concept_rels: set[str] = set()
        for inst in instances:
            entity_names |= inst.scene.entities | inst.concept.entities
            concept_rels |= {t.relation for t in inst.concept.triples}
        scene_base = list(vocabulary.names)
        concept_base = sorted(concept_rels)
        return cls(
            entities=tuple(sorted(entity_names)),
            scene_relations=tuple(scene_base + [inverse_relation(r) for r in scene_base]),
            concept_relations=tuple(concept_base + [inverse_relation(r) for r in concept_base]),
        )

    def entity_row(self, name: str) -> int:
        try:
            return self._entity_index[name]
        except KeyError:
            raise MissingEmbeddingError(f"entity {name!r} has no embedding row") from None

    def scene_relation_row(self, name: str) -> int:
        try:
            return self._scene_rel_index[name]
        except KeyError:
            raise MissingEmbeddingError(f"scene relation {name!r} has no embedding row") from None

    def concept_relation_row(self, name: str) -> int:
        try:
            return self._concept_rel_index[name]
        except KeyError:
            raise MissingEmbeddingError(f"concept relation {name!r} has no embedding row") from None

    @property
    def _entity_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_entity_index_cache")
        if cached is None:
            cached = {name: i for i, name in enumerate(self.entities)}
            self.__dict__["_entity_index_cache"] = cached
        return cached

    @property
    def _scene_rel_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_scene_rel_cache")
        if cached is None:
            cached = {name: i for i, name in enumerate(self.scene_relations)}
            self.__dict__["_scene_rel_cache"] = cached
        return cached

    @property
    def _concept_rel_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_concept_rel_cache")
        if cached is None:
            cached = {name: i for i, name in enumerate(self.concept_relations)}
            self.__dict__["_concept_rel_cache"] = cached
        return cached


@dataclass(frozen=True)
class GraphEdges:
    """Edge arrays for one graph, grouped by the entity being updated.

    ``upd_nodes`` lists local rows that have at least one incident edge;
    ``seg[e]`` is the position of edge ``e``'s updated node in that list.
    Nodes without edges are left out entirely so the residual update never
    touches them.
    """

    upd_nodes: np.ndarray
    seg: np.ndarray
    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray

    @classmethod
    def build(
        cls,
        triples: Sequence[Triple],
        row_of: Mapping[str, int],
        relation_row,
        add_inverses: bool = True,
    ) -> "GraphEdges":
        heads: list[int] = []
        rels: list[int] = []
        tails: list[int] = []
        for t in triples:
            heads.append(row_of[t.head])
            rels.append(relation_row(t.relation))
            tails.append(row_of[t.tail])
            if add_inverses:
                heads.append(row_of[t.tail])
                rels.append(relation_row(inverse_relation(t.relation)))
                tails.append(row_of[t.head])
        h = np.asarray(heads, dtype=np.int64)
        r = np.asarray(rels, dtype=np.int64)
        t_ = np.asarray(tails, dtype=np.int64)
        order = np.argsort(h, kind="stable")
        h, r, t_ = h[order], r[order], t_[order]
        upd_nodes, seg = np.unique(h, return_inverse=True)
        return cls(
            upd_nodes=np.ascontiguousarray(upd_nodes),
            seg=np.ascontiguousarray(seg.astype(np.int64)),
            heads=np.ascontiguousarray(h),
            rels=np.ascontiguousarray(r),
            tails=np.ascontiguousarray(t_),
        )

    @property
    def n_edges(self) -> int:
        return int(self.heads.shape[0])


@dataclass(frozen=True)
class GraphState:
    """One graph of one instance, resolved to table rows."""

    names: tuple[str, ...]
    global_rows: np.ndarray
    edges: GraphEdges

    @classmethod
    def build(
        cls,
        entities: frozenset[str],
        triples: Sequence[Triple],
        space: EmbeddingSpace,
        relation_row,
        add_inverses: bool = True,
    ) -> "GraphState":
        names = tuple(sorted(entities))
        row_of = {name: i for i, name in enumerate(names)}
        global_rows = np.asarray([space.entity_row(n) for n in names], dtype=np.int64)
        edges = GraphEdges.build(triples, row_of, relation_row, add_inverses)
        return cls(names=names, global_rows=global_rows, edges=edges)

    def local_row(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MissingEmbeddingError(f"entity {name!r} not in this graph") from None


@dataclass(frozen=True)
class CoupledState:
    """Both graph states of an instance plus aligned medium row arrays."""

    scene: GraphState
    concept: GraphState
    medium_names: tuple[str, ...]
    medium_scene_rows: np.ndarray
    medium_concept_rows: np.ndarray

    @classmethod
    def build(
        cls,
        instance: CoupledInstance,
        space: EmbeddingSpace,
        add_inverses: bool = True,
        require_mediums: bool = True,
    ) -> "CoupledState":
        scene = GraphState.build(
            instance.scene.entities,
            instance.scene.triples,
            space,
            space.scene_relation_row,
            add_inverses,
        )
        concept = GraphState.build(
            instance.concept.entities,
            instance.concept.triples,
            space,
            space.concept_relation_row,
            add_inverses,
        )
        names = mediums(instance.scene, instance.concept)
        if require_mediums and not names:
            raise MediumMissingError(f"instance {instance.id!r} has no medium entities")
        return cls(
            scene=scene,
            concept=concept,
            medium_names=names,
            medium_scene_rows=np.asarray([scene.local_row(n) for n in names], dtype=np.int64),
            medium_concept_rows=np.asarray([concept.local_row(n) for n in names], dtype=np.int64),
        )


@dataclass
class LayerWeights:
    """Trainable tensors of one layer of one sub-network."""

    w_msg: Tensor
    a_att: Tensor
    j_w1: Tensor
    j_b1: Tensor
    j_w2: Tensor
    j_b2: Tensor


@dataclass
class SubnetWeights:
    relations: Tensor
    layers: list[LayerWeights]


@dataclass
class FusionWeights:
    """Everything :func:`forward` needs, grouped by owner."""

    entities: Tensor
    scene: SubnetWeights
    concept: SubnetWeights


@dataclass
class LayerTrace:
    layer: int
    graph: str
    scores: np.ndarray
    weights: np.ndarray


class TraceRecorder:
    """Collects per-layer attention scores/weights for inspection dumps."""

    def __init__(self):
        self.records: list[LayerTrace] = []

    def record(self, layer: int, graph: str, scores: np.ndarray, weights: np.ndarray) -> None:
        self.records.append(LayerTrace(layer, graph, scores.copy(), weights.copy()))

    def to_tsv(self, state: CoupledState, space: EmbeddingSpace) -> str:
        """Render recorded attention as TSV with resolved edge names."""
        lines = ["layer\tgraph\thead\trelation\ttail\tscore\tweight"]
        for rec in self.records:
            graph_state = state.scene if rec.graph == "scene" else state.concept
            rels = space.scene_relations if rec.graph == "scene" else space.concept_relations
            e = graph_state.edges
            for i in range(e.n_edges):
                lines.append(
                    "\t".join(
                        (
                            str(rec.layer),
                            rec.graph,
                            graph_state.names[e.heads[i]],
                            rels[e.rels[i]],
                            graph_state.names[e.tails[i]],
                            f"{rec.scores[i]:.6g}",
                            f"{rec.weights[i]:.6g}",
                        )
                    )
                )
        return "\n".join(lines) + "\n"


def compute_message(weights: LayerWeights, e_h: Tensor, e_r: Tensor, e_t: Tensor) -> Tensor:
    """Message for one triple: the learned map of [head | relation | tail]."""
    return ops.linear(ops.concat([e_h, e_r, e_t]), weights.w_msg)


def attention_score(weights: LayerWeights, message: Tensor, context: Tensor, slope: float) -> Tensor:
    """Raw context-aware attention score of one message."""
    return ops.leaky_relu(ops.dot(weights.a_att, ops.concat([message, context])), slope)


def attention_weights(scores: Tensor, mode: str = "exp") -> Tensor:
    """Normalize a neighborhood's raw scores into weights summing to one."""
    if mode == "exp":
        return ops.softmax(scores)
    if mode == "ratio":
        return ops.normalize_sum(scores)
    raise ValueError(f"unknown attention mode {mode!r}")


def layer_update_reference(
    table: Tensor,
    rel_table: Tensor,
    edges: GraphEdges,
    weights: LayerWeights,
    context: Tensor,
    config: FusionConfig,
) -> Tensor:
    """Per-neighborhood layer update, written the slow obvious way.

    Kept as the semantic anchor for the vectorized :func:`layer_update`;
    the equivalence of the two is pinned by tests.
    """
    updates: list[Tensor] = []
    for pos, node in enumerate(edges.upd_nodes):
        edge_ids = np.nonzero(edges.seg == pos)[0]
        msgs = []
        scores = []
        for e in edge_ids:
            m = compute_message(
                weights,
                ops.take_row(table, edges.heads[e]),
                ops.take_row(rel_table, edges.rels[e]),
                ops.take_row(table, edges.tails[e]),
            )
            msgs.append(m)
            scores.append(attention_score(weights, m, context, config.slope))
        alpha = attention_weights(ops.stack(scores), config.attention)
        agg = ops.weighted_sum(alpha, ops.stack(msgs))
        h1 = ops.leaky_relu(ops.linear(agg, weights.j_w1, weights.j_b1), config.slope)
        updates.append(ops.linear(h1, weights.j_w2, weights.j_b2))
    return ops.scatter_rows_add(table, edges.upd_nodes, ops.stack(updates))


def layer_update(
    table: Tensor,
    rel_table: Tensor,
    edges: GraphEdges,
    weights: LayerWeights,
    context: Tensor,
    config: FusionConfig,
    trace: tuple[TraceRecorder, int, str] | None = None,
) -> Tensor:
    """Vectorized synchronous update of every entity with incident edges."""
    if edges.n_edges == 0:
        return table
    msgs = ops.linear(ops.triple_concat(table, rel_table, edges.heads, edges.rels, edges.tails), weights.w_msg)
    scored_in = ops.concat([msgs, ops.tile_rows(context, edges.n_edges)], axis=1)
    scores = ops.leaky_relu(ops.matvec(scored_in, weights.a_att), config.slope)
    n_upd = int(edges.upd_nodes.shape[0])
    if config.attention == "exp":
        alpha = ops.segment_softmax(scores, edges.seg, n_upd)
    else:
        alpha = ops.segment_normalize(scores, edges.seg, n_upd)
    if trace is not None:
        recorder, layer, graph = trace
        recorder.record(layer, graph, scores.data, alpha.data)
    agg = ops.segment_sum(ops.scale_rows(msgs, alpha), edges.seg, n_upd)
    h1 = ops.leaky_relu(ops.linear(agg, weights.j_w1, weights.j_b1), config.slope)
    updates = ops.linear(h1, weights.j_w2, weights.j_b2)
    return ops.scatter_rows_add(table, edges.upd_nodes, updates)


def medium_exchange(
    scene_table: Tensor,
    concept_table: Tensor,
    scene_rows: np.ndarray,
    concept_rows: np.ndarray,
) -> tuple[Tensor, Tensor]:
    """Swap medium embeddings across the graphs (differentiable, involutive)."""
    if scene_rows.size == 0:
        return scene_table, concept_table
    from_concept = ops.gather_rows(concept_table, concept_rows)
    from_scene = ops.gather_rows(scene_table, scene_rows)
    return (
        ops.replace_rows(scene_table, scene_rows, from_concept),
        ops.replace_rows(concept_table, concept_rows, from_scene),
    )


def exchange_schedule(config: FusionConfig) -> list[bool]:
    """Whether a swap happens after each layer; position 0 is never a swap."""
    if not config.exchange:
        return [False] * config.layers
    return [layer >= 1 for layer in range(config.layers)]


def forward(
    weights: FusionWeights,
    state: CoupledState,
    context: Tensor,
    config: FusionConfig,
    trace: TraceRecorder | None = None,
    reference: bool = False,
) -> tuple[Tensor, Tensor]:
    """Run all layers over both graphs; returns final local entity tables.

    Both tables start as gathers from the shared entity table, so gradients
    from either graph land in the same global rows.
    """
    scene_t = ops.gather_rows(weights.entities, state.scene.global_rows)
    concept_t = ops.gather_rows(weights.entities, state.concept.global_rows)
    update = layer_update_reference if reference else layer_update
    swaps = exchange_schedule(config)
    for layer in range(config.layers):
        if reference:
            scene_t = update(scene_t, weights.scene.relations, state.scene.edges, weights.scene.layers[layer], context, config)
            concept_t = update(concept_t, weights.concept.relations, state.concept.edges, weights.concept.layers[layer], context, config)
        else:
            scene_t = update(
                scene_t, weights.scene.relations, state.scene.edges, weights.scene.layers[layer],
                context, config, (trace, layer, "scene") if trace else None,
            )
            concept_t = update(
                concept_t, weights.concept.relations, state.concept.edges, weights.concept.layers[layer],
                context, config, (trace, layer, "concept") if trace else None,
            )
        if swaps[layer]:
            scene_t, concept_t = medium_exchange(
                scene_t, concept_t, state.medium_scene_rows, state.medium_concept_rows
            )
    return scene_t, concept_t
