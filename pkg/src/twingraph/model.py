"""Model assembly: parameter init, instance compilation, loss wiring."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fusion import (
    CoupledState,
    EmbeddingSpace,
    FusionConfig,
    FusionWeights,
    LayerWeights,
    SubnetWeights,
    TraceRecorder,
    forward,
)
from .graphs import CoupledInstance
from .numeric import ParameterStore, Tensor, ops
from .objectives import (
    AnswerHead,
    AnswerScores,
    LossBreakdown,
    answer_scores,
    inference_loss,
    joint_loss,
    mmd_loss,
    predict,
)

GRAPH_NAMES = ("scene", "concept")


def question_context_vector(question: str, dim: int) -> np.ndarray:
    """Frozen context vector, derived from a hash of the question text.

    Hash-seeded so independent processes produce identical rows without
    sharing state.
    """
    digest = hashlib.sha256(question.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    return rng.standard_normal(dim) / np.sqrt(dim)


def init_parameters(
    space: EmbeddingSpace,
    config: FusionConfig,
    questions: Sequence[str],
    seed: int = 0,
    sigma: float = 1.0,
) -> ParameterStore:
    """Create a fully populated store; layer weights are per graph per layer."""
    rng = np.random.default_rng(seed)
    d, dc = config.dim, config.context_dim
    store = ParameterStore()

    def normal(shape, fan_in):
        return rng.standard_normal(shape) / np.sqrt(fan_in)

    store.add("entities", normal((len(space.entities), d), d))
    store.add("scene.relations", normal((len(space.scene_relations), d), d))
    store.add("concept.relations", normal((len(space.concept_relations), d), d))
    for graph in GRAPH_NAMES:
        for layer in range(config.layers):
            prefix = f"{graph}.layer{layer}"
            store.add(f"{prefix}.w_msg", normal((3 * d, d), 3 * d))
            store.add(f"{prefix}.a_att", normal(d + dc, d + dc))
            store.add(f"{prefix}.j_w1", normal((d, d), d))
            store.add(f"{prefix}.j_b1", np.zeros(d))
            store.add(f"{prefix}.j_w2", normal((d, d), d))
            store.add(f"{prefix}.j_b2", np.zeros(d))
    store.add("answer.ctx_proj", normal((d, dc), dc))
    store.add("answer.w1", normal((d, d), d))
    store.add("answer.b1", np.zeros(d))
    store.add("answer.w2", normal(d, d))
    store.add("answer.b2", np.zeros(()))

    questions = list(dict.fromkeys(questions))
    context = np.stack([question_context_vector(q, dc) for q in questions]) if questions else np.zeros((0, dc))
    store.add("context", context, frozen=True)

    store.meta = {
        "entities": list(space.entities),
        "scene_relations": list(space.scene_relations),
        "concept_relations": list(space.concept_relations),
        "questions": questions,
        "config": {
            "layers": config.layers,
            "dim": config.dim,
            "context_dim": config.context_dim,
            "slope": config.slope,
            "exchange": config.exchange,
            "attention": config.attention,
        },
        "sigma": sigma,
        "seed": seed,
    }
    return store


@dataclass(frozen=True)
class CompiledInstance:
    """An instance resolved against a model's tables, ready for forward."""

    id: str
    state: CoupledState
    gold: tuple[tuple[str, float], ...]
    question_row: int


class Model:
    """Bundles the parameter store with the row spaces it was built for."""

    def __init__(self, store: ParameterStore):
        meta = store.meta
        self.store = store
        self.space = EmbeddingSpace(
            entities=tuple(meta["entities"]),
            scene_relations=tuple(meta["scene_relations"]),
            concept_relations=tuple(meta["concept_relations"]),
        )
        cfg = meta["config"]
        self.config = FusionConfig(
            layers=int(cfg["layers"]),
            dim=int(cfg["dim"]),
            context_dim=int(cfg["context_dim"]),
            slope=float(cfg["slope"]),
            exchange=bool(cfg["exchange"]),
            attention=str(cfg["attention"]),
        )
        self.sigma = float(meta["sigma"])
        self._question_rows = {q: i for i, q in enumerate(meta["questions"])}

    @classmethod
    def create(
        cls,
        instances: Iterable[CoupledInstance],
        config: FusionConfig,
        seed: int = 0,
        sigma: float = 1.0,
    ) -> "Model":
        instances = list(instances)
        space = EmbeddingSpace.build(instances)
        store = init_parameters(space, config, [inst.question for inst in instances], seed, sigma)
        return cls(store)

    @classmethod
    def load(cls, path) -> "Model":
        return cls(ParameterStore.load(path))

    def save(self, path) -> None:
        self.store.save(path)

    def fusion_weights(self) -> FusionWeights:
        store = self.store

        def subnet(graph: str) -> SubnetWeights:
            layers = [
                LayerWeights(
                    w_msg=store[f"{graph}.layer{layer}.w_msg"],
                    a_att=store[f"{graph}.layer{layer}.a_att"],
                    j_w1=store[f"{graph}.layer{layer}.j_w1"],
                    j_b1=store[f"{graph}.layer{layer}.j_b1"],
                    j_w2=store[f"{graph}.layer{layer}.j_w2"],
                    j_b2=store[f"{graph}.layer{layer}.j_b2"],
                )
                for layer in range(self.config.layers)
            ]
            return SubnetWeights(relations=store[f"{graph}.relations"], layers=layers)

        return FusionWeights(entities=store["entities"], scene=subnet("scene"), concept=subnet("concept"))

    def answer_head(self) -> AnswerHead:
        store = self.store
        return AnswerHead(
            ctx_proj=store["answer.ctx_proj"],
            w1=store["answer.w1"],
            b1=store["answer.b1"],
            w2=store["answer.w2"],
            b2=store["answer.b2"],
            slope=self.config.slope,
        )

    def question_row(self, question: str) -> int:
        if question not in self._question_rows:
            raise KeyError(f"question not in the model's context table: {question!r}")
        return self._question_rows[question]

    def context_vector(self, question_row: int) -> Tensor:
        return ops.take_row(self.store["context"], question_row)

    def compile(self, instance: CoupledInstance, require_mediums: bool = True) -> CompiledInstance:
        return CompiledInstance(
            id=instance.id,
            state=CoupledState.build(instance, self.space, require_mediums=require_mediums),
            gold=instance.gold_answers,
            question_row=self.question_row(instance.question),
        )

    def run(
        self,
        compiled: CompiledInstance,
        trace: TraceRecorder | None = None,
        reference: bool = False,
    ) -> tuple[Tensor, Tensor, AnswerScores]:
        """Forward pass plus answer scoring; returns both final tables."""
        context = self.context_vector(compiled.question_row)
        scene_t, concept_t = forward(
            self.fusion_weights(), compiled.state, context, self.config, trace, reference
        )
        scores = answer_scores(self.answer_head(), concept_t, compiled.state.concept.names, context)
        return scene_t, concept_t, scores

    def losses(
        self,
        compiled: CompiledInstance,
        lam: float,
        medium_enabled: bool = True,
        trace: TraceRecorder | None = None,
        reference: bool = False,
    ) -> tuple[LossBreakdown, AnswerScores]:
        """Joint training loss for one instance.

        ``medium_enabled=False`` drops the medium term from the graph
        entirely; set ``lam=0.0`` instead to keep computing it with zero
        influence.
        """
        scene_t, concept_t, scores = self.run(compiled, trace, reference)
        gold_names = [name for name, _ in compiled.gold]
        inf = inference_loss(scores, gold_names)
        medium = None
        if medium_enabled and compiled.state.medium_names:
            xs = ops.gather_rows(scene_t, compiled.state.medium_scene_rows)
            ys = ops.gather_rows(concept_t, compiled.state.medium_concept_rows)
            medium = mmd_loss(xs, ys, self.sigma)
        return joint_loss(inf, medium, lam), scores

    def predict_one(self, compiled: CompiledInstance) -> str:
        _, _, scores = self.run(compiled)
        return predict(scores)


def apply_pretrained(store: ParameterStore, vectors: Mapping[str, np.ndarray], entities: Sequence[str]) -> int:
    """Overwrite entity rows with pretrained vectors; returns rows replaced."""
    table = store["entities"]
    applied = 0
    for row, name in enumerate(entities):
        vec = vectors.get(name)
        if vec is None:
            continue
        if vec.shape != (table.data.shape[1],):
            raise ValueError(f"vector for {name!r} has shape {vec.shape}, table width {table.data.shape[1]}")
        table.data[row] = vec
        applied += 1
    return applied
