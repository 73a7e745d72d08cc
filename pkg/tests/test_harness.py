"""Synthetic corpus generation, the training loop, sweeps, and the ablation."""

import numpy as np
import pytest

from twingraph.corpus import instance_to_record
from twingraph.graphs import mediums, validate
from twingraph.harness import (
    LAMBDA_GRID,
    LAYER_GRID,
    InfeasibleSpecError,
    SyntheticSpec,
    TrainConfig,
    ablate_exchange,
    evaluate,
    generate,
    sweep_lambda,
    sweep_layers,
    train,
)
from twingraph.model import Model
from twingraph.numeric import NonFiniteError, Tensor
from twingraph.objectives import LossBreakdown

SMALL_SPEC = SyntheticSpec(n_instances=8, medium_pool=4, note_pool=4, noise_facts=1, seed=3)
QUICK = TrainConfig(dim=8, context_dim=4, epochs=3)


@pytest.fixture(scope="module")
def corpus():
    return generate(SMALL_SPEC)


class TestSyntheticSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_instances": 0},
            {"mediums_per_instance": 1},
            {"mediums_per_instance": 9, "medium_pool": 4},
            {"chain_depth": 3},
            {"noise_facts": -1},
            {"hub_pool": 0},
        ],
    )
    def test_rejects_impossible_specs(self, kwargs):
        with pytest.raises(InfeasibleSpecError):
            SyntheticSpec(**kwargs)


class TestGenerate:
    def test_count_and_validity(self, corpus):
        assert len(corpus) == SMALL_SPEC.n_instances
        assert len({inst.id for inst in corpus}) == len(corpus)
        for inst in corpus:
            assert validate(inst) == []

    def test_deterministic_in_seed(self, corpus):
        again = generate(SMALL_SPEC)
        assert [instance_to_record(i) for i in again] == [instance_to_record(i) for i in corpus]
        other = generate(SyntheticSpec(n_instances=8, medium_pool=4, note_pool=4, noise_facts=1, seed=4))
        assert [instance_to_record(i) for i in other] != [instance_to_record(i) for i in corpus]

    def test_items_are_the_mediums(self, corpus):
        for inst in corpus:
            assert mediums(inst.scene, inst.concept) == inst.topic_entities

    def test_gold_is_the_fact_of_the_held_item(self, corpus):
        for inst in corpus:
            held = [t.tail for t in inst.scene.triples if t.relation == "holds"]
            assert len(held) == 1
            assert inst.gold_answers == ((held[0].replace("item_", "fact_"), 1.0),)

    def test_groups_share_concept_and_question_but_not_gold(self, corpus):
        # Marker-complete groups: the same question appears with every
        # possible gold, so the concept graph alone cannot decide it.
        by_question = {}
        for inst in corpus:
            key = (inst.question, inst.concept.triples)
            by_question.setdefault(key, []).append(inst.gold_answers[0][0])
        multi = [golds for golds in by_question.values() if len(golds) > 1]
        assert multi, "expected at least one full group in the corpus"
        for golds in multi:
            assert len(set(golds)) == len(golds)

    def test_chain_depth_two_adds_hops(self):
        spec = SyntheticSpec(n_instances=4, medium_pool=4, chain_depth=2, seed=1)
        for inst in generate(spec):
            assert any(name.startswith("via_") for name in inst.concept.entities)
            gold = inst.gold_answers[0][0]
            assert gold.startswith("fact_")
            tails = {t.tail for t in inst.concept.triples}
            assert gold in tails


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"optimizer": "lbfgs"},
            {"epochs": 0},
            {"eval_every": 0},
            {"lam": -0.1},
        ],
    )
    def test_rejects_bad_settings(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestTrain:
    def test_runs_and_records_history(self, corpus):
        seen = []
        result = train(corpus, QUICK, progress=seen.append)
        assert result.epochs_run == QUICK.epochs
        assert [r.epoch for r in result.history] == [1, 2, 3]
        assert seen == result.history
        assert result.final is not None and result.final.n == len(corpus)
        assert all(r.medium is not None for r in result.history)

    def test_same_seed_runs_are_bitwise_identical(self, corpus):
        a = train(corpus, QUICK)
        b = train(corpus, QUICK)
        assert [r.joint for r in a.history] == [r.joint for r in b.history]
        assert a.final.predictions == b.final.predictions

    def test_zero_lambda_matches_disabled_medium_loss(self, corpus):
        zero = train(corpus, TrainConfig(dim=8, context_dim=4, epochs=3, lam=0.0))
        off = train(corpus, TrainConfig(dim=8, context_dim=4, epochs=3, medium_loss=False))
        assert [r.inference for r in zero.history] == [r.inference for r in off.history]
        assert [r.joint for r in zero.history] == [r.joint for r in off.history]
        # The disabled run never computes the term; the lam=0 run still does.
        assert all(r.medium is None for r in off.history)
        assert all(r.medium is not None for r in zero.history)

    def test_early_stop_on_target_accuracy(self, corpus):
        config = TrainConfig(
            dim=8, context_dim=4, epochs=50, target_accuracy=0.0, eval_every=1
        )
        result = train(corpus, config)
        assert result.stopped_early
        assert result.epochs_run == 1
        assert result.history[-1].accuracy is not None

    def test_sgd_path(self, corpus):
        result = train(corpus, TrainConfig(dim=8, context_dim=4, epochs=2, optimizer="sgd"))
        assert result.epochs_run == 2

    def test_checkpoints_roundtrip(self, corpus, tmp_path):
        config = TrainConfig(
            dim=8, context_dim=4, epochs=4, target_accuracy=1.1, eval_every=2
        )
        result = train(corpus, config, checkpoint_dir=tmp_path)
        assert (tmp_path / "best.npz").exists()
        assert (tmp_path / "final.npz").exists()
        reloaded = Model.load(tmp_path / "final.npz")
        compiled = [reloaded.compile(inst) for inst in corpus]
        assert evaluate(reloaded, compiled).predictions == result.final.predictions

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            train([], QUICK)

    def test_non_finite_loss_aborts(self, corpus, monkeypatch):
        def poisoned(self, compiled, lam, medium_enabled=True, trace=None, reference=False):
            bad = Tensor(np.array(float("nan")))
            return LossBreakdown(inference=bad, medium=None, lam=lam, joint=bad), None

        monkeypatch.setattr(Model, "losses", poisoned)
        with pytest.raises(NonFiniteError, match="NON_FINITE_LOSS at epoch 1"):
            train(corpus, QUICK)


class TestEvaluate:
    def test_empty_set(self, corpus):
        model = Model.create(corpus, QUICK.fusion_config())
        report = evaluate(model, [])
        assert (report.n, report.exact_accuracy, report.soft_accuracy) == (0, 0.0, 0.0)

    def test_fields_are_consistent(self, corpus):
        model = Model.create(corpus, QUICK.fusion_config())
        compiled = [model.compile(inst) for inst in corpus]
        report = evaluate(model, compiled)
        assert report.n == len(corpus)
        hits = sum(1 for _, _, hit in report.predictions if hit)
        assert report.exact_accuracy == hits / report.n
        assert 0.0 <= report.soft_accuracy <= 1.0
        assert "exact" in report.summary()


class TestSweeps:
    def test_default_grids(self):
        assert LAYER_GRID == (2, 3, 4, 5, 6)
        assert LAMBDA_GRID == (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)

    def test_layer_sweep_rows(self, corpus):
        result = sweep_layers(corpus, QUICK, grid=(1, 2))
        assert result.parameter == "layers"
        assert [row.setting for row in result.rows] == [1.0, 2.0]
        assert all(row.epochs_run == QUICK.epochs for row in result.rows)
        table = result.table()
        assert table.splitlines()[0].split() == ["layers", "exact", "soft", "epochs"]
        assert len(table.splitlines()) == 3

    def test_lambda_sweep_rows(self, corpus):
        result = sweep_lambda(corpus, QUICK, grid=(0.0, 1e-3))
        assert result.parameter == "lambda"
        assert [row.setting for row in result.rows] == [0.0, 1e-3]
        assert "0.001" in result.table()

    def test_sweep_is_reproducible(self, corpus):
        first = sweep_layers(corpus, QUICK, grid=(1, 2))
        second = sweep_layers(corpus, QUICK, grid=(1, 2))
        assert [r.exact_accuracy for r in first.rows] == [r.exact_accuracy for r in second.rows]


class TestAblation:
    def test_paired_runs_per_seed(self, corpus):
        result = ablate_exchange(corpus, QUICK, seeds=(0, 1))
        assert [row.seed for row in result.rows] == [0, 1]
        assert result.mean_with == sum(r.with_exchange for r in result.rows) / 2
        assert result.mean_without == sum(r.without_exchange for r in result.rows) / 2
        lines = result.table().splitlines()
        assert lines[0].split() == ["seed", "exchange", "on", "exchange", "off"]
        assert lines[-1].startswith("  mean")
