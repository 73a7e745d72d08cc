"""Backend dispatch and numpy/compiled equivalence.

The compiled kernels promise bitwise-identical float64 results, so the
comparisons here are exact, not approximate.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from twingraph import kernels
from twingraph.kernels import numpy_backend

compiled = pytest.importorskip("twingraph.kernels._speedups")


@pytest.fixture
def arrays():
    rng = np.random.default_rng(42)
    n_ent, n_rel, d, n_edges, n_seg = 37, 11, 16, 150, 23
    return {
        "ent": rng.standard_normal((n_ent, d)),
        "rel": rng.standard_normal((n_rel, d)),
        "heads": rng.integers(0, n_ent, n_edges).astype(np.int64),
        "rels": rng.integers(0, n_rel, n_edges).astype(np.int64),
        "tails": rng.integers(0, n_ent, n_edges).astype(np.int64),
        "seg": np.sort(rng.integers(0, n_seg, n_edges)).astype(np.int64),
        "scores": rng.standard_normal(n_edges),
        "rows": rng.standard_normal((n_edges, d)),
        "coeff": rng.standard_normal(n_edges),
        "grad3": rng.standard_normal((n_edges, 3 * d)),
        "segvals": rng.standard_normal((n_seg, d)),
        "n_seg": n_seg,
    }


def test_both_backends_registered():
    assert kernels.available_backends() == ("compiled", "numpy")


def test_use_switches_and_restores():
    previous = kernels.use("numpy")
    try:
        assert kernels.active_backend() == "numpy"
    finally:
        kernels.use(previous)
    assert kernels.active_backend() == previous
    with pytest.raises(ValueError):
        kernels.use("fortran")


def test_env_var_forces_numpy_backend():
    code = "from twingraph import kernels; print(kernels.available_backends(), kernels.active_backend())"
    env = dict(os.environ, TWINGRAPH_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    ).stdout
    assert "('numpy',) numpy" in out


def test_gather_and_scatter_match(arrays):
    a = arrays
    assert np.array_equal(
        numpy_backend.gather_rows(a["ent"], a["heads"]), compiled.gather_rows(a["ent"], a["heads"])
    )
    acc1, acc2 = a["ent"].copy(), a["ent"].copy()
    numpy_backend.scatter_add_rows(acc1, a["heads"], a["rows"])
    compiled.scatter_add_rows(acc2, a["heads"], a["rows"])
    assert np.array_equal(acc1, acc2)


def test_triple_concat_match(arrays):
    a = arrays
    fwd1 = numpy_backend.triple_concat(a["ent"], a["rel"], a["heads"], a["rels"], a["tails"])
    fwd2 = compiled.triple_concat(a["ent"], a["rel"], a["heads"], a["rels"], a["tails"])
    assert np.array_equal(fwd1, fwd2)
    de1, dr1 = np.zeros_like(a["ent"]), np.zeros_like(a["rel"])
    de2, dr2 = np.zeros_like(a["ent"]), np.zeros_like(a["rel"])
    numpy_backend.triple_concat_backward(a["grad3"], a["heads"], a["rels"], a["tails"], de1, dr1)
    compiled.triple_concat_backward(a["grad3"], a["heads"], a["rels"], a["tails"], de2, dr2)
    assert np.array_equal(de1, de2)
    assert np.array_equal(dr1, dr2)


def test_leaky_match(arrays):
    a = arrays
    for slope in (0.01, 0.2):
        assert np.array_equal(
            numpy_backend.leaky_forward(a["scores"], slope), compiled.leaky_forward(a["scores"], slope)
        )
        assert np.array_equal(
            numpy_backend.leaky_backward(a["scores"], a["coeff"], slope),
            compiled.leaky_backward(a["scores"], a["coeff"], slope),
        )


def test_segment_ops_match(arrays):
    a = arrays
    p1 = numpy_backend.segment_softmax(a["scores"], a["seg"], a["n_seg"])
    p2 = compiled.segment_softmax(a["scores"], a["seg"], a["n_seg"])
    assert np.array_equal(p1, p2)
    assert np.array_equal(
        numpy_backend.segment_softmax_backward(p1, a["coeff"], a["seg"], a["n_seg"]),
        compiled.segment_softmax_backward(p1, a["coeff"], a["seg"], a["n_seg"]),
    )
    assert np.array_equal(
        numpy_backend.segment_sum(a["rows"], a["seg"], a["n_seg"]),
        compiled.segment_sum(a["rows"], a["seg"], a["n_seg"]),
    )
    assert np.array_equal(
        numpy_backend.segment_expand(a["segvals"], a["seg"]),
        compiled.segment_expand(a["segvals"], a["seg"]),
    )


def test_rowwise_ops_match(arrays):
    a = arrays
    assert np.array_equal(
        numpy_backend.scale_rows(a["rows"], a["coeff"]), compiled.scale_rows(a["rows"], a["coeff"])
    )
    assert np.array_equal(
        numpy_backend.rows_dot(a["rows"], a["rows"] * 0.7), compiled.rows_dot(a["rows"], a["rows"] * 0.7)
    )


def test_unsorted_segments_accepted(arrays):
    """Segment ids need not be sorted; both backends accumulate in order."""
    rng = np.random.default_rng(1)
    seg = rng.integers(0, arrays["n_seg"], arrays["scores"].shape[0]).astype(np.int64)
    p1 = numpy_backend.segment_softmax(arrays["scores"], seg, arrays["n_seg"])
    p2 = compiled.segment_softmax(arrays["scores"], seg, arrays["n_seg"])
    assert np.array_equal(p1, p2)
    sums = np.zeros(arrays["n_seg"])
    np.add.at(sums, seg, p1)
    present = np.unique(seg)
    assert np.allclose(sums[present], 1.0)


def test_whole_training_run_is_backend_invariant():
    """Same corpus, same seed, different backend: bitwise-equal loss curve."""
    from twingraph.harness import SyntheticSpec, TrainConfig, generate, train

    instances = generate(SyntheticSpec(n_instances=16, seed=5))
    cfg = TrainConfig(dim=12, context_dim=6, epochs=8)
    previous = kernels.active_backend()
    kernels.use("compiled")
    try:
        fast = train(instances, cfg)
        kernels.use("numpy")
        slow = train(instances, cfg)
    finally:
        kernels.use(previous)
    assert [r.joint for r in fast.history] == [r.joint for r in slow.history]
    assert fast.final.predictions == slow.final.predictions
