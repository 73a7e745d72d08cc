"""Time each array kernel on both backends and print a comparison table.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --edges 100000 --dim 128

The same random inputs are fed to the compiled extension and the numpy
fallback, so the ratio column is a like-for-like speedup.  A final row
times a whole training step (forward, losses, backward) on a synthetic
corpus instance.
"""

import argparse
import time

import numpy as np

from twingraph import kernels
from twingraph.fusion import FusionConfig
from twingraph.harness import SyntheticSpec, generate
from twingraph.model import Model


def best_of(fn, repeats: int, iters: int) -> float:
    """Best per-call time in seconds over ``repeats`` timed batches."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(iters):
            fn()
        best = min(best, (time.perf_counter() - start) / iters)
    return best


def kernel_cases(rng: np.random.Generator, n_nodes: int, n_edges: int, dim: int):
    ent = rng.standard_normal((n_nodes, dim))
    rel = rng.standard_normal((24, dim))
    heads = rng.integers(0, n_nodes, n_edges)
    rels = rng.integers(0, 24, n_edges)
    tails = rng.integers(0, n_nodes, n_edges)
    seg = np.sort(rng.integers(0, n_nodes, n_edges))
    scores = rng.standard_normal(n_edges)
    probs = kernels.segment_softmax(scores, seg, n_nodes)
    msgs = rng.standard_normal((n_edges, dim))
    grad_cat = rng.standard_normal((n_edges, 3 * dim))
    pre = rng.standard_normal((n_edges, dim))

    return [
        ("gather_rows", lambda: kernels.gather_rows(ent, heads)),
        ("scatter_add_rows", lambda: kernels.scatter_add_rows(np.zeros_like(ent), heads, msgs)),
        ("triple_concat", lambda: kernels.triple_concat(ent, rel, heads, rels, tails)),
        (
            "triple_concat_backward",
            lambda: kernels.triple_concat_backward(
                grad_cat, heads, rels, tails, np.zeros_like(ent), np.zeros_like(rel)
            ),
        ),
        ("leaky_forward", lambda: kernels.leaky_forward(pre, 0.01)),
        ("leaky_backward", lambda: kernels.leaky_backward(pre, msgs, 0.01)),
        ("segment_softmax", lambda: kernels.segment_softmax(scores, seg, n_nodes)),
        (
            "segment_softmax_backward",
            lambda: kernels.segment_softmax_backward(probs, scores, seg, n_nodes),
        ),
        ("segment_sum", lambda: kernels.segment_sum(msgs, seg, n_nodes)),
        ("segment_expand", lambda: kernels.segment_expand(ent, seg)),
        ("scale_rows", lambda: kernels.scale_rows(msgs, probs)),
        ("rows_dot", lambda: kernels.rows_dot(msgs, pre)),
    ]


def training_step_case(dim: int):
    corpus = generate(SyntheticSpec(n_instances=4, seed=11))
    model = Model.create(corpus, FusionConfig(layers=3, dim=dim, context_dim=dim // 2), seed=0)
    compiled = [model.compile(inst) for inst in corpus]

    def step():
        for inst in compiled:
            breakdown, _ = model.losses(inst, lam=1e-3)
            breakdown.joint.backward()
            for _, tensor in model.store.trainable():
                tensor.grad = None

    return step


def run(args: argparse.Namespace) -> None:
    if "compiled" not in kernels.available_backends():
        raise SystemExit("compiled backend unavailable; build the extension first")

    rng = np.random.default_rng(args.seed)
    cases = kernel_cases(rng, args.nodes, args.edges, args.dim)
    cases.append(("training_step", training_step_case(args.dim)))

    print(f"nodes={args.nodes} edges={args.edges} dim={args.dim} "
          f"repeats={args.repeats} iters={args.iters}")
    print(f"{'kernel':<26} {'compiled':>12} {'numpy':>12} {'numpy/compiled':>15}")
    for name, fn in cases:
        iters = 1 if name == "training_step" else args.iters
        timings = {}
        for backend in ("compiled", "numpy"):
            kernels.use(backend)
            fn()  # warm up caches and lazy imports outside the timer
            timings[backend] = best_of(fn, args.repeats, iters)
        kernels.use("compiled")
        ratio = timings["numpy"] / timings["compiled"]
        print(
            f"{name:<26} {timings['compiled'] * 1e6:>10.1f}us {timings['numpy'] * 1e6:>10.1f}us "
            f"{ratio:>14.2f}x"
        )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=2000)
    parser.add_argument("--edges", type=int, default=20000)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--iters", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    run(parser.parse_args())


if __name__ == "__main__":
    main()
