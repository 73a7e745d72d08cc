"""Command line interface.

Subcommands: ``gen`` (synthetic corpus), ``construct`` (corpus from raw
records via LLM + KG), ``train``, ``eval``, ``sweep``, ``ablate`` and
``stats``.  Training flags can come from a JSON config file; explicit
flags win over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .corpus import load_corpus, manifest_path_for, save_corpus
from .construction import (
    KGClient,
    LLMClient,
    ReplayCache,
    ServiceUnavailableError,
    build_instance,
    load_prompts,
)
from .construction.prompts import PromptLibrary
from .graphs import histogram_table, relation_histogram, validate
from .harness import (
    LAMBDA_GRID,
    LAYER_GRID,
    SyntheticSpec,
    TrainConfig,
    ablate_exchange,
    evaluate,
    generate,
    sweep_lambda,
    sweep_layers,
    train,
)
from .fusion import TraceRecorder
from .model import Model
from .numeric import NonFiniteError


def _load_instances(path: str):
    path = Path(path)
    return load_corpus(path, verify=manifest_path_for(path).exists())


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with TrainConfig fields")
    parser.add_argument("--layers", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--context-dim", type=int, dest="context_dim")
    parser.add_argument("--slope", type=float)
    parser.add_argument("--no-exchange", action="store_true", help="disable the medium exchange")
    parser.add_argument("--attention", choices=("exp", "ratio"))
    parser.add_argument("--lam", type=float, help="medium loss weight")
    parser.add_argument("--sigma", type=float, help="gaussian kernel width")
    parser.add_argument("--no-medium-loss", action="store_true", help="drop the medium term entirely")
    parser.add_argument("--optimizer", choices=("adam", "sgd"))
    parser.add_argument("--lr", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--target-accuracy", type=float, dest="target_accuracy")
    parser.add_argument("--eval-every", type=int, dest="eval_every")


def _train_config(args: argparse.Namespace) -> TrainConfig:
    settings: dict = {}
    if args.config:
        settings.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for name in (
        "layers",
        "dim",
        "context_dim",
        "slope",
        "attention",
        "lam",
        "sigma",
        "optimizer",
        "lr",
        "epochs",
        "seed",
        "target_accuracy",
        "eval_every",
    ):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    if args.no_exchange:
        settings["exchange"] = False
    if args.no_medium_loss:
        settings["medium_loss"] = False
    return TrainConfig(**settings)


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_instances=args.n,
        mediums_per_instance=args.mediums,
        medium_pool=args.medium_pool,
        hub_pool=args.hub_pool,
        place_pool=args.place_pool,
        note_pool=args.note_pool,
        noise_facts=args.noise_facts,
        chain_depth=args.chain_depth,
        seed=args.seed,
    )
    instances = generate(spec)
    manifest = save_corpus(instances, args.out)
    print(f"wrote {manifest['count']} instances to {args.out}")
    return 0


def _cmd_construct(args: argparse.Namespace) -> int:
    cache = ReplayCache(args.cache) if args.cache else None
    llm = LLMClient(args.llm_endpoint, args.llm_model, cache, args.mode)
    kg = KGClient(args.kg_endpoint, cache, args.mode)
    prompts = load_prompts(args.prompts) if args.prompts else PromptLibrary()
    records = [
        json.loads(line)
        for line in Path(args.records).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    instances = []
    skipped = 0
    for record in records:
        report = build_instance(llm, kg, record, prompts, hop_limit=args.hop_limit)
        for line, reason in report.rejected:
            print(f"{record['id']}: rejected [{reason}] {line}", file=sys.stderr)
        for warning in report.warnings:
            print(f"{record['id']}: warning: {warning}", file=sys.stderr)
        if report.violations:
            if not args.skip_invalid:
                print(f"{record['id']}: invalid: {report.violations[0]}", file=sys.stderr)
                return 1
            skipped += 1
            print(f"{record['id']}: skipped ({report.violations[0]})", file=sys.stderr)
            continue
        instances.append(report.instance)
    manifest = save_corpus(instances, args.out)
    print(f"wrote {manifest['count']} instances to {args.out} ({skipped} skipped)")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _train_config(args)
    instances = _load_instances(args.corpus)
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(
        json.dumps(dataclasses.asdict(config), indent=2) + "\n", encoding="utf-8"
    )
    metrics = (run_dir / "metrics.jsonl").open("w", encoding="utf-8")

    def log(record):
        metrics.write(json.dumps(dataclasses.asdict(record)) + "\n")
        if args.verbose and (record.epoch % args.log_every == 0 or record.accuracy is not None):
            acc = f"  acc {record.accuracy:.4f}" if record.accuracy is not None else ""
            print(f"epoch {record.epoch:>5}  joint {record.joint:.6f}{acc}")

    try:
        result = train(instances, config, checkpoint_dir=run_dir, progress=log)
    finally:
        metrics.close()
    (run_dir / "report.txt").write_text(result.final.summary() + "\n", encoding="utf-8")

    trace = TraceRecorder()
    compiled = result.model.compile(instances[0])
    result.model.run(compiled, trace=trace)
    (run_dir / "trace.tsv").write_text(
        trace.to_tsv(compiled.state, result.model.space), encoding="utf-8"
    )
    print(result.final.summary())
    print(f"artifacts in {run_dir}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    model = Model.load(args.model)
    instances = _load_instances(args.corpus)
    compiled = [model.compile(inst) for inst in instances]
    report = evaluate(model, compiled)
    print(report.summary())
    if args.out:
        lines = ["id\tprediction\tcorrect"]
        lines += [f"{i}\t{p}\t{int(c)}" for i, p, c in report.predictions]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _train_config(args)
    instances = _load_instances(args.corpus)
    if args.sweep == "layers":
        result = sweep_layers(instances, config, LAYER_GRID)
    else:
        result = sweep_lambda(instances, config, LAMBDA_GRID)
    print(result.table())
    if args.out:
        Path(args.out).write_text(result.table() + "\n", encoding="utf-8")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _train_config(args)
    instances = _load_instances(args.corpus)
    seeds = [int(s) for s in args.seeds.split(",")]
    result = ablate_exchange(instances, config, seeds)
    print(result.table())
    if args.out:
        Path(args.out).write_text(result.table() + "\n", encoding="utf-8")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    instances = _load_instances(args.corpus)
    print(f"instances: {len(instances)}")
    bad = 0
    for inst in instances:
        bad += bool(validate(inst))
    print(f"invalid:   {bad}")
    print(histogram_table(relation_histogram(instances)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twingraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--mediums", type=int, default=2)
    p.add_argument("--medium-pool", type=int, default=6, dest="medium_pool")
    p.add_argument("--hub-pool", type=int, default=3, dest="hub_pool")
    p.add_argument("--place-pool", type=int, default=4, dest="place_pool")
    p.add_argument("--note-pool", type=int, default=8, dest="note_pool")
    p.add_argument("--noise-facts", type=int, default=3, dest="noise_facts")
    p.add_argument("--chain-depth", type=int, default=1, dest="chain_depth")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("construct", help="build a corpus from raw records")
    p.add_argument("--records", required=True, help="JSONL of raw task records")
    p.add_argument("--out", required=True)
    p.add_argument("--cache", help="replay cache directory")
    p.add_argument("--mode", choices=("auto", "replay", "record"), default="auto")
    p.add_argument("--llm-endpoint", default="http://localhost:8080/complete", dest="llm_endpoint")
    p.add_argument("--llm-model", default="captioner", dest="llm_model")
    p.add_argument("--kg-endpoint", default="http://localhost:8081/neighbors", dest="kg_endpoint")
    p.add_argument("--prompts", help="directory with caption.txt/scene.txt overrides")
    p.add_argument("--hop-limit", type=int, default=1, dest="hop_limit")
    p.add_argument("--skip-invalid", action="store_true", dest="skip_invalid")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("train", help="train on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--run-dir", required=True, dest="run_dir")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--log-every", type=int, default=10, dest="log_every")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="checkpoint .npz")
    p.add_argument("--out", help="write per-instance predictions TSV here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="grid sweep over layers or lambda")
    p.add_argument("--corpus", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--layers-grid", action="store_const", const="layers", dest="sweep")
    group.add_argument("--lambda-grid", action="store_const", const="lambda", dest="sweep")
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ablate", help="exchange on/off over several seeds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("stats", help="relation histogram of a corpus")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, ServiceUnavailableError, NonFiniteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
