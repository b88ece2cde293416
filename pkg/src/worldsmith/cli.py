"""Operator entry points: train, eval, build, analyze, serve.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Every subcommand
with a fixed --seed writes byte-identical output files across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import SAMPLE_CORPUS_PATH
from .assembly import GenerationConfig, diversity_report, generate_batch, world_json, write_diversity_csv
from .corpus import (
    TASKS,
    candidate_texts,
    derive_examples,
    load_corpus,
    task_candidate_pool,
    train_gold_pool,
)
from .evaluation import EvalConfig, hits_at_1, ngram_novelty, write_report
from .ranking import (
    EmbeddingScorerParams,
    IRScorer,
    build_scorer,
    load_model,
    save_model,
    train_embedding_scorer,
)

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _tasks_from(arg: str) -> list[str]:
    return list(TASKS) if arg == "all" else [arg]


def _feature_for(task: str, feature_mode: str) -> str:
    # Container annotations are free-written names; rank them name-only.
    return "name_only" if task == "container" else feature_mode


def _load_corpus_arg(path: str):
    return load_corpus(SAMPLE_CORPUS_PATH if path == "sample" else path)


def _scorer_for(spec: str, corpus, task: str, feature_mode: str, seed: int):
    if spec.startswith("embedding:"):
        return load_model(spec.split(":", 1)[1])
    return build_scorer(spec, corpus, task, feature_mode, seed)


def cmd_train(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    tasks = _tasks_from(args.task)
    examples = []
    pools: dict[str, list[str]] = {}
    texts: dict[str, dict[str, str]] = {}
    for task in tasks:
        mode = _feature_for(task, args.feature)
        examples.extend(derive_examples(corpus, task, mode)["train"])
        pools[task] = train_gold_pool(corpus, task)
        texts[task] = candidate_texts(corpus, task, task_candidate_pool(corpus, task), mode)

    params = EmbeddingScorerParams(
        dim=args.dim,
        learning_rate=args.lr,
        input_dropout=args.dropout,
        margin=args.margin,
        negatives_per_positive=args.negatives,
        epochs=args.epochs,
        seed=args.seed,
        subword_init=args.subword_init,
    )
    model, trace = train_embedding_scorer(examples, pools, params, texts)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.bin"
    save_model(model, model_path)
    with open(out / "loss_trace.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_hinge_loss"])
        for epoch, loss in enumerate(trace):
            writer.writerow([epoch, repr(loss)])

    print(f"trained on {len(examples)} examples over {params.epochs} epochs")
    print(f"model written to {model_path}")
    for task in tasks:
        mode = _feature_for(task, args.feature)
        train_examples = derive_examples(corpus, task, mode)["train"]
        if not train_examples:
            continue
        pool = task_candidate_pool(corpus, task)
        config = EvalConfig(num_candidates=min(args.eval_k, len(pool)), seed=args.seed)
        report = hits_at_1(model, train_examples, pool, config, texts[task], mode)
        print(f"train hits@1 [{task}]: {report.hits_at_1:.1f}")
    return 0


def cmd_eval(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    tasks = _tasks_from(args.task)
    modes = (
        ["name_only", "name_and_description"] if args.feature == "both" else [args.feature]
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    grid: dict[str, dict[str, float]] = {}
    for mode in modes:
        grid[mode] = {}
        for task in tasks:
            task_mode = _feature_for(task, mode)
            examples = derive_examples(corpus, task, task_mode)[args.split]
            if not examples:
                print(f"skipping {task}/{mode}: no {args.split} examples", file=sys.stderr)
                continue
            pool = (
                train_gold_pool(corpus, task)
                if args.distractors == "task_train_pool"
                else task_candidate_pool(corpus, task)
            )
            scorer = _scorer_for(args.scorer, corpus, task, task_mode, args.seed)
            config = EvalConfig(
                num_candidates=min(args.k, len(pool)),
                distractor_source=args.distractors,
                seed=args.seed,
            )
            texts = candidate_texts(corpus, task, pool, task_mode)
            report = hits_at_1(scorer, examples, pool, config, texts, task_mode)
            grid[mode][task] = report.hits_at_1
            base = f"eval_{args.scorer.replace(':', '_').replace('/', '_')}_{task}_{task_mode}"
            write_report(report, out / f"{base}.json", out / f"{base}.csv")

    name_width = max(len(m) for m in modes) + 2
    print(f"{'feature':<{name_width}}" + "".join(f"{t:>12}" for t in tasks))
    for mode in modes:
        row = "".join(
            f"{grid[mode].get(t, float('nan')):>12.1f}" if t in grid[mode] else f"{'---':>12}"
            for t in tasks
        )
        print(f"{mode:<{name_width}}" + row)
    return 0


def _build_scorer_set(args, corpus, seed: int):
    def scorers_for(world_seed: int):
        scorers = {}
        for index, task in enumerate(TASKS):
            mode = _feature_for(task, args.feature)
            # Mix in the task index so scorer streams never collide with the
            # world generator's own stream (both start from world_seed).
            task_seed = (world_seed * 0x9E3779B9 + index) & ((1 << 63) - 1)
            scorers[task] = _scorer_for(args.scorer, corpus, task, mode, task_seed)
        return scorers

    if args.scorer == "random":
        return scorers_for  # fresh stream per world
    return scorers_for(seed)


def cmd_build(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    config = GenerationConfig(
        grid_width=args.width,
        grid_height=args.height,
        max_locations=args.max_locations,
        filler_probability=args.filler_probability,
        blocked_fraction=args.blocked_fraction,
        extra_connect_prob=args.extra_connect_prob,
        min_score_threshold=args.min_score,
        seed=args.seed,
        feature_mode=args.feature,
    )
    scorers = _build_scorer_set(args, corpus, args.seed)
    out = Path(args.out)
    if args.count == 1:
        worlds = generate_batch(corpus, scorers, config, 1)
        out.parent.mkdir(parents=True, exist_ok=True)
        target = out if out.suffix == ".json" else out / "world.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(world_json(worlds[0]), encoding="utf-8")
        print(f"world written to {target}")
    else:
        out.mkdir(parents=True, exist_ok=True)
        worlds = generate_batch(corpus, scorers, config, args.count)
        for i, world in enumerate(worlds):
            (out / f"world_{i:05d}.json").write_text(world_json(world), encoding="utf-8")
        print(f"{len(worlds)} worlds written to {out}")
    return 0


def cmd_analyze(args) -> int:
    worlds_dir = Path(args.worlds)
    paths = sorted(worlds_dir.glob("*.json"))
    if not paths:
        print(f"no world files in {worlds_dir}", file=sys.stderr)
        return RUNTIME_ERROR
    docs = [json.loads(p.read_text(encoding="utf-8")) for p in paths]
    report = diversity_report(docs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "diversity.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    write_diversity_csv(
        report, out / "coverage.csv", out / "location_frequency.csv", out / "histograms.csv"
    )

    print(f"{report.num_worlds} worlds analyzed")
    for kind in ("locations", "characters", "objects"):
        print(f"distinct {kind}: {report.coverage[kind][-1]}")
    if args.corpus:
        corpus = _load_corpus_arg(args.corpus)
        generated = _collect_generated_texts(docs)
        if generated:
            train = [
                f"{c.name} {c.description}" for c in corpus.locations.values()
            ] + [f"{c.name} {c.persona} {c.description}" for c in corpus.characters.values()] + [
                f"{c.name} {c.description}" for c in corpus.objects.values()
            ]
            for n in (3, 5):
                print(f"generated {n}-gram overlap with corpus: "
                      f"{100 * ngram_novelty(generated, train, n):.1f}%")
    return 0


def _collect_generated_texts(docs: list[dict]) -> list[str]:
    texts = []
    for doc in docs:
        for element in doc.get("generated_elements", []):
            for key in ("description", "background", "persona"):
                if element.get(key):
                    texts.append(element[key])
    return texts


def cmd_serve(args) -> int:
    import signal

    import uvicorn

    from .service import create_app

    corpus = _load_corpus_arg(args.corpus)
    model = load_model(args.model) if args.model else None
    scorers = {}
    shared_ir = None if model is not None else IRScorer.from_corpus(corpus)
    for task in TASKS:
        scorers[task] = model if model is not None else shared_ir
    app = create_app(
        corpus,
        scorers,
        args.data_dir,
        suggestions_default=not args.no_suggestions,
        generation_seed=args.seed,
    )
    server = uvicorn.Server(
        uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    )
    # uvicorn re-raises the terminating signal after graceful shutdown; with
    # this no-op handler installed first, SIGTERM/SIGINT land here and the
    # process exits 0 with all session logs already flushed (logs flush on
    # every append).
    signal.signal(signal.SIGTERM, lambda signum, frame: None)
    signal.signal(signal.SIGINT, lambda signum, frame: None)
    server.run()
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="worldsmith", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--corpus", default="sample",
                       help="corpus JSON path, or 'sample' for the bundled corpus")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory (or file for build)")

    train = sub.add_parser("train", help="train the embedding ranker")
    common(train)
    train.add_argument("--task", default="all", choices=list(TASKS) + ["all"])
    train.add_argument("--feature", default="name_and_description",
                       choices=["name_only", "name_and_description"])
    train.add_argument("--dim", type=int, default=128)
    train.add_argument("--lr", type=float, default=0.01)
    train.add_argument("--dropout", type=float, default=0.5)
    train.add_argument("--margin", type=float, default=0.2)
    train.add_argument("--negatives", type=int, default=10)
    train.add_argument("--epochs", type=int, default=20)
    train.add_argument("--subword-init", action="store_true",
                       help="initialize token vectors from hashed character n-grams")
    train.add_argument("--eval-k", type=int, default=20)
    train.set_defaults(func=cmd_train)

    evalp = sub.add_parser("eval", help="evaluate a scorer with sampled distractors")
    common(evalp)
    evalp.add_argument("--scorer", default="ir",
                       help="random | proportional | ir | embedding:<model path>")
    evalp.add_argument("--task", default="all", choices=list(TASKS) + ["all"])
    evalp.add_argument("--feature", default="both",
                       choices=["name_only", "name_and_description", "both"])
    evalp.add_argument("--split", default="test", choices=["train", "valid", "test"])
    evalp.add_argument("-K", "--k", type=int, default=20, help="candidates per example")
    evalp.add_argument("--distractors", default="task_all_pool",
                       choices=["task_all_pool", "task_train_pool"])
    evalp.set_defaults(func=cmd_eval)

    build = sub.add_parser("build", help="generate playable worlds")
    common(build)
    build.add_argument("--scorer", default="ir",
                       help="random | proportional | ir | embedding:<model path>")
    build.add_argument("--feature", default="name_and_description",
                       choices=["name_only", "name_and_description"])
    build.add_argument("--width", type=int, default=8)
    build.add_argument("--height", type=int, default=8)
    build.add_argument("-N", "--max-locations", type=int, default=50)
    build.add_argument("-P", "--filler-probability", type=float, default=0.15)
    build.add_argument("-X", "--blocked-fraction", type=float, default=0.1)
    build.add_argument("--extra-connect-prob", type=float, default=0.5)
    build.add_argument("--min-score", type=float, default=None)
    build.add_argument("--count", type=int, default=1)
    build.set_defaults(func=cmd_build)

    analyze = sub.add_parser("analyze", help="diversity analytics over a worlds directory")
    analyze.add_argument("--worlds", required=True)
    analyze.add_argument("--out", default="out")
    analyze.add_argument("--corpus", default="",
                         help="corpus path for n-gram novelty of generated elements")
    analyze.set_defaults(func=cmd_analyze)

    serve = sub.add_parser("serve", help="run the interactive editor API")
    common(serve)
    serve.add_argument("--model", default="", help="embedding model path (default: IR scorer)")
    serve.add_argument("--feature", default="name_and_description",
                       choices=["name_only", "name_and_description"])
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--data-dir", default="sessions")
    serve.add_argument("--no-suggestions", action="store_true")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
