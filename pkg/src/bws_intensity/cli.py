"""Command-line entry points for every pipeline stage.

Exit codes: 0 success, 1 validation/processing error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import annotation, corpus, design, regression, scoring
from .errors import ToolkitError, ValidationError
from .features import (
    FeatureConfig,
    Resources,
    assemble,
    load_embeddings,
    load_lexicon,
    load_negators,
    write_feature_vector,
)


def _write_kv(kv: dict[str, str], path: Optional[str]) -> None:
    text = "".join(f"{k}={kv[k]}\n" for k in sorted(kv))
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_latent(path) -> dict[str, float]:
    latent = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValidationError(
                    f"latent file line {line_number}: expected `id<TAB>value`"
                )
            latent[cols[0]] = float(cols[1])
    return latent


def _load_resources(args) -> Resources:
    resources = Resources()
    if getattr(args, "negators", None):
        resources.negators = load_negators(args.negators)
    if getattr(args, "embeddings", None):
        resources.embeddings = load_embeddings(args.embeddings)
    for path in getattr(args, "lexicon", None) or ():
        resources.add_lexicon(load_lexicon(path))
    return resources


def _load_datasets(pairs: Sequence[str]) -> dict[str, corpus.Dataset]:
    datasets = {}
    for spec in pairs:
        emotion, _, path = spec.partition("=")
        if not path:
            raise ValidationError(
                f"bad --dataset value {spec!r}; expected emotion=path"
            )
        datasets[emotion] = corpus.load_dataset(path)
    return datasets


# --- subcommands ---------------------------------------------------------------


def _cmd_design(args) -> int:
    with open(args.items, encoding="utf-8") as fh:
        item_ids = [line.strip() for line in fh if line.strip()]
    result = design.generate_design(item_ids, seed=args.seed)
    if args.out:
        design.write_design(result, args.out)
    else:
        sys.stdout.write(design.serialize_design(result))
    return 0


def _cmd_verify(args) -> int:
    report = design.verify_design(design.read_design(args.tuples))
    status = "ok" if report.ok else "FAILED"
    print(f"design check: {status}")
    print(f"tuples: {report.n_tuples} over {report.n_items} items")
    if report.bad_tuples:
        print(f"tuples with repeated items: {report.bad_tuples}")
    if report.bad_appearance_items:
        print(f"items not appearing exactly 8 times: {report.bad_appearance_items}")
    if report.duplicate_pairs:
        print(f"repeated pairs: {report.duplicate_pairs}")
    return 0 if report.ok else 1


def _cmd_simulate(args) -> int:
    tuples = design.read_design(args.tuples)
    latent = _read_latent(args.latent)
    responses = annotation.simulate_annotators(
        tuples,
        latent,
        accuracy_p=args.accuracy,
        per_tuple=args.per_tuple,
        seed=args.seed,
    )
    if args.out:
        annotation.write_responses(responses, args.out)
    else:
        for r in responses.responses:
            sys.stdout.write(
                f"{r.annotator_id}\t{r.tuple_index}\t{r.best}\t{r.worst}\t{r.ordinal}\n"
            )
    return 0


def _cmd_score(args) -> int:
    tuples = design.read_design(args.tuples)
    responses = annotation.read_responses(args.responses, tuples, args.per_tuple)
    table = scoring.compute_scores(responses)
    if args.out:
        scoring.write_scores(table, args.out)
    else:
        for item in sorted(table.raw):
            app, b, w = table.counts[item]
            sys.stdout.write(
                f"{item}\t{float(table.raw[item])!r}"
                f"\t{float(table.unipolar[item])!r}\t{app}\t{b}\t{w}\n"
            )
    return 0


def _cmd_shr(args) -> int:
    tuples = design.read_design(args.tuples)
    responses = annotation.read_responses(args.responses, tuples, args.per_tuple)
    result = scoring.split_half_reliability(
        responses, repetitions=args.repetitions, seed=args.seed
    )
    kv = {
        "repetitions": str(result.repetitions),
        "mean_pearson": repr(result.mean_pearson),
        "mean_spearman": repr(result.mean_spearman),
    }
    _write_kv(kv, args.out)
    return 0


def _cmd_hashtag_impact(args) -> int:
    dataset = corpus.load_dataset(args.dataset)
    if args.reconstruct:
        if not args.query_terms:
            raise ValidationError("--reconstruct requires --query-terms")
        with open(args.query_terms, encoding="utf-8") as fh:
            terms = {line.strip().lower() for line in fh if line.strip()}
        pairs, report = corpus.reconstruct_pairs(dataset, terms)
        print(
            f"reconstructed {report.matched} pairs "
            f"({len(report.unmatched_hqt)} unmatched, "
            f"{len(report.ambiguous)} ambiguous)",
            file=sys.stderr,
        )
    else:
        pairs = corpus.hqt_nqt_pairs(dataset)
    report = scoring.hashtag_impact(pairs)
    print(report.render())
    if args.out:
        _write_kv(report.to_kv(), args.out)
    if args.scatter_out:
        with open(args.scatter_out, "w", encoding="utf-8") as fh:
            for h, q, label in scoring.scatter_rows(pairs):
                fh.write(f"{h!r}\t{q!r}\t{label}\n")
    return 0


def _cmd_features(args) -> int:
    dataset = corpus.load_dataset(args.dataset)
    config = FeatureConfig.parse(args.config)
    resources = _load_resources(args)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for item in dataset.items:
            write_feature_vector(assemble(item.text, config, resources), out, item.id)
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_train(args) -> int:
    dataset = corpus.load_dataset(args.train)
    config = FeatureConfig.parse(args.config)
    resources = _load_resources(args)
    hp = regression.Hyperparams(C=args.C, epsilon=args.epsilon)
    partitions = ("train",) if args.train_only else ("train", "dev")
    model = regression.train_on_dataset(
        dataset, config, resources, hp, partitions=partitions
    )
    regression.write_model(model, args.out)
    return 0


def _cmd_eval(args) -> int:
    model = regression.read_model(args.model)
    dataset = corpus.load_dataset(args.test)
    if model.config_label is None:
        raise ValidationError("model file lacks a config header")
    config = FeatureConfig.parse(model.config_label)
    resources = _load_resources(args)
    test = regression.featurize_items(dataset, ("test",), config, resources)
    if args.subset_threshold is not None:
        result = regression.evaluate_subset(model, test, args.subset_threshold)
    else:
        result = regression.evaluate(model, test)
    kv = {
        "pearson": repr(result.pearson),
        "spearman": repr(result.spearman),
        "n": str(result.n),
    }
    if result.subset_threshold is not None:
        kv["subset_threshold"] = repr(result.subset_threshold)
    _write_kv(kv, args.out)
    return 0


def _cmd_ablate(args) -> int:
    datasets = _load_datasets(args.dataset)
    resources = _load_resources(args)
    configs = [c.strip() for c in args.configs.split(";") if c.strip()]
    hp = regression.Hyperparams(C=args.C, epsilon=args.epsilon)
    result = regression.ablation_run(
        datasets, configs, resources, hp, subset_threshold=args.subset_threshold
    )
    sys.stdout.write(result.to_tsv())
    if args.out:
        _write_kv(result.to_kv(), args.out)
    return 0


def _cmd_transfer(args) -> int:
    datasets = _load_datasets(args.dataset)
    resources = _load_resources(args)
    hp = regression.Hyperparams(C=args.C, epsilon=args.epsilon)
    result = regression.transfer_matrix(
        datasets,
        resources,
        config=args.config,
        extra_train_specs=args.pool or (),
        hyperparams=hp,
    )
    sys.stdout.write(result.to_tsv())
    if args.out:
        _write_kv(result.to_kv(), args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, SessionStore, create_app

    tuples = design.read_design(args.tuples)
    gold = annotation.read_gold_questions(args.gold) if args.gold else []
    dataset = corpus.load_dataset(args.dataset)
    texts = {item.id: item.text for item in dataset.items}
    config = ServiceConfig(
        design=tuples,
        gold=tuple(gold),
        texts=texts,
        emotion=args.emotion,
        per_tuple=args.per_tuple,
        seed=args.seed,
        storage_dir=args.storage_dir,
    )
    app = create_app(SessionStore(config))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bws-intensity",
        description="Best-worst scaling annotation and intensity regression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        return p

    p = add("design", _cmd_design, "generate a 4-tuple design over item ids")
    p.add_argument("--items", required=True, help="file with one item id per line")

    p = add("verify", _cmd_verify, "check a tuple design's invariants")
    p.add_argument("--tuples", required=True)

    p = add("simulate", _cmd_simulate, "simulate annotators over a design")
    p.add_argument("--tuples", required=True)
    p.add_argument("--latent", required=True, help="TSV id<TAB>intensity")
    p.add_argument("--accuracy", type=float, default=1.0)
    p.add_argument("--per-tuple", type=int, default=3)

    p = add("score", _cmd_score, "aggregate responses into intensity scores")
    p.add_argument("--responses", required=True)
    p.add_argument("--tuples", required=True)
    p.add_argument("--per-tuple", type=int, default=3)

    p = add("shr", _cmd_shr, "split-half reliability of a response set")
    p.add_argument("--responses", required=True)
    p.add_argument("--tuples", required=True)
    p.add_argument("--per-tuple", type=int, default=3)
    p.add_argument("--repetitions", type=int, default=100)

    p = add("hashtag-impact", _cmd_hashtag_impact, "hashtag removal score analysis")
    p.add_argument("--dataset", required=True)
    p.add_argument("--reconstruct", action="store_true")
    p.add_argument("--query-terms", default=None)
    p.add_argument("--scatter-out", default=None)

    p = add("features", _cmd_features, "extract feature vectors from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True, help="e.g. WN+CN+WE+L")
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--negators", default=None)

    p = add("train", _cmd_train, "train an intensity regressor")
    p.add_argument("--train", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--negators", default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument(
        "--train-only",
        action="store_true",
        help="exclude the dev partition (final models train on train+dev)",
    )
    p.set_defaults(out="model.tsv")

    p = add("eval", _cmd_eval, "evaluate a model on a test partition")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--negators", default=None)
    p.add_argument("--subset-threshold", type=float, default=None)

    p = add("ablate", _cmd_ablate, "feature-set ablation grid")
    p.add_argument("--dataset", action="append", required=True, metavar="EMOTION=PATH")
    p.add_argument("--configs", required=True, help="semicolon-separated configs")
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--negators", default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--subset-threshold", type=float, default=None)

    p = add("transfer", _cmd_transfer, "cross-emotion transfer grid")
    p.add_argument("--dataset", action="append", required=True, metavar="EMOTION=PATH")
    p.add_argument("--config", default="WN+WE+L")
    p.add_argument("--lexicon", action="append", default=[])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--negators", default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--pool", action="append", default=[], metavar="EMOTION+EMOTION")

    p = add("serve", _cmd_serve, "run the annotation HTTP service")
    p.add_argument("--tuples", required=True)
    p.add_argument("--dataset", required=True, help="items providing tweet texts")
    p.add_argument("--gold", default=None)
    p.add_argument("--emotion", default="fear", choices=sorted(corpus.EMOTIONS))
    p.add_argument("--per-tuple", type=int, default=3)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--storage-dir", default=None)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
