"""Command-line surface: each pipeline stage as a subcommand plus the full
experiment runner.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. Usage
errors print a one-line diagnostic plus usage to stderr; with --json, data
and internal errors are reported as a JSON object on stderr instead of plain
text. No subcommand leaves a partial output file behind on error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ae
from .errors import ArmFailure, DataError, VecpressError
from .experiment import (
    dump_json,
    load_config,
    regenerate_reports,
    run_experiment,
)
from .io import (
    read_fvecs,
    read_jsonl_embeddings,
    read_qrels_tsv,
    read_run,
    write_fvecs,
    write_jsonl_embeddings,
    write_run,
)
from .metrics import DEFAULT_KS, MetricReport, delta, evaluate
from .quant import CONTAINER_MAGIC, Method, dequantize, quantize, read_container, write_container
from .retrieval import MODES, SearchParams, search, search_compressed


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def _ks_list(text: str) -> list[int]:
    try:
        ks = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated integer list")
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("every k must be a positive integer")
    return ks


def _is_container(path: str) -> bool:
    try:
        with open(path, "rb") as handle:
            return handle.read(4) == CONTAINER_MAGIC
    except OSError:
        return False


def _load_metric_report(path: str) -> MetricReport:
    from .errors import IoFailure, JsonParseError

    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise JsonParseError(f"{path}: {exc}") from exc
    try:
        return MetricReport.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise JsonParseError(f"{path} is not a metrics report: {exc}") from exc


def cmd_convert(args) -> int:
    source = args.source or ("jsonl" if args.input.endswith(".jsonl") else "fvecs")
    if source == "jsonl":
        embeddings = read_jsonl_embeddings(args.input)
        write_fvecs(embeddings, args.output, args.out_ids)
    else:
        embeddings = read_fvecs(args.input, args.ids)
        write_jsonl_embeddings(embeddings, args.output)
    return 0


def cmd_compress(args) -> int:
    embeddings = read_fvecs(args.input, args.ids)
    compressed = quantize(embeddings, Method(args.method))
    write_container(compressed, args.output, args.out_ids)
    return 0


def cmd_decompress(args) -> int:
    compressed = read_container(args.input, args.ids)
    write_fvecs(dequantize(compressed), args.output, args.out_ids)
    return 0


def cmd_ae_train(args) -> int:
    train_set = read_fvecs(args.train, args.ids)
    config = ae.AeConfig(
        latent_dim=args.latent_dim,
        input_dim=train_set.dim,
        hidden_dim=args.hidden_dim,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        validation_fraction=args.val_fraction,
    )
    model, log = ae.train(train_set, config)
    ae.save_model(model, args.model)
    if args.log is not None:
        log.save(args.log)
    return 0


def cmd_ae_apply(args) -> int:
    model = ae.load_model(args.model)
    embeddings = read_fvecs(args.input, args.ids)
    if args.latents:
        result = ae.encode(model, embeddings)
    else:
        result = ae.reconstruct(model, embeddings)
    write_fvecs(result, args.output, args.out_ids)
    return 0


def cmd_search(args) -> int:
    queries = read_fvecs(args.queries, args.query_ids)
    params = SearchParams(k_max=args.k)
    if _is_container(args.docs):
        docs = read_container(args.docs, args.doc_ids)
        run = search_compressed(
            queries, docs, params, mode=args.mode, threads=args.threads
        )
    else:
        docs = read_fvecs(args.docs, args.doc_ids)
        run = search(queries, docs, params, threads=args.threads)
    write_run(run, args.output, tag=args.tag)
    return 0


def cmd_eval(args) -> int:
    run = read_run(args.run, max_len=None)
    qrels = read_qrels_tsv(args.qrels)
    report = evaluate(run, qrels, args.ks)
    dump_json(report.to_dict(), args.output)
    return 0


def cmd_compare(args) -> int:
    method = _load_metric_report(args.metrics)
    baseline = _load_metric_report(args.baseline)
    dump_json(delta(method, baseline).to_dict(), args.output)
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.threads is not None:
        config.threads = min(config.threads, args.threads)
    run_experiment(config)
    return 0


def cmd_report(args) -> int:
    regenerate_reports(args.output_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="vecpress",
        description="Benchmark the retrieval cost of vector compression.",
    )
    parser.add_argument(
        "--json", action="store_true", help="report errors as JSON on stderr"
    )
    # a SUPPRESS-defaulted twin lets --json appear after the subcommand too
    # without clobbering a value parsed before it
    shared = _Parser(add_help=False)
    shared.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_parser(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[shared])

    p = add_parser("convert", help="convert embeddings between jsonl and fvecs")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--from", dest="source", choices=("jsonl", "fvecs"), help="input format (default: by extension)")
    p.add_argument("--ids", help="ids sidecar of an fvecs input")
    p.add_argument("--out-ids", help="ids sidecar of an fvecs output")
    p.set_defaults(func=cmd_convert)

    p = add_parser("compress", help="quantize an fvecs file into a container")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", required=True, choices=("f16", "int8", "binary"))
    p.add_argument("--ids", help="ids sidecar of the input")
    p.add_argument("--out-ids", help="ids sidecar of the container")
    p.set_defaults(func=cmd_compress)

    p = add_parser("decompress", help="reconstruct an fvecs file from a container")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--ids", help="ids sidecar of the container")
    p.add_argument("--out-ids", help="ids sidecar of the output")
    p.set_defaults(func=cmd_decompress)

    p = add_parser("ae-train", help="train an autoencoder on an fvecs file")
    p.add_argument("train")
    p.add_argument("model")
    p.add_argument("--latent-dim", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True, help="training is seeded; required")
    p.add_argument("--hidden-dim", type=_positive_int, default=1024)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=_positive_int, default=128)
    p.add_argument("--max-epochs", type=_positive_int, default=200)
    p.add_argument("--patience", type=_positive_int, default=10)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--ids", help="ids sidecar of the training set")
    p.add_argument("--log", help="write the per-epoch training log CSV here")
    p.set_defaults(func=cmd_ae_train)

    p = add_parser("ae-apply", help="run embeddings through a trained autoencoder")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--latents", action="store_true", help="emit latent vectors instead of reconstructions")
    p.add_argument("--ids", help="ids sidecar of the input")
    p.add_argument("--out-ids", help="ids sidecar of the output")
    p.set_defaults(func=cmd_ae_apply)

    p = add_parser("search", help="exact cosine top-k over fvecs or a container")
    p.add_argument("queries")
    p.add_argument("docs", help="fvecs file or VQC1 container")
    p.add_argument("output", help="TREC run file to write")
    p.add_argument("--k", type=_positive_int, default=100)
    p.add_argument("--mode", choices=MODES, default="symmetric")
    p.add_argument("--tag", default="vecpress", help="run tag column")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--query-ids", help="ids sidecar of the queries")
    p.add_argument("--doc-ids", help="ids sidecar of the docs")
    p.set_defaults(func=cmd_search)

    p = add_parser("eval", help="score a TREC run against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("output", help="metrics JSON to write")
    p.add_argument("--ks", type=_ks_list, default=list(DEFAULT_KS), help="comma-separated cutoffs")
    p.set_defaults(func=cmd_eval)

    p = add_parser("compare", help="delta a metrics report against a baseline")
    p.add_argument("metrics")
    p.add_argument("output", help="delta JSON to write")
    p.add_argument("--baseline", required=True, help="baseline metrics JSON")
    p.set_defaults(func=cmd_compare)

    p = add_parser("run", help="run a full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=_positive_int, help="cap the config's thread count")
    p.set_defaults(func=cmd_run)

    p = add_parser("report", help="regenerate table and plot data from stored artifacts")
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_report)

    return parser


def _diagnose(exc: Exception, as_json: bool) -> None:
    if as_json:
        record = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ArmFailure):
            record["arm"] = exc.arm
            record["cause"] = type(exc.cause).__name__
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
    else:
        print(f"vecpress: error: {type(exc).__name__}: {exc}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    as_json = getattr(args, "json", False)
    try:
        return args.func(args)
    except ArmFailure as exc:
        _diagnose(exc, as_json)
        return 2 if isinstance(exc.cause, DataError) else 3
    except DataError as exc:
        _diagnose(exc, as_json)
        return 2
    except VecpressError as exc:
        _diagnose(exc, as_json)
        return 3
    except Exception as exc:  # pragma: no cover - genuine bugs land here
        _diagnose(exc, as_json)
        return 3


if __name__ == "__main__":
    sys.exit(main())
