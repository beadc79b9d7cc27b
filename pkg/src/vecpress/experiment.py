"""Config-driven orchestration: baseline plus quantization and autoencoder
arms over one corpus/query/qrels triple, producing run files, metric and
delta reports, a comparison table, and plot-ready CSVs under one output
directory.

Everything is deterministic given the config: file contents carry no
timestamps, JSON is written with sorted keys, and reruns with an unchanged
config produce byte-identical artifacts. Trained autoencoder models are
persisted and reused when the arm's configuration and training data are
unchanged.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

from . import ae
from .errors import ArmFailure, ConfigError, JsonParseError, IoFailure
from .io import (
    EmbeddingSet,
    Qrels,
    RunRanking,
    atomic_write_text,
    read_fvecs,
    read_qrels_tsv,
    write_run,
)
from .metrics import DEFAULT_KS, METRICS, DeltaReport, MetricReport, delta, evaluate
from .quant import (
    CompressedSet,
    Method,
    bytes_per_vector,
    calibrate_int8,
    quantize,
    write_container,
)
from .retrieval import MODES, SearchParams, search, search_compressed

ARM_METHODS = ("baseline", "f16", "int8", "binary", "ae")
_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")
_PRECISION_LABELS = {
    "baseline": "float32",
    "f16": "float16",
    "int8": "int8",
    "binary": "binary",
    "ae": "float32",
}
_AE_KEYS = (
    "latent_dim",
    "hidden_dim",
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "seed",
    "validation_fraction",
)


@dataclass
class Arm:
    name: str
    method: str
    ae: dict | None = None


@dataclass
class ExperimentConfig:
    corpus: Path
    queries: Path
    qrels: Path
    output_dir: Path
    arms: list[Arm]
    ks: list[int]
    mode: str
    seed: int
    threads: int
    ae_train: Path | None
    corpus_ids: Path | None
    queries_ids: Path | None
    raw: dict


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode("utf-8")).hexdigest()


def dump_json(obj, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def parse_config(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    """Validate a parsed experiment JSON document. Relative paths resolve
    against base_dir (the config file's directory)."""
    base = Path(base_dir)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "corpus", "corpus_ids", "queries", "queries_ids", "qrels",
        "output_dir", "arms", "ks", "mode", "seed", "threads", "ae_train",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("corpus", "queries", "qrels", "output_dir", "arms"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")

    ks = raw.get("ks", list(DEFAULT_KS))
    if not isinstance(ks, list) or not ks or not all(
        isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in ks
    ):
        raise ConfigError("ks must be a non-empty list of positive integers")
    mode = raw.get("mode", "symmetric")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ConfigError("threads must be a positive integer")

    if not isinstance(raw["arms"], list) or not raw["arms"]:
        raise ConfigError("arms must be a non-empty list")
    arms: list[Arm] = []
    names = set()
    for entry in raw["arms"]:
        if not isinstance(entry, dict):
            raise ConfigError("each arm must be a JSON object")
        extra = set(entry) - {"name", "method", "ae"}
        if extra:
            raise ConfigError(f"unknown arm keys: {sorted(extra)}")
        name = entry.get("name")
        method = entry.get("method")
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise ConfigError(f"arm name {name!r} must match {_NAME_RE.pattern}")
        if name in names:
            raise ConfigError(f"duplicate arm name {name!r}")
        names.add(name)
        if method not in ARM_METHODS:
            raise ConfigError(f"arm {name!r}: method must be one of {ARM_METHODS}")
        ae_raw = entry.get("ae")
        if method == "ae":
            if not isinstance(ae_raw, dict):
                raise ConfigError(f"arm {name!r}: ae arms need an \"ae\" object")
            bad = set(ae_raw) - set(_AE_KEYS)
            if bad:
                raise ConfigError(f"arm {name!r}: unknown ae keys: {sorted(bad)}")
            if "latent_dim" not in ae_raw:
                raise ConfigError(f"arm {name!r}: ae config needs latent_dim")
        elif ae_raw is not None:
            raise ConfigError(f"arm {name!r}: only ae arms take an \"ae\" object")
        arms.append(Arm(name=name, method=method, ae=ae_raw))
    if sum(1 for a in arms if a.method == "baseline") != 1:
        raise ConfigError("config must contain exactly one baseline arm")

    def path_of(key: str) -> Path | None:
        value = raw.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a path string")
        return base / value

    return ExperimentConfig(
        corpus=path_of("corpus"),
        queries=path_of("queries"),
        qrels=path_of("qrels"),
        output_dir=path_of("output_dir"),
        arms=arms,
        ks=sorted(set(ks)),
        mode=mode,
        seed=seed,
        threads=threads,
        ae_train=path_of("ae_train"),
        corpus_ids=path_of("corpus_ids"),
        queries_ids=path_of("queries_ids"),
        raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JsonParseError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def effective_ae_config(arm: Arm, input_dim: int, experiment_seed: int) -> ae.AeConfig:
    """Arm-level AE settings with experiment-level defaults filled in."""
    fields = dict(arm.ae)
    fields.setdefault("seed", experiment_seed)
    return ae.AeConfig(input_dim=input_dim, **fields)


def ae_model_hash(config: ae.AeConfig, train_sha256: str) -> str:
    return hashlib.sha256(
        canonical_json({"ae": asdict(config), "train_sha256": train_sha256}).encode("utf-8")
    ).hexdigest()


def format_ratio(ratio: float) -> str:
    text = f"{ratio:.1f}"
    if text.endswith(".0"):
        text = text[:-2]
    return text + "x"


def format_loss(value: float) -> str:
    text = f"{value:.5f}"
    while text.endswith("0") and not text.endswith(".0"):
        text = text[:-1]
    return text


@dataclass
class TableRow:
    method: str
    dimensions: int
    precision: str
    bytes_per_vector: int
    compression: str
    loss: float


@dataclass
class ComparisonTable:
    loss_k: int
    rows: list[TableRow]

    def to_dict(self) -> dict:
        return {
            "loss_k": self.loss_k,
            "rows": [
                {
                    "method": r.method,
                    "dimensions": r.dimensions,
                    "precision": r.precision,
                    "bytes_per_vector": r.bytes_per_vector,
                    "compression": r.compression,
                    "loss": r.loss,
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ComparisonTable":
        return cls(
            loss_k=int(obj["loss_k"]),
            rows=[
                TableRow(
                    method=r["method"],
                    dimensions=int(r["dimensions"]),
                    precision=r["precision"],
                    bytes_per_vector=int(r["bytes_per_vector"]),
                    compression=r["compression"],
                    loss=float(r["loss"]),
                )
                for r in obj["rows"]
            ],
        )


def render_table(table: ComparisonTable) -> str:
    """Markdown table in Table-1 column order."""
    header = [
        "Method",
        "Dimensions",
        "Precision",
        "Bytes/Vector",
        "Compression",
        f"nDCG@{table.loss_k} Loss",
    ]
    cells = [header, ["---"] * len(header)]
    for row in table.rows:
        cells.append(
            [
                row.method,
                str(row.dimensions),
                row.precision,
                str(row.bytes_per_vector),
                row.compression,
                format_loss(row.loss),
            ]
        )
    widths = [max(len(line[i]) for line in cells) for i in range(len(header))]
    lines = []
    for line in cells:
        padded = [line[i].ljust(widths[i]) for i in range(len(header))]
        lines.append("| " + " | ".join(padded) + " |")
    return "".join(line + "\n" for line in lines)


def emit_plot_data(
    deltas: dict[str, DeltaReport], plots_dir: str | Path
) -> list[Path]:
    """One CSV per metric: method, k, value, delta; rows sorted by (k, method)."""
    plots_dir = Path(plots_dir)
    written = []
    for metric in METRICS:
        rows = []
        for name in sorted(deltas):
            report = deltas[name]
            for k in report.ks:
                rows.append((k, name, report.method[metric][k], report.delta[metric][k]))
        rows.sort(key=lambda r: (r[0], r[1]))
        lines = ["method,k,value,delta"]
        for k, name, value, dlt in rows:
            lines.append(f"{name},{k},{value!r},{dlt!r}")
        path = plots_dir / f"{metric}.csv"
        atomic_write_text(path, "".join(line + "\n" for line in lines))
        written.append(path)
    return written


def emit_deltas_csv(deltas: dict[str, DeltaReport], arm_order: list[str], path: str | Path) -> None:
    """Long-format CSV over all non-baseline arms: method, metric, k, value,
    baseline, delta."""
    lines = ["method,metric,k,value,baseline,delta"]
    for name in arm_order:
        if name not in deltas:
            continue
        report = deltas[name]
        for metric in METRICS:
            for k in report.ks:
                lines.append(
                    f"{name},{metric},{k},{report.method[metric][k]!r},"
                    f"{report.baseline[metric][k]!r},{report.delta[metric][k]!r}"
                )
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    out_dir: Path, raw_config: dict, status: str, error: dict | None = None
) -> None:
    files = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[path.relative_to(out_dir).as_posix()] = _sha256_file(path)
    manifest = {
        "config": raw_config,
        "config_hash": config_hash(raw_config),
        "files": files,
        "status": status,
    }
    if error is not None:
        manifest["error"] = error
    dump_json(manifest, out_dir / "manifest.json")


def _latent_set(model: ae.AeModel, corpus: EmbeddingSet, latent_dim: int) -> CompressedSet:
    latents = ae.encode(model, corpus)
    return CompressedSet(
        method=Method.AE_LATENT,
        dim=corpus.dim,
        ids=list(corpus.ids),
        payload=latents.data.astype("<f4").tobytes(),
        latent_dim=latent_dim,
    )


def _run_arm(
    arm: Arm,
    config: ExperimentConfig,
    corpus: EmbeddingSet,
    queries: EmbeddingSet,
    train_set: EmbeddingSet,
    train_sha: str,
    arm_dir: Path,
    params: SearchParams,
) -> tuple[RunRanking, int, int]:
    """Execute one arm; returns (run, table dimensions, bytes per vector)."""
    if arm.method == "baseline":
        run = search(queries, corpus, params, threads=config.threads)
        return run, corpus.dim, bytes_per_vector(Method.F32, corpus.dim)

    if arm.method == "ae":
        ae_config = effective_ae_config(arm, corpus.dim, config.seed)
        model_path = arm_dir / "model.vae1"
        meta_path = arm_dir / "model.json"
        wanted = ae_model_hash(ae_config, train_sha)
        model = None
        if model_path.exists() and meta_path.exists():
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                meta = {}
            if meta.get("config_hash") == wanted:
                model = ae.load_model(model_path)
        if model is None:
            model, log = ae.train(train_set, ae_config)
            ae.save_model(model, model_path)
            log.save(arm_dir / "training.csv")
            dump_json({"config_hash": wanted}, meta_path)
        compressed = _latent_set(model, corpus, ae_config.latent_dim)
        run = search_compressed(
            queries, compressed, params, mode=config.mode, model=model, threads=config.threads
        )
        return run, ae_config.latent_dim, bytes_per_vector(Method.AE_LATENT, ae_config.latent_dim)

    method = Method(arm.method)
    if method is Method.INT8:
        compressed = quantize(corpus, method, calibrate_int8(corpus))
    else:
        compressed = quantize(corpus, method)
    write_container(compressed, arm_dir / "compressed.vqc")
    run = search_compressed(
        queries, compressed, params, mode=config.mode, threads=config.threads
    )
    return run, corpus.dim, bytes_per_vector(method, corpus.dim)


def run_experiment(config: ExperimentConfig) -> ComparisonTable:
    """Execute every arm (baseline first), writing all artifacts under
    config.output_dir; a failing arm aborts with a partial-results manifest."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    baseline_arm = next(a for a in config.arms if a.method == "baseline")
    ordered = [baseline_arm] + [a for a in config.arms if a.method != "baseline"]
    current = baseline_arm.name
    try:
        corpus = read_fvecs(config.corpus, config.corpus_ids)
        queries = read_fvecs(config.queries, config.queries_ids)
        qrels = read_qrels_tsv(config.qrels)
        if config.ae_train is not None:
            train_set = read_fvecs(config.ae_train)
        else:
            train_set = corpus
        train_sha = hashlib.sha256(train_set.data.tobytes()).hexdigest()
        params = SearchParams(k_max=max(config.ks))

        baseline_report: MetricReport | None = None
        reports: dict[str, MetricReport] = {}
        deltas: dict[str, DeltaReport] = {}
        rows: list[TableRow] = []
        loss_k = 10 if 10 in config.ks else max(config.ks)
        baseline_bytes = bytes_per_vector(Method.F32, corpus.dim)

        for arm in ordered:
            current = arm.name
            arm_dir = out_dir / "arms" / arm.name
            arm_dir.mkdir(parents=True, exist_ok=True)
            run, dims, nbytes = _run_arm(
                arm, config, corpus, queries, train_set, train_sha, arm_dir, params
            )
            write_run(run, arm_dir / "run.trec", tag=arm.name)
            report = evaluate(run, qrels, config.ks)
            dump_json(report.to_dict(), arm_dir / "metrics.json")
            reports[arm.name] = report
            if arm.method == "baseline":
                baseline_report = report
                loss = 0.0
            else:
                arm_delta = delta(report, baseline_report)
                dump_json(arm_delta.to_dict(), arm_dir / "delta.json")
                deltas[arm.name] = arm_delta
                loss = -arm_delta.delta["ndcg"][loss_k]
            rows.append(
                TableRow(
                    method=arm.name,
                    dimensions=dims,
                    precision=_PRECISION_LABELS[arm.method],
                    bytes_per_vector=nbytes,
                    compression=format_ratio(baseline_bytes / nbytes),
                    loss=loss,
                )
            )
    except Exception as exc:
        _write_manifest(
            out_dir,
            config.raw,
            status="failed",
            error={"arm": current, "type": type(exc).__name__, "message": str(exc)},
        )
        raise ArmFailure(current, exc) from exc

    table = ComparisonTable(loss_k=loss_k, rows=rows)
    dump_json(table.to_dict(), out_dir / "table.json")
    atomic_write_text(out_dir / "table.md", render_table(table))
    emit_deltas_csv(deltas, [a.name for a in ordered], out_dir / "deltas.csv")
    if deltas:
        emit_plot_data(deltas, out_dir / "plots")
    _write_manifest(out_dir, config.raw, status="complete")
    return table


def regenerate_reports(out_dir: str | Path) -> ComparisonTable:
    """Rebuild table.md, deltas.csv, and plots/*.csv from the artifacts stored
    under a completed experiment directory."""
    out_dir = Path(out_dir)
    try:
        manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
        table = ComparisonTable.from_dict(
            json.loads((out_dir / "table.json").read_text(encoding="utf-8"))
        )
    except OSError as exc:
        raise IoFailure(f"cannot read experiment artifacts: {exc}") from exc
    except (json.JSONDecodeError, KeyError) as exc:
        raise JsonParseError(f"malformed experiment artifacts: {exc}") from exc
    config = parse_config(manifest["config"], base_dir=out_dir)

    deltas: dict[str, DeltaReport] = {}
    order = []
    for arm in config.arms:
        order.append(arm.name)
        delta_path = out_dir / "arms" / arm.name / "delta.json"
        if not delta_path.exists():
            continue
        try:
            obj = json.loads(delta_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise JsonParseError(f"malformed delta report {delta_path}: {exc}") from exc
        deltas[arm.name] = DeltaReport(
            ks=[int(k) for k in obj["ks"]],
            method={m: {int(k): v for k, v in per.items()} for m, per in obj["method"].items()},
            baseline={m: {int(k): v for k, v in per.items()} for m, per in obj["baseline"].items()},
            delta={m: {int(k): v for k, v in per.items()} for m, per in obj["delta"].items()},
        )
    atomic_write_text(out_dir / "table.md", render_table(table))
    emit_deltas_csv(deltas, order, out_dir / "deltas.csv")
    if deltas:
        emit_plot_data(deltas, out_dir / "plots")
    return table
