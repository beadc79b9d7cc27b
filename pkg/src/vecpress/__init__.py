"""Benchmarking toolkit for the retrieval cost of vector compression.

Measures how float16/int8/binary quantization and autoencoder
dimensionality reduction trade memory for retrieval quality, end to end:
embedding file formats, compression codecs, exact cosine search, IR metrics,
and a config-driven experiment runner.
"""

from .ae import AeConfig, AeModel, TrainingLog, load_model, save_model, train
from .errors import ArmFailure, DataError, VecpressError
from .experiment import (
    ComparisonTable,
    ExperimentConfig,
    load_config,
    render_table,
    run_experiment,
)
from .io import (
    EmbeddingSet,
    Qrels,
    RunRanking,
    read_fvecs,
    read_jsonl_embeddings,
    read_qrels_tsv,
    read_run,
    write_fvecs,
    write_jsonl_embeddings,
    write_qrels_tsv,
    write_run,
)
from .metrics import DeltaReport, MetricReport, delta, evaluate
from .quant import (
    CompressedSet,
    Int8Params,
    Method,
    bytes_per_vector,
    calibrate_int8,
    dequantize,
    quantize,
    read_container,
    write_container,
)
from .retrieval import SearchParams, cosine, search, search_compressed

__version__ = "0.1.0"

__all__ = [
    "AeConfig",
    "AeModel",
    "ArmFailure",
    "ComparisonTable",
    "CompressedSet",
    "DataError",
    "DeltaReport",
    "EmbeddingSet",
    "ExperimentConfig",
    "Int8Params",
    "Method",
    "MetricReport",
    "Qrels",
    "RunRanking",
    "SearchParams",
    "TrainingLog",
    "VecpressError",
    "bytes_per_vector",
    "calibrate_int8",
    "cosine",
    "delta",
    "dequantize",
    "evaluate",
    "load_config",
    "load_model",
    "quantize",
    "read_container",
    "read_fvecs",
    "read_jsonl_embeddings",
    "read_qrels_tsv",
    "read_run",
    "render_table",
    "run_experiment",
    "save_model",
    "search",
    "search_compressed",
    "train",
    "write_container",
    "write_fvecs",
    "write_jsonl_embeddings",
    "write_qrels_tsv",
    "write_run",
    "__version__",
]
