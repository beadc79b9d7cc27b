"""Exact brute-force top-k retrieval by cosine similarity.

Every query is scored against every document and the full ranking is sorted;
there is no approximation. Ties break by ascending doc-id so runs are
reproducible. Scores use 64-bit reduction; each query is scored by an
identical matrix-vector product, which keeps output independent of the
threading degree.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ae
from .errors import ConfigError, DimMismatch, EmptyCorpus, MethodMismatch
from .io import EmbeddingSet, RunRanking
from .quant import CompressedSet, Method, dequantize, quantize

MODES = ("symmetric", "asymmetric")


@dataclass
class SearchParams:
    """k_max caps ranking length; similarity is fixed to cosine."""

    k_max: int = 100

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|); 0.0 when either norm is zero."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimMismatch(f"vector dims differ: {a.shape[0]} vs {b.shape[0]}")
    norm_a = float(np.sqrt(a @ a))
    norm_b = float(np.sqrt(b @ b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float((a @ b) / (norm_a * norm_b))


def _rank_block(
    queries64: np.ndarray,
    docs64: np.ndarray,
    doc_norms: np.ndarray,
    doc_ids: np.ndarray,
    order_keys: np.ndarray,
    k: int,
) -> list[list[tuple[str, float]]]:
    """Rank one block of queries; one gemv per query so results do not depend
    on how queries are batched across threads."""
    out = []
    for query in queries64:
        qnorm = float(np.sqrt(query @ query))
        if qnorm == 0.0:
            scores = np.zeros(docs64.shape[0], dtype=np.float64)
        else:
            denom = doc_norms * qnorm
            safe = np.where(denom == 0.0, 1.0, denom)
            scores = np.where(denom == 0.0, 0.0, (docs64 @ query) / safe)
        order = np.lexsort((order_keys, -scores))[:k]
        out.append([(str(doc_ids[i]), float(scores[i])) for i in order])
    return out


def search(
    queries: EmbeddingSet,
    docs: EmbeddingSet,
    params: SearchParams | None = None,
    threads: int = 1,
) -> RunRanking:
    """Exact top-min(k_max, docs.count) cosine ranking for every query."""
    if params is None:
        params = SearchParams()
    if docs.count == 0:
        raise EmptyCorpus("document set is empty")
    if queries.count == 0:
        return RunRanking(rankings={})
    if queries.dim != docs.dim:
        raise DimMismatch(f"query dim {queries.dim} != doc dim {docs.dim}")

    docs64 = docs.data.astype(np.float64)
    doc_norms = np.sqrt(np.einsum("ij,ij->i", docs64, docs64))
    doc_ids = np.asarray(docs.ids, dtype=object)
    # presorted positions of each id give a cheap integer tiebreak key
    order_keys = np.argsort(np.argsort(doc_ids, kind="stable"), kind="stable")
    k = min(params.k_max, docs.count)
    queries64 = queries.data.astype(np.float64)

    threads = max(1, threads)
    if threads == 1 or queries.count == 1:
        blocks = [_rank_block(queries64, docs64, doc_norms, doc_ids, order_keys, k)]
    else:
        bounds = np.linspace(0, queries.count, threads + 1, dtype=int)
        spans = [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            blocks = list(
                pool.map(
                    lambda span: _rank_block(
                        queries64[span[0] : span[1]], docs64, doc_norms, doc_ids, order_keys, k
                    ),
                    spans,
                )
            )
    ranked = [entry for block in blocks for entry in block]
    return RunRanking(rankings={qid: ranked[i] for i, qid in enumerate(queries.ids)})


def search_compressed(
    queries: EmbeddingSet,
    docs: CompressedSet,
    params: SearchParams | None = None,
    mode: str = "symmetric",
    model: "ae.AeModel | None" = None,
    threads: int = 1,
) -> RunRanking:
    """Decompress-then-retrieve. Symmetric mode pushes queries through the
    same codec (or autoencoder) before scoring; asymmetric scores raw float
    queries against the decompressed documents."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    if docs.method is Method.AE_LATENT:
        if model is None:
            raise MethodMismatch("AE_LATENT search requires the trained model")
        latents = np.frombuffer(docs.payload, dtype="<f4").reshape(
            docs.count, docs.stored_dim
        )
        doc_set = ae.decode(model, EmbeddingSet(ids=list(docs.ids), data=latents))
        query_set = ae.reconstruct(model, queries) if mode == "symmetric" else queries
    else:
        doc_set = dequantize(docs)
        if mode == "symmetric":
            query_set = dequantize(quantize(queries, docs.method, docs.params))
        else:
            query_set = queries
    return search(query_set, doc_set, params, threads=threads)
