"""Embedding sets, qrels, and run rankings, plus their on-disk formats.

Vectors are exchanged as fvecs (per record: little-endian int32 dim followed
by dim little-endian float32 components) with a sidecar .ids text file, one
identifier per line in row order. JSONL ({"id": ..., "vector": [...]} per
line) is the alternate interchange. Qrels use the BEIR TSV layout, runs the
six-column TREC format.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptRecord,
    DimMismatch,
    DuplicateId,
    DuplicateJudgment,
    IdCountMismatch,
    IoFailure,
    JsonParseError,
    MalformedRow,
    NegativeGrade,
    NonFiniteValue,
    RankGap,
)

RUN_SCORE_DECIMALS = 6
QRELS_HEADER = ("query-id", "corpus-id", "score")


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write payload to path via a temp file in the same directory, renaming
    on success so failures never leave a partial file behind."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _check_ids(ids: list[str]) -> None:
    seen = set()
    for i, doc_id in enumerate(ids):
        if not doc_id or any(c.isspace() for c in doc_id):
            raise MalformedRow(f"id at row {i} is empty or contains whitespace: {doc_id!r}")
        if doc_id in seen:
            raise DuplicateId(f"duplicate id {doc_id!r}")
        seen.add(doc_id)


@dataclass
class EmbeddingSet:
    """Ordered (id, float32 vector) matrix; ids[i] pairs with data row i."""

    ids: list[str]
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise DimMismatch(f"data must be 2-D, got shape {self.data.shape}")
        if len(self.ids) != self.data.shape[0]:
            raise IdCountMismatch(
                f"{len(self.ids)} ids for {self.data.shape[0]} vectors"
            )
        _check_ids(self.ids)
        if self.data.size and not np.all(np.isfinite(self.data)):
            raise NonFiniteValue("embedding matrix contains NaN or Inf")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        # 0 is the sentinel for an empty set
        return self.data.shape[1] if self.data.shape[0] else self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )


@dataclass
class Qrels:
    """Relevance judgments: query-id -> doc-id -> grade (int >= 0)."""

    judgments: dict[str, dict[str, int]]

    def positives(self, query_id: str) -> dict[str, int]:
        """Judged docs with grade > 0 for one query."""
        return {d: g for d, g in self.judgments.get(query_id, {}).items() if g > 0}


@dataclass
class RunRanking:
    """Per-query ranked retrieval output: query-id -> [(doc-id, score)] descending."""

    rankings: dict[str, list[tuple[str, float]]]

    def __post_init__(self):
        for qid, entries in self.rankings.items():
            seen = set()
            prev = math.inf
            for doc_id, score in entries:
                if doc_id in seen:
                    raise DuplicateId(f"query {qid!r}: duplicate doc {doc_id!r}")
                seen.add(doc_id)
                if score > prev:
                    raise MalformedRow(
                        f"query {qid!r}: scores not non-increasing at doc {doc_id!r}"
                    )
                prev = score


# ---------------------------------------------------------------------------
# fvecs + ids sidecar
# ---------------------------------------------------------------------------


def default_ids_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".ids")


def _read_id_lines(ids_path: str | Path) -> list[str]:
    try:
        text = Path(ids_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {ids_path}: {exc}") from exc
    return text.splitlines()


def read_fvecs(path: str | Path, ids_path: str | Path | None = None) -> EmbeddingSet:
    """Load an fvecs file and its ids sidecar (default: same stem, .ids)."""
    if ids_path is None:
        ids_path = default_ids_path(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    ids = _read_id_lines(ids_path)

    if not raw:
        if ids:
            raise IdCountMismatch(f"{len(ids)} ids for 0 records")
        return EmbeddingSet(ids=[], data=np.zeros((0, 0), dtype=np.float32))

    if len(raw) < 4:
        raise CorruptRecord("file shorter than one dim header")
    dim = struct.unpack_from("<i", raw, 0)[0]
    if dim <= 0:
        raise CorruptRecord(f"first record declares non-positive dim {dim}")

    record_size = 4 + 4 * dim
    if len(raw) % record_size != 0:
        _scan_fvecs_for_error(raw, dim)
        raise CorruptRecord("file length is not a whole number of records")
    count = len(raw) // record_size

    flat = np.frombuffer(raw, dtype="<f4").reshape(count, dim + 1)
    dims = flat[:, 0].view("<i4")
    if not np.all(dims == dim):
        bad = int(np.argmin(dims == dim))
        raise DimMismatch(f"record {bad} declares dim {int(dims[bad])}, expected {dim}")
    data = np.ascontiguousarray(flat[:, 1:], dtype=np.float32)

    if len(ids) != count:
        raise IdCountMismatch(f"{len(ids)} ids for {count} records")
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{path} contains NaN or Inf")
    return EmbeddingSet(ids=ids, data=data)


def _scan_fvecs_for_error(raw: bytes, dim: int) -> None:
    """Walk records to tell a mid-file dim change from a truncated payload."""
    offset, index = 0, 0
    while offset < len(raw):
        if len(raw) - offset < 4:
            raise CorruptRecord(f"record {index}: truncated dim header")
        rec_dim = struct.unpack_from("<i", raw, offset)[0]
        if rec_dim != dim:
            raise DimMismatch(f"record {index} declares dim {rec_dim}, expected {dim}")
        offset += 4
        if len(raw) - offset < 4 * rec_dim:
            raise CorruptRecord(f"record {index}: truncated payload")
        offset += 4 * rec_dim
        index += 1


def write_fvecs(
    embeddings: EmbeddingSet, path: str | Path, ids_path: str | Path | None = None
) -> None:
    """Persist as fvecs + ids sidecar; read_fvecs on the result is bit-exact."""
    if ids_path is None:
        ids_path = default_ids_path(path)
    if embeddings.count == 0:
        atomic_write_bytes(path, b"")
        atomic_write_text(ids_path, "")
        return
    buf = np.empty((embeddings.count, embeddings.dim + 1), dtype="<f4")
    buf[:, 0].view("<i4")[:] = embeddings.dim
    buf[:, 1:] = embeddings.data
    atomic_write_bytes(path, buf.tobytes())
    atomic_write_text(ids_path, "\n".join(embeddings.ids) + "\n")


# ---------------------------------------------------------------------------
# JSONL interchange
# ---------------------------------------------------------------------------


def read_jsonl_embeddings(path: str | Path) -> EmbeddingSet:
    """Load embeddings from JSONL: one {"id": str, "vector": [...]} per line."""
    ids: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonParseError(f"line {lineno}: {exc}") from exc
        if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
            raise JsonParseError(f'line {lineno}: object must have "id" and "vector"')
        if not isinstance(obj["id"], str):
            raise JsonParseError(f'line {lineno}: "id" must be a string')
        vec = obj["vector"]
        if not isinstance(vec, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec
        ):
            raise JsonParseError(f'line {lineno}: "vector" must be a number array')
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimMismatch(f"line {lineno}: vector has dim {len(vec)}, expected {dim}")
        ids.append(obj["id"])
        rows.append(vec)
    if not rows:
        return EmbeddingSet(ids=[], data=np.zeros((0, 0), dtype=np.float32))
    return EmbeddingSet(ids=ids, data=np.asarray(rows, dtype=np.float32))


def write_jsonl_embeddings(embeddings: EmbeddingSet, path: str | Path) -> None:
    lines = []
    for doc_id, row in zip(embeddings.ids, embeddings.data):
        vector = [float(v) for v in row]
        lines.append(json.dumps({"id": doc_id, "vector": vector}))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


# ---------------------------------------------------------------------------
# BEIR qrels TSV
# ---------------------------------------------------------------------------


def read_qrels_tsv(path: str | Path) -> Qrels:
    """Load qrels from a BEIR-style TSV with the required header line."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or tuple(lines[0].split("\t")) != QRELS_HEADER:
        raise MalformedRow(
            'qrels file must start with the header "query-id\\tcorpus-id\\tscore"'
        )
    judgments: dict[str, dict[str, int]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedRow(f"line {lineno}: expected 3 tab-separated fields")
        qid, doc_id, grade_text = fields
        try:
            grade = int(grade_text)
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: grade {grade_text!r} is not an integer") from exc
        if grade < 0:
            raise NegativeGrade(f"line {lineno}: grade {grade} < 0")
        per_query = judgments.setdefault(qid, {})
        if doc_id in per_query:
            raise DuplicateJudgment(f"line {lineno}: duplicate judgment ({qid}, {doc_id})")
        per_query[doc_id] = grade
    return Qrels(judgments=judgments)


def write_qrels_tsv(qrels: Qrels, path: str | Path) -> None:
    lines = ["\t".join(QRELS_HEADER)]
    for qid in sorted(qrels.judgments):
        for doc_id in sorted(qrels.judgments[qid]):
            lines.append(f"{qid}\t{doc_id}\t{qrels.judgments[qid][doc_id]}")
    atomic_write_text(path, "".join(line + "\n" for line in lines))


# ---------------------------------------------------------------------------
# TREC run files
# ---------------------------------------------------------------------------


def read_run(path: str | Path, max_len: int | None = 100) -> RunRanking:
    """Load a TREC run ("qid Q0 docid rank score tag"); ranks must be 1..n."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 6:
            raise MalformedRow(f"line {lineno}: expected 6 space-separated fields")
        qid, _q0, doc_id, rank_text, score_text, _tag = fields
        try:
            rank = int(rank_text)
            score = float(score_text)
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: bad rank or score") from exc
        if not math.isfinite(score):
            raise MalformedRow(f"line {lineno}: non-finite score")
        per_query.setdefault(qid, []).append((rank, doc_id, score))

    rankings: dict[str, list[tuple[str, float]]] = {}
    for qid, entries in per_query.items():
        entries.sort(key=lambda e: e[0])
        ranks = [r for r, _, _ in entries]
        if ranks != list(range(1, len(entries) + 1)):
            raise RankGap(f"query {qid!r}: ranks are not 1..{len(entries)}")
        if max_len is not None and len(entries) > max_len:
            raise MalformedRow(
                f"query {qid!r}: {len(entries)} entries exceed max cutoff {max_len}"
            )
        rankings[qid] = [(doc_id, score) for _, doc_id, score in entries]
    return RunRanking(rankings=rankings)


def write_run(run: RunRanking, path: str | Path, tag: str = "vecpress") -> None:
    """Write a TREC run; queries sorted by id, scores to 6 decimals, 1-based ranks."""
    lines = []
    for qid in sorted(run.rankings):
        for rank, (doc_id, score) in enumerate(run.rankings[qid], start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score:.{RUN_SCORE_DECIMALS}f} {tag}")
    atomic_write_text(path, "".join(line + "\n" for line in lines))
