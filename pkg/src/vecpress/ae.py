"""From-scratch dense autoencoder trained with Adam on mean-squared
reconstruction error.

Architecture: input -> hidden -> latent -> hidden -> input, ReLU after the
first layer of each half only; the latent and the final output are linear.
Production training runs in float32; float64 models exist solely so gradient
checks can run at full precision. decode(encode(x)) and reconstruct(x) share
one floating-point path and agree bitwise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    CorruptRecord,
    DimMismatch,
    IoFailure,
    NonFiniteGradient,
    NonFiniteValue,
    ShapeMismatch,
    TooFewRows,
)
from .io import EmbeddingSet, atomic_write_bytes, atomic_write_text

MODEL_MAGIC = b"VAE1"
PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")


@dataclass
class AeConfig:
    latent_dim: int
    input_dim: int = 384
    hidden_dim: int = 1024
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        for name in ("latent_dim", "input_dim", "hidden_dim", "batch_size", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )


@dataclass
class AeModel:
    """Weight matrices are out_features x in_features; x flows as x @ W.T + b."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    W4: np.ndarray
    b4: np.ndarray

    def __post_init__(self):
        hidden, inp = self.W1.shape
        latent = self.W2.shape[0]
        expected = {
            "W1": (hidden, inp),
            "b1": (hidden,),
            "W2": (latent, hidden),
            "b2": (latent,),
            "W3": (hidden, latent),
            "b3": (hidden,),
            "W4": (inp, hidden),
            "b4": (inp,),
        }
        for name in PARAM_NAMES:
            arr = getattr(self, name)
            if arr.shape != expected[name]:
                raise ShapeMismatch(
                    f"{name} has shape {arr.shape}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise NonFiniteValue(f"{name} contains NaN or Inf")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.W2.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "AeModel":
        return AeModel(**{name: getattr(self, name).copy() for name in PARAM_NAMES})


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: AeModel) -> "AdamState":
        return cls(
            m={n: np.zeros_like(p) for n, p in model.params().items()},
            v={n: np.zeros_like(p) for n, p in model.params().items()},
        )


@dataclass
class TrainingLog:
    """Per-epoch (epoch, train_mse, val_mse) rows, epoch numbering from 1."""

    rows: list[tuple[int, float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["epoch,train_mse,val_mse"]
        for epoch, train_mse, val_mse in self.rows:
            lines.append(f"{epoch},{train_mse!r},{val_mse!r}")
        return "".join(line + "\n" for line in lines)

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_csv())


def init_model(config: AeConfig, dtype=np.float32) -> AeModel:
    """Seeded fan-in-scaled Gaussian init: std sqrt(2/fan_in) for the two
    layers feeding a ReLU, sqrt(1/fan_in) for the two linear output layers;
    zero biases."""
    rng = np.random.default_rng(config.seed)
    inp, hid, lat = config.input_dim, config.hidden_dim, config.latent_dim

    def gauss(rows: int, cols: int, std: float) -> np.ndarray:
        return (rng.standard_normal((rows, cols)) * std).astype(dtype)

    return AeModel(
        W1=gauss(hid, inp, np.sqrt(2.0 / inp)),
        b1=np.zeros(hid, dtype=dtype),
        W2=gauss(lat, hid, np.sqrt(1.0 / hid)),
        b2=np.zeros(lat, dtype=dtype),
        W3=gauss(hid, lat, np.sqrt(2.0 / lat)),
        b3=np.zeros(hid, dtype=dtype),
        W4=gauss(inp, hid, np.sqrt(1.0 / hid)),
        b4=np.zeros(inp, dtype=dtype),
    )


def _check_batch(model: AeModel, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ShapeMismatch(
            f"batch shape {batch.shape} incompatible with input_dim {model.input_dim}"
        )
    return batch


def _encode_arrays(model: AeModel, batch: np.ndarray) -> np.ndarray:
    h1 = np.maximum(batch @ model.W1.T + model.b1, 0)
    return h1 @ model.W2.T + model.b2


def _decode_arrays(model: AeModel, latent: np.ndarray) -> np.ndarray:
    h2 = np.maximum(latent @ model.W3.T + model.b3, 0)
    return h2 @ model.W4.T + model.b4


def forward(model: AeModel, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(latent, reconstruction) for a batch; the latent and output layers are
    linear, ReLU applies only inside each half."""
    batch = _check_batch(model, batch)
    latent = _encode_arrays(model, batch)
    return latent, _decode_arrays(model, latent)


def mse_loss(recon: np.ndarray, target: np.ndarray) -> float:
    recon = np.asarray(recon)
    target = np.asarray(target)
    if recon.shape != target.shape:
        raise ShapeMismatch(f"shapes differ: {recon.shape} vs {target.shape}")
    diff = recon.astype(np.float64) - target.astype(np.float64)
    return float(np.mean(diff * diff))


def backward(model: AeModel, batch: np.ndarray) -> dict[str, np.ndarray]:
    """Analytic gradients of mse_loss(reconstruction, batch) w.r.t. every
    parameter; the ReLU subgradient at exactly 0 is 0."""
    batch = _check_batch(model, batch)
    n = batch.shape[0]

    z1 = batch @ model.W1.T + model.b1
    h1 = np.maximum(z1, 0)
    latent = h1 @ model.W2.T + model.b2
    z3 = latent @ model.W3.T + model.b3
    h2 = np.maximum(z3, 0)
    recon = h2 @ model.W4.T + model.b4

    d_recon = (2.0 / (n * model.input_dim)) * (recon - batch)
    grads = {"W4": d_recon.T @ h2, "b4": d_recon.sum(axis=0)}
    d_h2 = d_recon @ model.W4
    d_z3 = d_h2 * (z3 > 0)
    grads["W3"] = d_z3.T @ latent
    grads["b3"] = d_z3.sum(axis=0)
    d_latent = d_z3 @ model.W3
    grads["W2"] = d_latent.T @ h1
    grads["b2"] = d_latent.sum(axis=0)
    d_h1 = d_latent @ model.W2
    d_z1 = d_h1 * (z1 > 0)
    grads["W1"] = d_z1.T @ batch
    grads["b1"] = d_z1.sum(axis=0)
    return {name: grads[name] for name in PARAM_NAMES}


def adam_step(
    model: AeModel, grads: dict[str, np.ndarray], state: AdamState, lr: float
) -> tuple[AeModel, AdamState]:
    """One Adam update in place: m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)."""
    for name in PARAM_NAMES:
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteGradient(f"gradient for {name} contains NaN or Inf")
    state.t += 1
    correct1 = 1.0 - state.beta1 ** state.t
    correct2 = 1.0 - state.beta2 ** state.t
    for name, param in model.params().items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / correct1
        v_hat = state.v[name] / correct2
        param -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(param.dtype)
    return model, state


def train(corpus: EmbeddingSet, config: AeConfig) -> tuple[AeModel, TrainingLog]:
    """Seeded, deterministic training loop with a held-out validation split,
    per-epoch mini-batch shuffling, and patience-based early stopping; returns
    the parameters with the best validation MSE."""
    if corpus.count < 2:
        raise TooFewRows(f"need at least 2 rows to split, got {corpus.count}")
    if corpus.dim != config.input_dim:
        raise DimMismatch(f"corpus dim {corpus.dim} != input_dim {config.input_dim}")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(corpus.count)
    n_val = min(max(1, round(corpus.count * config.validation_fraction)), corpus.count - 1)
    val = corpus.data[perm[:n_val]]
    trn = corpus.data[perm[n_val:]]

    model = init_model(config)
    state = AdamState.for_model(model)
    log = TrainingLog()
    best_val = np.inf
    best_params = model.copy()
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(trn.shape[0])
        for start in range(0, trn.shape[0], config.batch_size):
            batch = trn[order[start : start + config.batch_size]]
            grads = backward(model, batch)
            model, state = adam_step(model, grads, state, config.learning_rate)

        train_mse = mse_loss(forward(model, trn)[1], trn)
        val_mse = mse_loss(forward(model, val)[1], val)
        log.rows.append((epoch, train_mse, val_mse))

        if val_mse < best_val:
            best_val = val_mse
            best_params = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best_params, log


def encode(model: AeModel, embeddings: EmbeddingSet) -> EmbeddingSet:
    """Latent vectors (dim = latent_dim); ids preserved in order."""
    if embeddings.count == 0:
        return EmbeddingSet(ids=[], data=np.zeros((0, 0), dtype=np.float32))
    if embeddings.dim != model.input_dim:
        raise DimMismatch(f"set dim {embeddings.dim} != input_dim {model.input_dim}")
    latent = _encode_arrays(model, embeddings.data)
    return EmbeddingSet(ids=list(embeddings.ids), data=latent)


def decode(model: AeModel, latents: EmbeddingSet) -> EmbeddingSet:
    if latents.count == 0:
        return EmbeddingSet(ids=[], data=np.zeros((0, 0), dtype=np.float32))
    if latents.dim != model.latent_dim:
        raise DimMismatch(f"set dim {latents.dim} != latent_dim {model.latent_dim}")
    recon = _decode_arrays(model, latents.data)
    return EmbeddingSet(ids=list(latents.ids), data=recon)


def reconstruct(model: AeModel, embeddings: EmbeddingSet) -> EmbeddingSet:
    """Full encoder -> decoder pass; identical floating-point path to
    decode(encode(set))."""
    return decode(model, encode(model, embeddings))


def save_model(model: AeModel, path: str | Path) -> None:
    head = MODEL_MAGIC + struct.pack(
        "<III", model.input_dim, model.hidden_dim, model.latent_dim
    )
    parts = [head]
    for name in PARAM_NAMES:
        parts.append(np.ascontiguousarray(getattr(model, name), dtype="<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_model(path: str | Path) -> AeModel:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) < 16 or raw[:4] != MODEL_MAGIC:
        raise CorruptRecord(f"{path} is not a VAE1 model file")
    inp, hid, lat = struct.unpack_from("<III", raw, 4)
    shapes = {
        "W1": (hid, inp),
        "b1": (hid,),
        "W2": (lat, hid),
        "b2": (lat,),
        "W3": (hid, lat),
        "b3": (hid,),
        "W4": (inp, hid),
        "b4": (inp,),
    }
    offset = 16
    arrays = {}
    for name in PARAM_NAMES:
        size = int(np.prod(shapes[name]))
        need = 4 * size
        if len(raw) < offset + need:
            raise CorruptRecord(f"truncated model file at parameter {name}")
        arrays[name] = (
            np.frombuffer(raw, dtype="<f4", count=size, offset=offset)
            .reshape(shapes[name])
            .copy()
        )
        offset += need
    if offset != len(raw):
        raise CorruptRecord(f"{len(raw) - offset} trailing bytes after parameters")
    return AeModel(**arrays)
