"""One-hidden-layer answer scorer and its training protocol.

The scorer maps a joint feature vector (concatenated L2-normalized
image / question / answer segments, depending on the ablation mode) to
a probability that the answer is correct:

    f(g) = sigmoid(U . relu(W g) + b)

Training minimizes the binary logistic loss over (target=1, decoy=0)
examples with plain SGD plus momentum and a stepped learning-rate
schedule. Each sampled triplet contributes its target and exactly three
decoys, so every mini-batch is balanced 1:3 positive to negative. When
an item's decoys come from several sources, one source is picked per
draw before sampling the three.

Everything runs in float64 and a single deterministic RNG stream, so a
fixed seed reproduces a training run bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .corpus import FeatureStore
from .decoygen import CandidateSet
from .text import EmbeddingTable, embed_avg, normalize, normalized_text

MODES = ("A", "QA", "IA", "IQA")
METRICS = ("plain", "vqa-clipped")

_N_TRAIN_DECOYS = 3


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass(eq=False)
class MlpParams:
    """Scorer weights. W is (hidden_dim, input_dim); U is (hidden_dim,)."""

    W: np.ndarray
    U: np.ndarray
    b: float
    mode: str

    @property
    def hidden_dim(self) -> int:
        return self.W.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "MlpParams":
        return MlpParams(self.W.copy(), self.U.copy(), float(self.b), self.mode)

    def check_finite(self) -> None:
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.U))
                and np.isfinite(self.b)):
            raise DivergenceError("non-finite parameter values")


@dataclass
class TrainConfig:
    """Optimization settings; the defaults mirror the full-scale protocol,
    with hidden_dim kept desk-sized (raise it via config when needed)."""

    mode: str = "IQA"
    lr0: float = 0.01
    momentum: float = 0.9
    batch_triplets: int = 100
    step_size: int | None = None  # mini-batches between /10 LR drops
    max_iters: int = 10_000
    seed: int = 0
    dropout_rate: float = 0.5
    hidden_dim: int = 256
    init: MlpParams | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be positive, got {self.lr0}")
        if self.batch_triplets < 1:
            raise ValueError("batch_triplets must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(
                f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not 0 <= self.max_iters <= 600_000:
            raise ValueError("max_iters must be in [0, 600000]")
        if self.step_size is not None and self.step_size < 1:
            raise ValueError("step_size must be >= 1")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")


@dataclass
class JointFeature:
    """Concatenated per-modality segments, each L2-normalized (or zero)."""

    values: np.ndarray
    layout: list[tuple[str, int]]


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return np.zeros_like(vec, dtype=np.float64)
    return np.asarray(vec, dtype=np.float64) / norm


def _segments_for_mode(mode: str) -> list[str]:
    return {"A": ["answer"], "QA": ["question", "answer"],
            "IA": ["image", "answer"],
            "IQA": ["image", "question", "answer"]}[mode]


def input_dim_for(mode: str, d_img: int | None, d_txt: int) -> int:
    dims = {"image": d_img, "question": d_txt, "answer": d_txt}
    total = 0
    for seg in _segments_for_mode(mode):
        if dims[seg] is None:
            raise ValueError(f"mode {mode} needs image features")
        total += dims[seg]
    return total


def build_features(item: CandidateSet, candidate_index: int, mode: str,
                   features: FeatureStore | None,
                   table: EmbeddingTable) -> JointFeature:
    """Joint feature of one candidate under the given ablation mode."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 <= candidate_index < len(item.candidates):
        raise IndexError(
            f"candidate index {candidate_index} out of range for "
            f"{len(item.candidates)} candidates")
    parts = []
    layout = []
    for seg in _segments_for_mode(mode):
        if seg == "image":
            if features is None:
                raise ValueError(f"mode {mode} needs image features")
            vec = _unit(features.get(item.image_id))
        elif seg == "question":
            vec = _unit(embed_avg(normalize(item.question), table).values)
        else:
            text = item.candidates[candidate_index]
            vec = _unit(embed_avg(normalize(text), table).values)
        parts.append(vec)
        layout.append((seg, len(vec)))
    return JointFeature(np.concatenate(parts), layout)


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def score(params: MlpParams, g) -> float:
    """Scorer output in (0, 1) for one joint feature (dropout inactive)."""
    values = g.values if isinstance(g, JointFeature) else np.asarray(g)
    if values.shape != (params.input_dim,):
        raise ValueError(f"feature dimension {values.shape} does not match "
                         f"model input dimension {params.input_dim}")
    h = np.maximum(0.0, params.W @ values)
    z = params.U @ h + params.b
    return float(_sigmoid(np.array([z]))[0])


def init_params(input_dim: int, hidden_dim: int, mode: str,
                seed: int = 0) -> MlpParams:
    """Seeded uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng([seed, 0xD1])
    w_limit = np.sqrt(6.0 / (input_dim + hidden_dim))
    u_limit = np.sqrt(6.0 / (hidden_dim + 1))
    return MlpParams(
        W=rng.uniform(-w_limit, w_limit, size=(hidden_dim, input_dim)),
        U=rng.uniform(-u_limit, u_limit, size=hidden_dim),
        b=0.0,
        mode=mode,
    )


def loss_and_grads(params: MlpParams, X: np.ndarray, y: np.ndarray,
                   dropout_mask: np.ndarray | None = None,
                   keep_prob: float = 1.0):
    """Mean binary logistic loss over the batch and its parameter grads."""
    H_pre = X @ params.W.T
    H = np.maximum(0.0, H_pre)
    if dropout_mask is not None:
        H = H * dropout_mask / keep_prob
    z = H @ params.U + params.b
    # softplus(z) - y*z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (_sigmoid(z) - y) / len(y)
    dU = H.T @ dz
    db = float(np.sum(dz))
    dH = np.outer(dz, params.U)
    if dropout_mask is not None:
        dH = dH * dropout_mask / keep_prob
    dH *= H_pre > 0
    dW = dH.T @ X
    return loss, dW, dU, db


def _encode_items(items, mode, features, table):
    """Precompute per-item candidate feature matrices for fast batching."""
    encoded = []
    for item in items:
        X = np.stack([
            build_features(item, i, mode, features, table).values
            for i in range(len(item.candidates))
        ])
        decoy_idx = [i for i in range(len(item.candidates))
                     if i != item.target_index]
        by_source: dict[str, list[int]] = {}
        for i in decoy_idx:
            by_source.setdefault(item.provenance[i], []).append(i)
        sources = sorted(s for s in by_source if s in ("orig", "iou", "qou"))
        encoded.append({
            "X": X,
            "target_index": item.target_index,
            "decoys": decoy_idx,
            "sources": sources,
            "by_source": by_source,
        })
    return encoded


def _sample_triplet_rows(enc: dict, rng: np.random.Generator) -> list[int]:
    """Target row plus three decoy rows; decoys come from one uniformly
    chosen source when several are present (fallback fills count toward
    whichever source was chosen)."""
    pool = enc["decoys"]
    if len(enc["sources"]) > 1:
        src = enc["sources"][rng.integers(len(enc["sources"]))]
        chosen = enc["by_source"].get(src, []) + enc["by_source"].get("fallback", [])
        if len(chosen) >= _N_TRAIN_DECOYS:
            pool = chosen
    picks = rng.choice(len(pool), size=_N_TRAIN_DECOYS, replace=False)
    return [enc["target_index"]] + [pool[i] for i in picks]


def train(items: list[CandidateSet], cfg: TrainConfig,
          features: FeatureStore | None = None,
          table: EmbeddingTable | None = None,
          val_items: list[CandidateSet] | None = None,
          log_every: int = 200):
    """SGD training of the scorer; returns (params, training log).

    Every item must supply at least three decoys. The log holds one
    entry per log interval with the mean loss since the previous entry
    and, when val_items is given, the plain validation accuracy.
    """
    if table is None:
        raise ValueError("an embedding table is required")
    for item in items:
        if len(item.candidates) - 1 < _N_TRAIN_DECOYS:
            raise ValueError(
                f"item {item.triplet_id!r} has fewer than "
                f"{_N_TRAIN_DECOYS} decoys")
    encoded = _encode_items(items, cfg.mode, features, table)
    input_dim = encoded[0]["X"].shape[1]
    if cfg.init is not None:
        if cfg.init.input_dim != input_dim or cfg.init.mode != cfg.mode:
            raise ValueError(
                f"warm-start params ({cfg.init.mode}, input {cfg.init.input_dim}) "
                f"do not match this run ({cfg.mode}, input {input_dim})")
        params = cfg.init.copy()
    else:
        params = init_params(input_dim, cfg.hidden_dim, cfg.mode, cfg.seed)

    rng = np.random.default_rng([cfg.seed, 0x7A])
    vW = np.zeros_like(params.W)
    vU = np.zeros_like(params.U)
    vb = 0.0
    lr = cfg.lr0
    log: list[dict] = []
    loss_acc, loss_n = 0.0, 0

    def emit(iteration):
        entry = {"iter": iteration, "lr": lr,
                 "loss": loss_acc / loss_n if loss_n else None}
        if val_items is not None:
            entry["val_accuracy"] = evaluate(params, val_items, cfg.mode,
                                             features=features, table=table)
        log.append(entry)

    for it in range(cfg.max_iters):
        idx = rng.integers(0, len(encoded), size=cfg.batch_triplets)
        rows = []
        for j in idx:
            enc = encoded[j]
            rows.append(enc["X"][_sample_triplet_rows(enc, rng)])
        X = np.concatenate(rows)
        y = np.zeros(len(X))
        y[::1 + _N_TRAIN_DECOYS] = 1.0
        if cfg.dropout_rate > 0.0:
            keep = 1.0 - cfg.dropout_rate
            mask = rng.random((len(X), params.hidden_dim)) < keep
        else:
            keep, mask = 1.0, None
        loss, dW, dU, db = loss_and_grads(params, X, y, mask, keep)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"loss became non-finite at iteration {it} (lr={lr})")
        vW = cfg.momentum * vW + lr * dW
        vU = cfg.momentum * vU + lr * dU
        vb = cfg.momentum * vb + lr * db
        params.W -= vW
        params.U -= vU
        params.b -= vb
        loss_acc += loss
        loss_n += 1
        if cfg.step_size is not None and (it + 1) % cfg.step_size == 0:
            lr /= 10.0
        if (it + 1) % log_every == 0 or it + 1 == cfg.max_iters:
            emit(it + 1)
            loss_acc, loss_n = 0.0, 0
    params.check_finite()
    return params, log


def candidate_scores(params: MlpParams, item: CandidateSet, mode: str,
                     features: FeatureStore | None,
                     table: EmbeddingTable) -> np.ndarray:
    return np.array([
        score(params, build_features(item, i, mode, features, table))
        for i in range(len(item.candidates))
    ])


def predict(params: MlpParams, item: CandidateSet, mode: str,
            features: FeatureStore | None = None,
            table: EmbeddingTable | None = None) -> int:
    """Index of the highest-scoring candidate; ties take the lowest index."""
    scores = candidate_scores(params, item, mode, features, table)
    return int(np.argmax(scores))


def evaluate(params: MlpParams, items: list[CandidateSet], mode: str,
             metric: str = "plain", features: FeatureStore | None = None,
             table: EmbeddingTable | None = None) -> float:
    """Accuracy of the scorer's picks.

    plain: fraction of items whose pick is the target. vqa-clipped:
    mean over items of min(matches/3, 1), where matches counts the
    item's human answers equal (normalized) to the picked candidate.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if not items:
        return 0.0
    total = 0.0
    for item in items:
        pick = predict(params, item, mode, features, table)
        if metric == "plain":
            total += pick == item.target_index
        else:
            if item.human_answers is None:
                raise ValueError(
                    f"item {item.triplet_id!r} has no human_answers; "
                    "the vqa-clipped metric requires them")
            picked_norm = normalized_text(item.candidates[pick])
            matches = sum(normalized_text(h) == picked_norm
                          for h in item.human_answers)
            total += min(matches / 3.0, 1.0)
    return total / len(items)


def grad_check(params: MlpParams, batch, epsilon: float = 1e-5,
               n_coords: int = 30, seed: int = 0,
               gradient_scale: float = 1.0) -> float:
    """Max relative error between analytic and central-difference grads
    on a random coordinate subsample (dropout disabled, float64).

    gradient_scale multiplies the analytic gradients before comparison;
    it exists as a negative-control hook (scale 2 must report ~1).
    """
    X, y = batch
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, dW, dU, db = loss_and_grads(params, X, y)
    dW = dW * gradient_scale
    dU = dU * gradient_scale
    db = db * gradient_scale

    def loss_at(p):
        return loss_and_grads(p, X, y)[0]

    rng = np.random.default_rng([seed, 0x9C])
    max_err = 0.0

    def check(analytic, bump):
        nonlocal max_err
        plus = params.copy()
        minus = params.copy()
        bump(plus, epsilon)
        bump(minus, -epsilon)
        numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * epsilon)
        err = abs(analytic - numeric) / max(abs(numeric), 1e-5)
        max_err = max(max_err, err)

    n_w = min(n_coords, params.W.size)
    flat = rng.choice(params.W.size, size=n_w, replace=False)
    for f in flat:
        i, j = divmod(int(f), params.input_dim)
        check(dW[i, j], lambda p, e, i=i, j=j: p.W.__setitem__((i, j),
                                                               p.W[i, j] + e))
    n_u = min(n_coords, params.U.size)
    for i in rng.choice(params.U.size, size=n_u, replace=False):
        i = int(i)
        check(dU[i], lambda p, e, i=i: p.U.__setitem__(i, p.U[i] + e))

    def bump_b(p, e):
        p.b += e
    check(db, bump_b)
    return max_err


_CKPT_MAGIC = b"DFMC"
_CKPT_VERSION = 1


def save_checkpoint(params: MlpParams, path) -> None:
    """Versioned binary checkpoint: header (mode, dims) + float64 LE
    W (row-major), U, b."""
    mode_raw = params.mode.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", _CKPT_VERSION))
        f.write(struct.pack("<I", len(mode_raw)))
        f.write(mode_raw)
        f.write(struct.pack("<II", params.hidden_dim, params.input_dim))
        f.write(np.ascontiguousarray(params.W, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(params.U, dtype="<f8").tobytes())
        f.write(struct.pack("<d", params.b))


def load_checkpoint(path) -> MlpParams:
    with open(path, "rb") as f:
        if f.read(4) != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        (version,) = struct.unpack("<I", f.read(4))
        if version != _CKPT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (mode_len,) = struct.unpack("<I", f.read(4))
        mode = f.read(mode_len).decode("utf-8")
        hidden_dim, input_dim = struct.unpack("<II", f.read(8))
        W = np.frombuffer(f.read(8 * hidden_dim * input_dim),
                          dtype="<f8").reshape(hidden_dim, input_dim).copy()
        U = np.frombuffer(f.read(8 * hidden_dim), dtype="<f8").copy()
        (b,) = struct.unpack("<d", f.read(8))
    if mode not in MODES:
        raise ValueError(f"{path}: unknown mode {mode!r} in checkpoint")
    return MlpParams(W=W, U=U, b=b, mode=mode)


def write_training_log(log: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry, ensure_ascii=False,
                               separators=(",", ":")) + "\n")
