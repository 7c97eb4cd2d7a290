"""Pairwise comparator network with hand-derived gradients.

Architecture, operating on a concatenated embedding pair x = [e_a ‖ e_b]:

    z1 = x W1 + b1                      (input_dim -> hidden)
    h  = gamma * norm(z1) + beta        batch norm
    r  = relu(h)
    d  = dropout(r)                     inverted, survivors scaled 1/(1-p)
    y  = sigmoid(d W2 + b2)             (hidden -> n output dims)

Each output dim is the confidence that the second speaker of the pair is the
stronger one for that descriptor. Train mode normalizes with batch statistics
(biased variance) and reports updated running statistics through the cache;
infer mode uses frozen running statistics and no dropout. All math is float64
and every gradient is computed analytically, including the paths through the
batch mean and variance, so the whole loss is finite-difference checkable.

The loss is a masked binary cross-entropy: label entries are 1 (stronger), 0
(weaker, from reversed pairs), or -1 (unannotated, excluded). Per sample the
labeled dims are summed; the batch is averaged.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .catalog import build_catalog
from .errors import (
    CatalogMismatch,
    ConfigError,
    DegenerateBatch,
    DimensionMismatch,
    FormatError,
    NonFiniteLoss,
    NonFiniteValue,
    ShapeMismatch,
    StaleCache,
)

BN_EPS = 1e-5
LOSS_CLAMP = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

DEFAULT_HIDDEN = 128
# learning-rate defaults by the embedding file's encoder tag
LR_DEFAULT = 5e-5
LR_DEFAULT_FACODEC = 2.5e-5

MODE_TRAIN = "train"
MODE_INFER = "infer"


def default_learning_rate(encoder_tag: str) -> float:
    """5e-5 unless the embeddings came from a facodec-family encoder."""
    return LR_DEFAULT_FACODEC if "facodec" in encoder_tag.lower() else LR_DEFAULT


@dataclass
class DiffNetParams:
    """All learnable tensors plus batch-norm running statistics."""

    w1: np.ndarray  # (input_dim, hidden)
    b1: np.ndarray  # (hidden,)
    bn_gamma: np.ndarray  # (hidden,)
    bn_beta: np.ndarray  # (hidden,)
    bn_running_mean: np.ndarray  # (hidden,)
    bn_running_var: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, n_outputs)
    b2: np.ndarray  # (n_outputs,)
    catalog_fingerprint: str = ""
    encoder_tag: str = ""

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.w2.shape[1]

    def trainable(self) -> dict[str, np.ndarray]:
        return {
            "w1": self.w1,
            "b1": self.b1,
            "bn_gamma": self.bn_gamma,
            "bn_beta": self.bn_beta,
            "w2": self.w2,
            "b2": self.b2,
        }

    def validate(self) -> None:
        h = self.hidden_size
        shapes = {
            "b1": (h,),
            "bn_gamma": (h,),
            "bn_beta": (h,),
            "bn_running_mean": (h,),
            "bn_running_var": (h,),
            "w2": (h, self.n_outputs),
            "b2": (self.n_outputs,),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ShapeMismatch(f"param {name} has shape {got}, expected {want}")
        for name in list(shapes) + ["w1"]:
            if not np.isfinite(getattr(self, name)).all():
                raise NonFiniteValue(f"param {name} contains non-finite values")
        if (self.bn_running_var < 0).any():
            raise NonFiniteValue("bn_running_var has negative entries")


@dataclass
class DiffNetGrads:
    w1: np.ndarray
    b1: np.ndarray
    bn_gamma: np.ndarray
    bn_beta: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "w1": self.w1,
            "b1": self.b1,
            "bn_gamma": self.bn_gamma,
            "bn_beta": self.bn_beta,
            "w2": self.w2,
            "b2": self.b2,
        }


@dataclass
class ForwardCache:
    """Intermediates from a Train-mode forward, consumed by backward()."""

    mode: str
    x: np.ndarray
    z1: np.ndarray
    mu: np.ndarray
    inv_std: np.ndarray  # 1/sqrt(var + eps), biased batch var
    xhat: np.ndarray
    h: np.ndarray
    drop_mask: np.ndarray  # already scaled by 1/(1-p); ones when p=0
    d: np.ndarray
    y: np.ndarray
    new_running_mean: np.ndarray
    new_running_var: np.ndarray
    dropout_rate: float


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings. Defaults follow the reference recipe."""

    learning_rate: float = LR_DEFAULT
    batch_size: int = 16
    epochs: int = 10
    dropout_rate: float = 0.2
    bn_momentum: float = 0.1
    optimizer: str = "adam"  # or "sgd"
    rng_seed: int = 0
    hidden_size: int = DEFAULT_HIDDEN

    def validate(self) -> None:
        if not (self.learning_rate > 0 and np.isfinite(self.learning_rate)):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not 0.0 < self.bn_momentum <= 1.0:
            raise ConfigError(f"bn_momentum must be in (0, 1], got {self.bn_momentum}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.hidden_size < 1:
            raise ConfigError(f"hidden_size must be >= 1, got {self.hidden_size}")


@dataclass
class TrainLog:
    epoch_losses: list[float] = field(default_factory=list)
    dropped_batches: int = 0
    n_samples: int = 0


def init_params(
    input_dim: int, hidden_size: int, n_outputs: int, rng_seed: int
) -> DiffNetParams:
    """Fan-in-scaled uniform init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)).

    Biases and beta start at zero; gamma and running variance at one. The same
    seed always yields bit-identical parameters.
    """
    if min(input_dim, hidden_size, n_outputs) < 1:
        raise ConfigError(
            f"dims must be positive, got ({input_dim}, {hidden_size}, {n_outputs})"
        )
    rng = np.random.default_rng(rng_seed)
    bound1 = float(np.sqrt(6.0 / input_dim))
    bound2 = float(np.sqrt(6.0 / hidden_size))
    return DiffNetParams(
        w1=rng.uniform(-bound1, bound1, size=(input_dim, hidden_size)),
        b1=np.zeros(hidden_size),
        bn_gamma=np.ones(hidden_size),
        bn_beta=np.zeros(hidden_size),
        bn_running_mean=np.zeros(hidden_size),
        bn_running_var=np.ones(hidden_size),
        w2=rng.uniform(-bound2, bound2, size=(hidden_size, n_outputs)),
        b2=np.zeros(n_outputs),
        catalog_fingerprint=build_catalog().fingerprint(),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # stable two-branch form, then clamp into the open interval (0, 1)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def forward(
    params: DiffNetParams,
    batch: np.ndarray,
    mode: str = MODE_INFER,
    dropout_seed: int = 0,
    dropout_rate: float = 0.2,
    bn_momentum: float = 0.1,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a (B, input_dim) batch.

    Train mode requires B >= 2 (batch statistics), applies dropout with a
    mask that is a pure function of (dropout_seed, batch shape), and returns
    updated running statistics in the cache without mutating params. Infer
    mode is deterministic, uses running statistics, and its cache cannot be
    used for backward().
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DimensionMismatch(
            f"batch shape {x.shape} incompatible with input_dim={params.input_dim}"
        )
    if mode not in (MODE_TRAIN, MODE_INFER):
        raise ConfigError(f"mode must be {MODE_TRAIN!r} or {MODE_INFER!r}, got {mode!r}")
    n = x.shape[0]

    z1 = x @ params.w1 + params.b1
    if mode == MODE_TRAIN:
        if n < 2:
            raise DegenerateBatch(f"train-mode forward needs batch >= 2, got {n}")
        mu = z1.mean(axis=0)
        var = z1.var(axis=0)  # biased
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (z1 - mu) * inv_std
        new_rm = (1.0 - bn_momentum) * params.bn_running_mean + bn_momentum * mu
        # running update uses the unbiased estimate
        new_rv = (1.0 - bn_momentum) * params.bn_running_var + bn_momentum * var * n / (n - 1)
    else:
        mu = params.bn_running_mean
        inv_std = 1.0 / np.sqrt(params.bn_running_var + BN_EPS)
        xhat = (z1 - mu) * inv_std
        new_rm = params.bn_running_mean
        new_rv = params.bn_running_var

    h = params.bn_gamma * xhat + params.bn_beta
    r = np.maximum(h, 0.0)

    if mode == MODE_TRAIN and dropout_rate > 0.0:
        keep = np.random.default_rng(dropout_seed).random(r.shape) >= dropout_rate
        drop_mask = keep.astype(np.float64) / (1.0 - dropout_rate)
    else:
        drop_mask = np.ones_like(r)
    d = r * drop_mask

    y = _sigmoid(d @ params.w2 + params.b2)
    cache = ForwardCache(
        mode=mode,
        x=x,
        z1=z1,
        mu=mu,
        inv_std=inv_std,
        xhat=xhat,
        h=h,
        drop_mask=drop_mask,
        d=d,
        y=y,
        new_running_mean=new_rm,
        new_running_var=new_rv,
        dropout_rate=dropout_rate if mode == MODE_TRAIN else 0.0,
    )
    return y, cache


def masked_bce_loss(
    labels: np.ndarray, predictions: np.ndarray
) -> tuple[float, np.ndarray]:
    """Masked binary cross-entropy and its gradient w.r.t. the predictions.

    labels holds -1 (excluded), 0, or 1 per output dim; predictions are the
    sigmoid outputs. Labeled terms are summed within a sample and averaged
    over the batch. Predictions are clamped to [1e-7, 1 - 1e-7] before the
    logs, and the returned gradient differentiates the clamped expression, so
    masked dims get an exact 0.0 gradient.
    """
    lab = np.asarray(labels, dtype=np.float64)
    pred = np.asarray(predictions, dtype=np.float64)
    if lab.shape != pred.shape or lab.ndim != 2:
        raise ShapeMismatch(f"labels {lab.shape} vs predictions {pred.shape}")
    valid = np.isin(lab, (-1.0, 0.0, 1.0))
    if not valid.all():
        raise ShapeMismatch("labels must contain only -1, 0, or 1")
    n = lab.shape[0]
    mask = lab >= 0.0
    yc = np.clip(pred, LOSS_CLAMP, 1.0 - LOSS_CLAMP)
    l = np.where(mask, lab, 0.0)
    per_term = -(l * np.log(yc) + (1.0 - l) * np.log(1.0 - yc))
    loss = float(np.where(mask, per_term, 0.0).sum() / n)
    grad = np.where(mask, (-l / yc + (1.0 - l) / (1.0 - yc)) / n, 0.0)
    return loss, grad


def backward(
    params: DiffNetParams, cache: ForwardCache, grad_output: np.ndarray
) -> DiffNetGrads:
    """Analytic gradients of the loss w.r.t. every trainable tensor.

    grad_output is dL/dy from masked_bce_loss. The batch-norm path
    differentiates through the batch mean and biased variance, so these
    gradients match central finite differences of the full train-mode loss.
    """
    if cache.mode != MODE_TRAIN:
        raise StaleCache("backward needs a cache from a Train-mode forward")
    if cache.x.shape[1] != params.input_dim or cache.d.shape[1] != params.hidden_size:
        raise StaleCache(
            f"cache built for input_dim={cache.x.shape[1]}, hidden={cache.d.shape[1]}; "
            f"params have input_dim={params.input_dim}, hidden={params.hidden_size}"
        )
    gy = np.asarray(grad_output, dtype=np.float64)
    if gy.shape != cache.y.shape:
        raise ShapeMismatch(f"grad_output {gy.shape} vs predictions {cache.y.shape}")
    n = cache.x.shape[0]

    gz2 = gy * cache.y * (1.0 - cache.y)  # sigmoid
    gw2 = cache.d.T @ gz2
    gb2 = gz2.sum(axis=0)
    gd = gz2 @ params.w2.T

    gr = gd * cache.drop_mask
    gh = gr * (cache.h > 0.0)

    ggamma = (gh * cache.xhat).sum(axis=0)
    gbeta = gh.sum(axis=0)

    gxhat = gh * params.bn_gamma
    zc = cache.z1 - cache.mu
    gvar = (gxhat * zc).sum(axis=0) * (-0.5) * cache.inv_std**3
    gmu = -(gxhat.sum(axis=0)) * cache.inv_std + gvar * (-2.0 / n) * zc.sum(axis=0)
    gz1 = gxhat * cache.inv_std + gvar * (2.0 / n) * zc + gmu / n

    gw1 = cache.x.T @ gz1
    gb1 = gz1.sum(axis=0)
    return DiffNetGrads(w1=gw1, b1=gb1, bn_gamma=ggamma, bn_beta=gbeta, w2=gw2, b2=gb2)


class _Optimizer:
    def __init__(self, config: TrainConfig, params: DiffNetParams):
        self.lr = config.learning_rate
        self.kind = config.optimizer
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.trainable().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.trainable().items()}

    def step(self, params: DiffNetParams, grads: DiffNetGrads) -> None:
        gd = grads.as_dict()
        if self.kind == "sgd":
            for k, p in params.trainable().items():
                p -= self.lr * gd[k]
            return
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        for k, p in params.trainable().items():
            g = gd[k]
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + ADAM_EPS)


def train_on_arrays(
    config: TrainConfig,
    inputs: "np.ndarray | _BatchSource",
    labels: np.ndarray,
    n_outputs: int | None = None,
    encoder_tag: str = "",
) -> tuple[DiffNetParams, TrainLog]:
    """Core loop: shuffled epochs, minibatches, Adam/SGD, logged mean loss.

    inputs is either a dense (S, input_dim) float array or a _BatchSource
    that materializes rows on demand; labels is (S, n_outputs) over {-1,0,1}.
    Trailing batches smaller than 2 are dropped (counted in the log). A
    non-finite loss aborts with epoch/batch context.
    """
    config.validate()
    n_samples = len(labels)
    if n_samples < 2:
        raise DegenerateBatch(f"training needs at least 2 samples, got {n_samples}")
    labels = np.asarray(labels)
    n_out = n_outputs if n_outputs is not None else labels.shape[1]
    input_dim = inputs.shape[1]

    params = init_params(input_dim, config.hidden_size, n_out, config.rng_seed)
    params.encoder_tag = encoder_tag
    opt = _Optimizer(config, params)
    rng = np.random.default_rng(np.random.SeedSequence([config.rng_seed, 0x7261696E]))
    log = TrainLog(n_samples=n_samples)

    for epoch in range(config.epochs):
        order = rng.permutation(n_samples)
        batch_losses = []
        for start in range(0, n_samples, config.batch_size):
            idx = order[start : start + config.batch_size]
            if idx.size < 2:
                log.dropped_batches += 1
                continue
            x = inputs[idx]
            lab = labels[idx]
            seed = int(rng.integers(0, 2**63 - 1))
            y, cache = forward(
                params,
                x,
                mode=MODE_TRAIN,
                dropout_seed=seed,
                dropout_rate=config.dropout_rate,
                bn_momentum=config.bn_momentum,
            )
            loss, gy = masked_bce_loss(lab, y)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became non-finite at epoch {epoch + 1}, batch {start // config.batch_size + 1}"
                )
            grads = backward(params, cache, gy)
            opt.step(params, grads)
            params.bn_running_mean = cache.new_running_mean
            params.bn_running_var = cache.new_running_var
            batch_losses.append(loss)
        if not batch_losses:
            raise DegenerateBatch(f"epoch {epoch + 1} produced no usable batches")
        log.epoch_losses.append(float(np.mean(batch_losses)))
    return params, log


class _BatchSource:
    """Gathers pair rows [e_a ‖ e_b] from an utterance matrix on demand."""

    def __init__(self, matrix: np.ndarray, idx_a: np.ndarray, idx_b: np.ndarray):
        self.matrix = matrix
        self.idx_a = idx_a
        self.idx_b = idx_b
        self.shape = (len(idx_a), 2 * matrix.shape[1])

    def __getitem__(self, rows: np.ndarray) -> np.ndarray:
        return np.hstack([self.matrix[self.idx_a[rows]], self.matrix[self.idx_b[rows]]])


def train(config, samples, embeddings, n_outputs: int | None = None):
    """Train a comparator from TrainingSamples against an EmbeddingSet.

    Returns (params, TrainLog). The network's input width is twice the
    embedding dim; the output width defaults to the label length (the
    catalog's 34 dims).
    """
    if not samples:
        raise DegenerateBatch("no training samples")
    keys = sorted({s.utt_a for s in samples} | {s.utt_b for s in samples})
    row_of = {k: i for i, k in enumerate(keys)}
    matrix = np.stack([embeddings.get(*k).vector for k in keys])
    idx_a = np.fromiter((row_of[s.utt_a] for s in samples), dtype=np.int64, count=len(samples))
    idx_b = np.fromiter((row_of[s.utt_b] for s in samples), dtype=np.int64, count=len(samples))
    labels = np.stack([s.label.values for s in samples]).astype(np.float64)
    source = _BatchSource(matrix, idx_a, idx_b)
    return train_on_arrays(
        config, source, labels, n_outputs=n_outputs, encoder_tag=embeddings.encoder_tag
    )


def predict_confidence(params: DiffNetParams, emb_a, emb_b, descriptor_dim: int) -> float:
    """Confidence that emb_b's speaker is stronger than emb_a's in one descriptor."""
    from .embeddings import pair_embedding

    if not 0 <= descriptor_dim < params.n_outputs:
        raise DimensionMismatch(
            f"descriptor dim {descriptor_dim} out of range 0..{params.n_outputs - 1}"
        )
    x = pair_embedding(emb_a, emb_b)[np.newaxis, :]
    y, _ = forward(params, x, mode=MODE_INFER)
    return float(y[0, descriptor_dim])


def score_trials(params, trials, embeddings, chunk: int = 4096) -> np.ndarray:
    """Vectorized infer-mode confidences for a list of Trials."""
    keys = sorted({t.utt_a for t in trials} | {t.utt_b for t in trials})
    row_of = {k: i for i, k in enumerate(keys)}
    matrix = np.stack([embeddings.get(*k).vector for k in keys]) if keys else np.zeros((0, 1))
    scores = np.empty(len(trials), dtype=np.float64)
    for start in range(0, len(trials), chunk):
        part = trials[start : start + chunk]
        x = np.hstack(
            [
                matrix[[row_of[t.utt_a] for t in part]],
                matrix[[row_of[t.utt_b] for t in part]],
            ]
        )
        y, _ = forward(params, x, mode=MODE_INFER)
        scores[start : start + len(part)] = y[np.arange(len(part)), [t.descriptor_dim for t in part]]
    return scores


_CKPT_HEADER = "#vtad-ckpt v1"
_PARAM_ORDER = (
    "w1",
    "b1",
    "bn_gamma",
    "bn_beta",
    "bn_running_mean",
    "bn_running_var",
    "w2",
    "b2",
)


def save_checkpoint(params: DiffNetParams, path: str, train_config: TrainConfig | None = None) -> None:
    """Text checkpoint with full float64 round-trip precision (repr per value)."""
    params.validate()
    lines = [
        _CKPT_HEADER,
        f"input_dim={params.input_dim}",
        f"hidden_size={params.hidden_size}",
        f"n_outputs={params.n_outputs}",
        f"catalog_fingerprint={params.catalog_fingerprint}",
        f"encoder={params.encoder_tag}",
    ]
    if train_config is not None:
        echo = (
            f"learning_rate={train_config.learning_rate!r};batch_size={train_config.batch_size};"
            f"epochs={train_config.epochs};dropout_rate={train_config.dropout_rate!r};"
            f"bn_momentum={train_config.bn_momentum!r};optimizer={train_config.optimizer};"
            f"rng_seed={train_config.rng_seed};hidden_size={train_config.hidden_size}"
        )
        lines.append(f"train_config={echo}")
    for name in _PARAM_ORDER:
        arr = np.atleast_2d(getattr(params, name))
        lines.append(f"#param {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("#end")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> DiffNetParams:
    """Parse and validate a checkpoint; bit-exact inverse of save_checkpoint.

    Raises FormatError on structural problems and CatalogMismatch when the
    stored catalog fingerprint differs from the current canonical catalog.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0] != _CKPT_HEADER:
        raise FormatError(f"{path}:1: expected header {_CKPT_HEADER!r}")
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("#param "):
        if "=" in lines[i]:
            k, v = lines[i].split("=", 1)
            meta[k] = v
        i += 1
    for key in ("input_dim", "hidden_size", "n_outputs", "catalog_fingerprint"):
        if key not in meta:
            raise FormatError(f"{path}: missing {key} in checkpoint header")
    arrays: dict[str, np.ndarray] = {}
    while i < len(lines) and lines[i] != "#end":
        m = re.match(r"^#param (\w+) (\d+) (\d+)$", lines[i])
        if not m:
            raise FormatError(f"{path}:{i + 1}: expected '#param <name> <rows> <cols>'")
        name, rows, cols = m.group(1), int(m.group(2)), int(m.group(3))
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise FormatError(f"{path}: truncated param block {name}")
        try:
            arr = np.array([[float(v) for v in row.split(" ")] for row in block])
        except ValueError:
            raise FormatError(f"{path}: unparsable float in param {name}") from None
        if arr.shape != (rows, cols):
            raise FormatError(f"{path}: param {name} shaped {arr.shape}, declared ({rows}, {cols})")
        arrays[name] = arr
        i += 1 + rows
    missing = [n for n in _PARAM_ORDER if n not in arrays]
    if missing:
        raise FormatError(f"{path}: missing param blocks {missing}")

    current = build_catalog().fingerprint()
    if meta["catalog_fingerprint"] != current:
        raise CatalogMismatch(
            f"{path}: checkpoint catalog fingerprint {meta['catalog_fingerprint'][:12]}... "
            f"does not match this build's catalog {current[:12]}..."
        )
    params = DiffNetParams(
        w1=arrays["w1"],
        b1=arrays["b1"][0],
        bn_gamma=arrays["bn_gamma"][0],
        bn_beta=arrays["bn_beta"][0],
        bn_running_mean=arrays["bn_running_mean"][0],
        bn_running_var=arrays["bn_running_var"][0],
        w2=arrays["w2"],
        b2=arrays["b2"][0],
        catalog_fingerprint=meta["catalog_fingerprint"],
        encoder_tag=meta.get("encoder", ""),
    )
    declared = (int(meta["input_dim"]), int(meta["hidden_size"]), int(meta["n_outputs"]))
    actual = (params.input_dim, params.hidden_size, params.n_outputs)
    if declared != actual:
        raise FormatError(f"{path}: header dims {declared} disagree with arrays {actual}")
    params.validate()
    return params
