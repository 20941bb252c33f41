"""Model assembly, the training loop, optimizers, and model files.

Three architecture variants share the embedding and dense softmax head:

* ``cnn-lstm`` — embedding -> convolution -> (no pooling) -> LSTM -> head;
* ``cnn``      — embedding -> convolution -> mean over positions -> head;
* ``lstm``     — embedding fed straight into the LSTM -> head.

Training is plain mini-batch gradient descent (SGD or Adam) over the mean
cross-entropy of each batch, with a seeded shuffle per epoch and one
history record per epoch computed over the full train and validation
sets.  Everything is deterministic: data, configs and seeds fix every
parameter, every history record, and every prediction bitwise.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor_core as tc
from .layers import (
    ConvLayer,
    DenseSoftmax,
    EmbeddingLayer,
    LstmLayer,
    cross_entropy,
    cross_entropy_grad,
)
from .preprocess import (
    EncodedCorpus,
    PipelineConfig,
    StopWordList,
    TokenSequence,
    Vocabulary,
    encode_and_pad,
)

__all__ = [
    "VARIANTS",
    "InvalidConfig",
    "NonFiniteLoss",
    "FormatVersionMismatch",
    "CorruptFile",
    "ModelConfig",
    "TrainConfig",
    "EpochRecord",
    "EpochHistory",
    "Model",
    "build_model",
    "sgd_step",
    "AdamState",
    "adam_step",
    "train",
    "EvalResult",
    "evaluate",
    "predict_text",
    "save_model",
    "load_model",
]

VARIANTS = ("cnn-lstm", "cnn", "lstm")

MAGIC = b"SNET"
FORMAT_VERSION = 1


class InvalidConfig(ValueError):
    pass


class NonFiniteLoss(ArithmeticError):
    """Training diverged: a batch produced a NaN/inf loss."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class FormatVersionMismatch(ValueError):
    pass


class CorruptFile(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; all are configuration, not constants."""

    variant: str = "cnn-lstm"
    seq_len: int = 40
    embed_dim: int = 64
    window: int = 3
    filters: int = 64
    hidden: int = 64
    activation: str = "tanh"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"variant must be one of {VARIANTS}: {self.variant!r}")
        for name in ("seq_len", "embed_dim", "window", "filters", "hidden"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.window > self.seq_len:
            raise InvalidConfig(
                f"window {self.window} exceeds sequence length {self.seq_len}"
            )
        if self.activation not in ("tanh", "sigmoid"):
            raise InvalidConfig(f"activation must be tanh or sigmoid: {self.activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings.

    epochs=0 is allowed and means "initialize only": useful for comparing
    a trained run against its starting parameters.
    """

    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd: {self.optimizer!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class EpochHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
        for r in self.records:
            lines.append(
                f"{r.epoch},{r.train_loss!r},{r.train_accuracy!r},"
                f"{r.val_loss!r},{r.val_accuracy!r}"
            )
        return "\n".join(lines) + "\n"


class Model:
    """A variant's layer stack plus the vocabulary it was encoded with."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        embedding: EmbeddingLayer,
        conv: ConvLayer | None,
        lstm: LstmLayer | None,
        head: DenseSoftmax,
        pipeline: PipelineConfig | None = None,
    ):
        self.config = config
        self.vocab = vocab
        self.embedding = embedding
        self.conv = conv
        self.lstm = lstm
        self.head = head
        self.pipeline = pipeline
        self.history = EpochHistory()

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed by stable names (serialization order)."""
        params: dict[str, np.ndarray] = {"embedding.table": self.embedding.table}
        if self.conv is not None:
            params["conv.filters"] = self.conv.filters
            params["conv.bias"] = self.conv.bias
        if self.lstm is not None:
            for gate in LstmLayer.GATES:
                params[f"lstm.w_{gate}"] = self.lstm.weights[gate]
            for gate in LstmLayer.GATES:
                params[f"lstm.b_{gate}"] = self.lstm.biases[gate]
        params["head.weights"] = self.head.weights
        params["head.bias"] = self.head.bias
        return params

    def parameter_count(self) -> int:
        return sum(arr.size for arr in self.parameters().values())

    def _ids(self, seq) -> np.ndarray:
        ids = seq.ids if isinstance(seq, TokenSequence) else np.asarray(seq)
        if len(ids) != self.config.seq_len:
            raise InvalidConfig(
                f"sequence length {len(ids)} != configured {self.config.seq_len}"
            )
        return ids

    def forward(self, seq) -> np.ndarray:
        """Class probabilities for one encoded sequence."""
        ids = self._ids(seq)
        sentence = self.embedding.forward(ids)
        if self.config.variant == "cnn-lstm":
            feats = self.conv.forward(sentence)
            hidden = self.lstm.forward(feats)
        elif self.config.variant == "cnn":
            feats = self.conv.forward(sentence)
            hidden = feats.mean(axis=0)
            self._pool_steps = feats.shape[0]
        else:
            hidden = self.lstm.forward(sentence)
        return self.head.forward(hidden)

    def forward_backward(self, seq, label: int):
        """Loss and gradients (same keys as parameters()) for one example."""
        probs = self.forward(seq)
        loss = cross_entropy(probs, label)
        head_grads, d_hidden = self.head.backward(cross_entropy_grad(probs, label))
        grads = {"head.weights": head_grads["weights"], "head.bias": head_grads["bias"]}
        if self.config.variant == "cnn-lstm":
            lstm_grads, d_feats = self.lstm.backward(d_hidden)
            conv_grads, d_sentence = self.conv.backward(d_feats)
        elif self.config.variant == "cnn":
            steps = self._pool_steps
            d_feats = np.repeat(d_hidden[None, :] / steps, steps, axis=0)
            conv_grads, d_sentence = self.conv.backward(d_feats)
            lstm_grads = None
        else:
            lstm_grads, d_sentence = self.lstm.backward(d_hidden)
            conv_grads = None
        if conv_grads is not None:
            grads["conv.filters"] = conv_grads["filters"]
            grads["conv.bias"] = conv_grads["bias"]
        if lstm_grads is not None:
            for gate in LstmLayer.GATES:
                grads[f"lstm.w_{gate}"] = lstm_grads[f"w_{gate}"]
                grads[f"lstm.b_{gate}"] = lstm_grads[f"b_{gate}"]
        emb_grads, _ = self.embedding.backward(d_sentence)
        grads["embedding.table"] = emb_grads["table"]
        return loss, grads


def _xavier(rng: tc.Rng, rows: int, cols: int, fan_in: int, fan_out: int) -> np.ndarray:
    scale = math.sqrt(6.0 / (fan_in + fan_out))
    return tc.init_uniform(rng, rows, cols, scale)


def build_model(
    config: ModelConfig,
    vocab: Vocabulary,
    rng: tc.Rng,
    pipeline: PipelineConfig | None = None,
) -> Model:
    """Initialize a model: Xavier-uniform weights, zero biases except the
    forget gate (+1), zero pad embedding.  Each tensor draws from its own
    named stream, so the variant choice never shifts another tensor's
    initialization."""
    vocab_size = len(vocab)
    k, m, d_h = config.embed_dim, config.filters, config.hidden

    table = _xavier(rng.split("embedding.table"), vocab_size, k, vocab_size, k)
    table[0] = 0.0
    embedding = EmbeddingLayer(table)

    conv = None
    if config.variant in ("cnn-lstm", "cnn"):
        flat = _xavier(
            rng.split("conv.filters"), m, config.window * k, config.window * k, m
        )
        conv = ConvLayer(
            filters=flat.reshape(m, config.window, k),
            bias=np.zeros(m),
            activation=config.activation,
        )

    lstm = None
    if config.variant in ("cnn-lstm", "lstm"):
        step_dim = m if config.variant == "cnn-lstm" else k
        weights = {}
        biases = {}
        for gate in LstmLayer.GATES:
            weights[gate] = _xavier(
                rng.split(f"lstm.w_{gate}"), d_h, step_dim + d_h, step_dim + d_h, d_h
            )
            biases[gate] = np.ones(d_h) if gate == "forget" else np.zeros(d_h)
        lstm = LstmLayer(weights, biases)

    head_in = m if config.variant == "cnn" else d_h
    head = DenseSoftmax(
        weights=_xavier(rng.split("head.weights"), 3, head_in, head_in, 3),
        bias=np.zeros(3),
    )
    return Model(config, vocab, embedding, conv, lstm, head, pipeline)


def sgd_step(params: dict, grads: dict, learning_rate: float) -> None:
    """In-place theta <- theta - lr * g."""
    for name, grad in grads.items():
        if params[name].shape != grad.shape:
            raise tc.ShapeMismatch(
                f"{name}: param {params[name].shape} vs grad {grad.shape}"
            )
        params[name] -= learning_rate * grad


@dataclass
class AdamState:
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(
            first_moment={n: np.zeros_like(p) for n, p in params.items()},
            second_moment={n: np.zeros_like(p) for n, p in params.items()},
        )


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for name, grad in grads.items():
        if params[name].shape != grad.shape:
            raise tc.ShapeMismatch(
                f"{name}: param {params[name].shape} vs grad {grad.shape}"
            )
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * grad
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        params[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


@dataclass(frozen=True)
class EvalResult:
    loss: float
    accuracy: float
    predictions: list[int]


def evaluate(model: Model, corpus: EncodedCorpus) -> EvalResult:
    """Mean cross-entropy, accuracy, and argmax predictions over a corpus."""
    if len(corpus) == 0:
        raise ValueError("cannot evaluate an empty corpus")
    total_loss = 0.0
    correct = 0
    predictions: list[int] = []
    for ids, label in zip(corpus.sequences, corpus.labels):
        probs = model.forward(ids)
        total_loss += cross_entropy(probs, int(label))
        pred = int(np.argmax(probs))
        predictions.append(pred)
        correct += pred == int(label)
    n = len(corpus)
    return EvalResult(loss=total_loss / n, accuracy=correct / n, predictions=predictions)


def train(
    model: Model,
    train_corpus: EncodedCorpus,
    val_corpus: EncodedCorpus | None,
    cfg: TrainConfig,
) -> tuple[Model, EpochHistory]:
    """Run the mini-batch loop; returns the model and its per-epoch history.

    The validation corpus may be None/empty, in which case the val columns
    record NaN.  Raises NonFiniteLoss the moment a batch loss stops being
    finite.
    """
    if len(train_corpus) == 0:
        raise ValueError("training corpus is empty")
    params = model.parameters()
    adam_state = AdamState.for_params(params) if cfg.optimizer == "adam" else None
    shuffle_rng = tc.Rng(cfg.seed).split("epoch-shuffle")
    history = EpochHistory()
    have_val = val_corpus is not None and len(val_corpus) > 0

    for epoch in range(1, cfg.epochs + 1):
        if cfg.shuffle:
            order = shuffle_rng.permutation(len(train_corpus))
        else:
            order = np.arange(len(train_corpus))
        for batch_index, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            batch_grads: dict[str, np.ndarray] | None = None
            batch_loss = 0.0
            for i in batch:
                loss, grads = model.forward_backward(
                    train_corpus.sequences[i], int(train_corpus.labels[i])
                )
                batch_loss += loss
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name in batch_grads:
                        batch_grads[name] += grads[name]
            size = len(batch)
            batch_loss /= size
            if not math.isfinite(batch_loss):
                raise NonFiniteLoss(epoch, batch_index)
            for name in batch_grads:
                batch_grads[name] /= size
            if adam_state is not None:
                adam_step(params, batch_grads, adam_state, cfg)
            else:
                sgd_step(params, batch_grads, cfg.learning_rate)
        train_eval = evaluate(model, train_corpus)
        if have_val:
            val_eval = evaluate(model, val_corpus)
            val_loss, val_acc = val_eval.loss, val_eval.accuracy
        else:
            val_loss = val_acc = float("nan")
        history.records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=train_eval.loss,
                train_accuracy=train_eval.accuracy,
                val_loss=val_loss,
                val_accuracy=val_acc,
            )
        )
    model.history = history
    return model, history


def predict_text(model: Model, raw: str) -> tuple[int, np.ndarray]:
    """Preprocess raw text with the model's own pipeline and classify it."""
    if model.pipeline is None:
        raise ValueError("model carries no preprocessing pipeline settings")
    tokens = model.pipeline.tokens(raw)
    seq = encode_and_pad(tokens, model.vocab, model.config.seq_len)
    probs = model.forward(seq)
    return int(np.argmax(probs)), probs


# --- model file -----------------------------------------------------------
#
# layout: MAGIC | u32 version | u64 header length | header JSON |
#         parameter payload (float64 little-endian, header order) |
#         sha256 of everything before it


def save_model(model: Model, path) -> None:
    params = model.parameters()
    header = {
        "config": asdict(model.config),
        "vocab": {
            "tokens": list(model.vocab.tokens()),
            "min_frequency": model.vocab.min_frequency,
        },
        "pipeline": None
        if model.pipeline is None
        else {
            "stop_words": sorted(model.pipeline.stop_words.words),
            "drop_hashtag_words": model.pipeline.drop_hashtag_words,
            "dedupe": model.pipeline.dedupe,
        },
        "history": [
            [r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy]
            for r in model.history.records
        ],
        "params": [
            {"name": name, "shape": list(arr.shape)} for name, arr in params.items()
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes() for arr in params.values()
    )
    blob = (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + struct.pack("<Q", len(header_bytes))
        + header_bytes
        + payload
    )
    blob += hashlib.sha256(blob).digest()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 4 + 8 + 32 or blob[:4] != MAGIC:
        raise CorruptFile(f"not a model file: {path}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"model format {version}, this build reads {FORMAT_VERSION}"
        )
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptFile(f"checksum mismatch: {path}")
    (header_len,) = struct.unpack_from("<Q", blob, 8)
    header_start = 16
    payload_start = header_start + header_len
    try:
        header = json.loads(body[header_start:payload_start].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"unreadable header: {path}") from exc

    config = ModelConfig(**header["config"])
    vocab = Vocabulary(header["vocab"]["tokens"], header["vocab"]["min_frequency"])
    pipeline = None
    if header["pipeline"] is not None:
        pipeline = PipelineConfig(
            stop_words=StopWordList(frozenset(header["pipeline"]["stop_words"])),
            drop_hashtag_words=header["pipeline"]["drop_hashtag_words"],
            dedupe=header["pipeline"]["dedupe"],
        )

    arrays: dict[str, np.ndarray] = {}
    offset = payload_start
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        end = offset + 8 * count
        if end > len(body):
            raise CorruptFile(f"parameter payload truncated: {path}")
        arrays[entry["name"]] = (
            np.frombuffer(body[offset:end], dtype="<f8").reshape(shape).copy()
        )
        offset = end
    if offset != len(body):
        raise CorruptFile(f"trailing bytes after parameters: {path}")

    embedding = EmbeddingLayer(arrays["embedding.table"])
    conv = None
    if "conv.filters" in arrays:
        conv = ConvLayer(
            filters=arrays["conv.filters"],
            bias=arrays["conv.bias"],
            activation=config.activation,
        )
    lstm = None
    if "lstm.w_input" in arrays:
        lstm = LstmLayer(
            weights={g: arrays[f"lstm.w_{g}"] for g in LstmLayer.GATES},
            biases={g: arrays[f"lstm.b_{g}"] for g in LstmLayer.GATES},
        )
    head = DenseSoftmax(weights=arrays["head.weights"], bias=arrays["head.bias"])
    model = Model(config, vocab, embedding, conv, lstm, head, pipeline)
    model.history = EpochHistory(
        [EpochRecord(int(e), tl, ta, vl, va) for e, tl, ta, vl, va in header["history"]]
    )
    return model
