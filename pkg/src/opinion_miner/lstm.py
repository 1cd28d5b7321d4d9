"""Binary sentiment classifier: embedding, one LSTM layer, softmax head.

Everything is plain numpy with exact backpropagation through time, so the
gradient path is checkable against finite differences. Training is plain
mini-batch SGD with a global gradient-norm clip; variable-length sequences
are processed one by one inside a batch and their gradients averaged, which
sidesteps padding semantics entirely.

Parameter order (init draws and serialization): embedding, then per gate in
(input, forget, output, candidate) order its W, U, b, then the head W, b.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .seeding import make_rng
from .textproc import Vocabulary, tokenize

__all__ = [
    "GATES",
    "LstmConfig",
    "LstmParams",
    "LabeledExample",
    "LstmClassifier",
    "Prediction",
    "Metrics",
    "EpochStats",
    "sigmoid",
    "softmax",
    "init_params",
    "cell_forward",
    "forward",
    "loss",
    "backward",
    "global_grad_norm",
    "clip_gradients",
    "train",
    "predict",
    "evaluate",
    "save_classifier",
    "load_classifier",
    "load_labeled_csv",
    "predictions_to_csv",
]

GATES = ("input", "forget", "output", "candidate")
PROB_FLOOR = 1e-12
INIT_SCALE = 0.08
FORGET_BIAS = 1.0


@dataclass(frozen=True)
class LstmConfig:
    d_embed: int = 128
    d_hidden: int = 196
    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 7
    max_features: int = 2000
    clip_norm: float = 5.0
    seed: int = 0


@dataclass(frozen=True)
class LabeledExample:
    tokens: tuple[int, ...]
    label: int


@dataclass
class LstmParams:
    embedding: np.ndarray
    w_input: np.ndarray
    u_input: np.ndarray
    b_input: np.ndarray
    w_forget: np.ndarray
    u_forget: np.ndarray
    b_forget: np.ndarray
    w_output: np.ndarray
    u_output: np.ndarray
    b_output: np.ndarray
    w_candidate: np.ndarray
    u_candidate: np.ndarray
    b_candidate: np.ndarray
    w_head: np.ndarray
    b_head: np.ndarray

    @property
    def d_embed(self) -> int:
        return self.embedding.shape[1]

    @property
    def d_hidden(self) -> int:
        return self.w_input.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        names = ["embedding"]
        for gate in GATES:
            names += [f"w_{gate}", f"u_{gate}", f"b_{gate}"]
        names += ["w_head", "b_head"]
        return [(n, getattr(self, n)) for n in names]

    def zeros_like(self) -> "LstmParams":
        return LstmParams(**{n: np.zeros_like(a) for n, a in self.named_arrays()})

    def copy(self) -> "LstmParams":
        return LstmParams(**{n: a.copy() for n, a in self.named_arrays()})


def sigmoid(x):
    """Logistic function, overflow-safe for large |x|; scalar in, scalar out."""
    if np.ndim(x) == 0:
        xf = float(x)
        if xf >= 0:
            return 1.0 / (1.0 + math.exp(-xf))
        ex = math.exp(xf)
        return ex / (1.0 + ex)
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(v: np.ndarray) -> np.ndarray:
    shifted = np.asarray(v, dtype=np.float64) - np.max(v)
    e = np.exp(shifted)
    return e / e.sum()


def init_params(vocab_size: int, config: LstmConfig, rng: np.random.Generator) -> LstmParams:
    """Uniform(-0.08, 0.08) weights drawn in canonical order, zero biases,
    forget-gate bias raised to 1.0 so early training does not forget."""
    d_e, d_h = config.d_embed, config.d_hidden

    def draw(*shape: int) -> np.ndarray:
        return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

    embedding = draw(vocab_size, d_e)
    gates = {}
    for gate in GATES:
        gates[f"w_{gate}"] = draw(d_h, d_e)
        gates[f"u_{gate}"] = draw(d_h, d_h)
        gates[f"b_{gate}"] = np.zeros(d_h)
    gates["b_forget"] = gates["b_forget"] + FORGET_BIAS
    w_head = draw(2, d_h)
    return LstmParams(embedding=embedding, w_head=w_head, b_head=np.zeros(2), **gates)


@dataclass
class GateCache:
    token: int
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


def cell_forward(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    params: LstmParams,
    token: int = -1,
) -> tuple[np.ndarray, np.ndarray, GateCache]:
    """One LSTM step: gate activations, cell update, hidden output."""
    if x.shape != (params.d_embed,) or h_prev.shape != (params.d_hidden,) or c_prev.shape != (params.d_hidden,):
        raise ValueError(
            f"dimension mismatch: x{x.shape}, h{h_prev.shape}, c{c_prev.shape} "
            f"vs d_embed={params.d_embed}, d_hidden={params.d_hidden}"
        )
    i = sigmoid(params.w_input @ x + params.u_input @ h_prev + params.b_input)
    f = sigmoid(params.w_forget @ x + params.u_forget @ h_prev + params.b_forget)
    o = sigmoid(params.w_output @ x + params.u_output @ h_prev + params.b_output)
    g = np.tanh(params.w_candidate @ x + params.u_candidate @ h_prev + params.b_candidate)
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = GateCache(token=token, x=x, h_prev=h_prev, c_prev=c_prev,
                      i=i, f=f, o=o, g=g, c=c, tanh_c=tanh_c)
    return h, c, cache


@dataclass
class ForwardCache:
    steps: list[GateCache]
    h_final: np.ndarray
    probs: np.ndarray


def forward(tokens: Sequence[int], params: LstmParams) -> tuple[np.ndarray, ForwardCache]:
    """Run the sequence from zero state; softmax over the final hidden state."""
    if len(tokens) == 0:
        raise InputError("cannot run forward on an empty token sequence")
    h = np.zeros(params.d_hidden)
    c = np.zeros(params.d_hidden)
    steps = []
    for tok in tokens:
        if not 0 <= tok < params.vocab_size:
            raise InputError(f"token id {tok} out of range [0, {params.vocab_size})")
        h, c, cache = cell_forward(params.embedding[tok], h, c, params, token=tok)
        steps.append(cache)
    probs = softmax(params.w_head @ h + params.b_head)
    return probs, ForwardCache(steps=steps, h_final=h, probs=probs)


def loss(probs: np.ndarray, label: int) -> float:
    """Categorical cross-entropy with a probability floor."""
    return -math.log(max(float(probs[label]), PROB_FLOOR))


def backward(cache: ForwardCache, label: int, params: LstmParams) -> LstmParams:
    """Exact gradients of the cross-entropy loss via full BPTT."""
    grads = params.zeros_like()
    dlogits = cache.probs.copy()
    dlogits[label] -= 1.0
    grads.w_head += np.outer(dlogits, cache.h_final)
    grads.b_head += dlogits
    dh = params.w_head.T @ dlogits
    dc = np.zeros(params.d_hidden)
    for step in reversed(cache.steps):
        do = dh * step.tanh_c
        dc = dc + dh * step.o * (1.0 - step.tanh_c ** 2)
        di = dc * step.g
        dg = dc * step.i
        df = dc * step.c_prev
        dpre_i = di * step.i * (1.0 - step.i)
        dpre_f = df * step.f * (1.0 - step.f)
        dpre_o = do * step.o * (1.0 - step.o)
        dpre_g = dg * (1.0 - step.g ** 2)
        grads.w_input += np.outer(dpre_i, step.x)
        grads.u_input += np.outer(dpre_i, step.h_prev)
        grads.b_input += dpre_i
        grads.w_forget += np.outer(dpre_f, step.x)
        grads.u_forget += np.outer(dpre_f, step.h_prev)
        grads.b_forget += dpre_f
        grads.w_output += np.outer(dpre_o, step.x)
        grads.u_output += np.outer(dpre_o, step.h_prev)
        grads.b_output += dpre_o
        grads.w_candidate += np.outer(dpre_g, step.x)
        grads.u_candidate += np.outer(dpre_g, step.h_prev)
        grads.b_candidate += dpre_g
        dx = (
            params.w_input.T @ dpre_i
            + params.w_forget.T @ dpre_f
            + params.w_output.T @ dpre_o
            + params.w_candidate.T @ dpre_g
        )
        grads.embedding[step.token] += dx
        dh = (
            params.u_input.T @ dpre_i
            + params.u_forget.T @ dpre_f
            + params.u_output.T @ dpre_o
            + params.u_candidate.T @ dpre_g
        )
        dc = dc * step.f
    return grads


def global_grad_norm(grads: LstmParams) -> float:
    total = 0.0
    for _, arr in grads.named_arrays():
        total += float(np.sum(arr * arr))
    return math.sqrt(total)


def clip_gradients(grads: LstmParams, clip_norm: float) -> float:
    """Scale all gradients in place so the global norm is at most clip_norm.
    Returns the pre-clip norm."""
    norm = global_grad_norm(grads)
    if norm > clip_norm and norm > 0.0:
        scale = clip_norm / norm
        for _, arr in grads.named_arrays():
            arr *= scale
    return norm


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    accuracy: float


@dataclass
class LstmClassifier:
    params: LstmParams
    config: LstmConfig
    prior_positive: float
    epoch_log: list[EpochStats] = field(default_factory=list)
    vocab: Vocabulary | None = None


def _polarity(probs: np.ndarray) -> int:
    # Tie at 0.5 predicts positive.
    return 1 if probs[1] >= probs[0] else 0


def train(
    dataset: Sequence[LabeledExample],
    config: LstmConfig = LstmConfig(),
    vocab: Vocabulary | None = None,
) -> LstmClassifier:
    """Seeded SGD training: one permutation per epoch, batch-averaged
    gradients, global-norm clip, fixed-order updates."""
    if not dataset:
        raise InputError("training dataset is empty")
    labels = {ex.label for ex in dataset}
    if not labels.issubset({0, 1}):
        raise InputError(f"labels must be 0 or 1, got {sorted(labels - {0, 1})}")
    if len(labels) < 2:
        raise InputError("training dataset contains a single class")
    for ex in dataset:
        if len(ex.tokens) == 0:
            raise InputError("training dataset contains an empty example")
    if vocab is not None:
        vocab_size = len(vocab)
    else:
        vocab_size = max(max(ex.tokens) for ex in dataset) + 1
    if vocab_size > config.max_features:
        raise InputError(
            f"vocabulary size {vocab_size} exceeds max_features {config.max_features}"
        )
    rng = make_rng(config.seed)
    params = init_params(vocab_size, config, rng)
    n = len(dataset)
    log: list[EpochStats] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads = params.zeros_like()
            for idx in batch:
                ex = dataset[int(idx)]
                probs, cache = forward(ex.tokens, params)
                total_loss += loss(probs, ex.label)
                if _polarity(probs) == ex.label:
                    correct += 1
                g = backward(cache, ex.label, params)
                for (_, acc), (_, src) in zip(batch_grads.named_arrays(), g.named_arrays()):
                    acc += src
            inv = 1.0 / len(batch)
            for _, arr in batch_grads.named_arrays():
                arr *= inv
            clip_gradients(batch_grads, config.clip_norm)
            for (_, p), (_, g_arr) in zip(params.named_arrays(), batch_grads.named_arrays()):
                p -= config.learning_rate * g_arr
        log.append(EpochStats(epoch=epoch, mean_loss=total_loss / n, accuracy=correct / n))
    prior = sum(ex.label for ex in dataset) / n
    return LstmClassifier(
        params=params, config=config, prior_positive=prior, epoch_log=log, vocab=vocab
    )


@dataclass(frozen=True)
class Prediction:
    polarity: int
    prob_positive: float
    from_prior: bool = False


def _encode_input(item, classifier: LstmClassifier) -> Sequence[int]:
    if isinstance(item, str):
        if classifier.vocab is None:
            raise InputError("classifier has no vocabulary; pass token ids, not text")
        return classifier.vocab.encode(tokenize(item))
    return item


def predict(inputs: Sequence, classifier: LstmClassifier) -> list[Prediction]:
    """Polarity and positive-class probability per input.

    Inputs may be raw texts (requires the classifier's vocabulary) or token-id
    sequences. Inputs that are empty after preprocessing fall back to the
    training prior, flagged.
    """
    out = []
    prior = classifier.prior_positive
    for item in inputs:
        ids = _encode_input(item, classifier)
        if len(ids) == 0:
            out.append(Prediction(polarity=1 if prior >= 0.5 else 0,
                                  prob_positive=prior, from_prior=True))
            continue
        probs, _ = forward(ids, classifier.params)
        out.append(Prediction(polarity=_polarity(probs), prob_positive=float(probs[1])))
    return out


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1, "notes": list(self.notes),
        }


def evaluate(predictions: Sequence, gold: Sequence[int]) -> Metrics:
    """Confusion-matrix metrics with positive class 1. Undefined precision
    or recall is reported as None with the reason, never as 0."""
    if len(predictions) == 0:
        raise InputError("cannot evaluate an empty prediction list")
    if len(predictions) != len(gold):
        raise InputError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} labels")
    tp = fp = tn = fn = 0
    for pred, g in zip(predictions, gold):
        p = pred.polarity if isinstance(pred, Prediction) else int(pred)
        if p not in (0, 1) or g not in (0, 1):
            raise InputError(f"polarity and label must be 0 or 1, got ({p}, {g})")
        if p == 1 and g == 1:
            tp += 1
        elif p == 1 and g == 0:
            fp += 1
        elif p == 0 and g == 0:
            tn += 1
        else:
            fn += 1
    total = tp + fp + tn + fn
    notes: list[str] = []
    accuracy = (tp + tn) / total
    if tp + fp > 0:
        precision: float | None = tp / (tp + fp)
    else:
        precision = None
        notes.append("precision undefined: no positive predictions")
    if tp + fn > 0:
        recall: float | None = tp / (tp + fn)
    else:
        recall = None
        notes.append("recall undefined: no positive gold labels")
    if precision is None or recall is None:
        f1: float | None = None
        notes.append("f1 undefined: precision or recall undefined")
    elif precision + recall == 0:
        f1 = None
        notes.append("f1 undefined: precision + recall = 0")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(tp=tp, fp=fp, tn=tn, fn=fn, accuracy=accuracy,
                   precision=precision, recall=recall, f1=f1, notes=tuple(notes))


def save_classifier(classifier: LstmClassifier, path: str | Path) -> None:
    """Versioned JSON container; arrays stored flat in canonical order.

    The vocabulary (when present) is embedded so one file suffices for
    text prediction; its hash is stored alongside for cross-checks.
    """
    params_payload = {}
    for name, arr in classifier.params.named_arrays():
        params_payload[name] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    payload = {
        "version": 1,
        "config": {
            "d_embed": classifier.config.d_embed,
            "d_hidden": classifier.config.d_hidden,
            "learning_rate": classifier.config.learning_rate,
            "batch_size": classifier.config.batch_size,
            "epochs": classifier.config.epochs,
            "max_features": classifier.config.max_features,
            "clip_norm": classifier.config.clip_norm,
            "seed": classifier.config.seed,
        },
        "prior_positive": classifier.prior_positive,
        "epoch_log": [[s.epoch, s.mean_loss, s.accuracy] for s in classifier.epoch_log],
        "vocab_sha256": classifier.vocab.sha256() if classifier.vocab else None,
        "vocab": json.loads(classifier.vocab.to_json()) if classifier.vocab else None,
        "params": params_payload,
    }
    Path(path).write_text(json.dumps(payload, separators=(",", ":")), encoding="utf-8")


def load_classifier(path: str | Path) -> LstmClassifier:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != 1:
        raise InputError(f"unsupported classifier version: {payload.get('version')!r}")
    config = LstmConfig(**payload["config"])
    arrays = {}
    for name, entry in payload["params"].items():
        arrays[name] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    params = LstmParams(**arrays)
    vocab = None
    if payload.get("vocab") is not None:
        vocab = Vocabulary.from_json(json.dumps(payload["vocab"]))
    log = [EpochStats(epoch=int(e), mean_loss=float(l), accuracy=float(a))
           for e, l, a in payload.get("epoch_log", [])]
    return LstmClassifier(
        params=params,
        config=config,
        prior_positive=float(payload["prior_positive"]),
        epoch_log=log,
        vocab=vocab,
    )


def load_labeled_csv(path: str | Path) -> list[tuple[str, int]]:
    """Labeled sentiment data: CSV with header `text,label`, label in {0,1}."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"labeled data file not found: {path}")
    rows: list[tuple[str, int]] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "text" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise InputError(f"labeled data must have a `text,label` header, got {reader.fieldnames}")
        for line_no, row in enumerate(reader, start=2):
            raw = (row["label"] or "").strip()
            if raw not in ("0", "1"):
                raise InputError(f"line {line_no}: label must be 0 or 1, got {raw!r}")
            rows.append((row["text"] or "", int(raw)))
    if not rows:
        raise InputError(f"labeled data file has no rows: {path}")
    return rows


def predictions_to_csv(ids: Sequence[str], predictions: Sequence[Prediction]) -> str:
    if len(ids) != len(predictions):
        raise InputError("ids and predictions must have equal length")
    lines = ["id,polarity,prob_positive"]
    for rid, pred in zip(ids, predictions):
        lines.append(f"{rid},{pred.polarity},{pred.prob_positive!r}")
    return "\n".join(lines) + "\n"
