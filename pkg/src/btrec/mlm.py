"""A small BERT-style encoder with an MLM head, written directly in numpy.

Post-layer-norm encoder blocks, learned positional embeddings, tanh-GELU
feed-forward, and an output projection tied to the token embeddings.  The
backward pass is hand-derived; ``tests/test_mlm_gradients.py`` checks it
against central finite differences in float64.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import MASK, PAD, MaskedInstance, Sentence, Vocab, mask_for_training

FORMAT_MAGIC = b"BTRECMDL"
FORMAT_VERSION = 1
LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


class ConfigError(ValueError):
    pass


class SequenceTooLong(ValueError):
    pass


class NoLabeledPositions(ValueError):
    pass


class DivergedLoss(FloatingPointError):
    pass


class NoMask(ValueError):
    pass


class MultipleMasks(ValueError):
    pass


class ModelFileError(Exception):
    pass


class VersionMismatch(ModelFileError):
    pass


class CorruptFile(ModelFileError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    max_len: int = 128
    d_model: int = 64
    n_heads: int = 2
    n_layers: int = 2
    d_ff: int = 128
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    mask_rate: float = 0.15
    optimizer: str = "adam"

    def __post_init__(self):
        dims = (self.vocab_size, self.max_len, self.d_model, self.n_heads, self.n_layers,
                self.d_ff, self.batch_size)
        if any(int(d) < 1 for d in dims):
            raise ConfigError("all model dimensions must be >= 1")
        if self.d_model % self.n_heads:
            raise ConfigError(f"divisibility: d_model={self.d_model} is not a multiple "
                              f"of n_heads={self.n_heads}")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


LAYER_TENSORS = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "ln1_g", "ln1_b",
                 "w1", "b1", "w2", "b2", "ln2_g", "ln2_b")


def tensor_names(cfg: ModelConfig) -> list[str]:
    names = ["tok_emb", "pos_emb", "emb_ln_g", "emb_ln_b"]
    for layer in range(cfg.n_layers):
        names += [f"l{layer}.{t}" for t in LAYER_TENSORS]
    names.append("out_bias")
    return names


def tensor_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, f = cfg.d_model, cfg.d_ff
    per_layer = {"wq": (d, d), "bq": (d,), "wk": (d, d), "bk": (d,), "wv": (d, d),
                 "bv": (d,), "wo": (d, d), "bo": (d,), "ln1_g": (d,), "ln1_b": (d,),
                 "w1": (d, f), "b1": (f,), "w2": (f, d), "b2": (d,), "ln2_g": (d,),
                 "ln2_b": (d,)}
    shapes = {"tok_emb": (cfg.vocab_size, d), "pos_emb": (cfg.max_len, d),
              "emb_ln_g": (d,), "emb_ln_b": (d,), "out_bias": (cfg.vocab_size,)}
    for layer in range(cfg.n_layers):
        for k, s in per_layer.items():
            shapes[f"l{layer}.{k}"] = s
    return {n: shapes[n] for n in tensor_names(cfg)}


@dataclass
class ModelParams:
    cfg: ModelConfig
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    @property
    def dtype(self):
        return self.tensors["tok_emb"].dtype

    def copy(self) -> "ModelParams":
        return ModelParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(self.cfg, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in tensor_names(self.cfg):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.tensors[name]).tobytes())
        return h.hexdigest()


def init_model(cfg: ModelConfig, dtype=np.float32) -> ModelParams:
    """Scaled-normal weights (std 1/sqrt(fan_in), 0.02 for embeddings),
    unit layer-norm gains, zero biases."""
    rng = np.random.default_rng(cfg.seed)
    tensors = {}
    for name, shape in tensor_shapes(cfg).items():
        short = name.split(".")[-1]
        if short in ("tok_emb", "pos_emb"):
            arr = rng.normal(0.0, 0.02, size=shape)
        elif short.startswith("w"):
            arr = rng.normal(0.0, 1.0 / math.sqrt(shape[0]), size=shape)
        elif short.endswith("_g"):
            arr = np.ones(shape)
        else:
            arr = np.zeros(shape)
        tensors[name] = arr.astype(dtype)
    return ModelParams(cfg, tensors)


# ---------------------------------------------------------------------------
# building blocks

def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layer_norm_back(dy, g, cache):
    xhat, inv = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(0)
    db = dy.reshape(-1, xhat.shape[-1]).sum(0)
    dxhat = dy * g
    n = xhat.shape[-1]
    dx = inv / n * (n * dxhat - dxhat.sum(-1, keepdims=True)
                    - xhat * (dxhat * xhat).sum(-1, keepdims=True))
    return dx, dg, db


def _gelu(z):
    t = np.tanh(_GELU_C * (z + 0.044715 * z ** 3))
    return 0.5 * z * (1.0 + t), t


def _gelu_back(dy, z, t):
    dt = _GELU_C * (1.0 + 3 * 0.044715 * z * z)
    return dy * (0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * dt)


def _softmax(s):
    s = s - s.max(-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(-1, keepdims=True)


def _log_softmax(x):
    x = x - x.max(-1, keepdims=True)
    return x - np.log(np.exp(x).sum(-1, keepdims=True))


def _dropout(x, rate, rng):
    if rng is None or rate <= 0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def _check_ids(params: ModelParams, ids: np.ndarray) -> None:
    if ids.shape[-1] > params.cfg.max_len:
        raise SequenceTooLong(f"length {ids.shape[-1]} exceeds max_len {params.cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= params.cfg.vocab_size):
        raise ValueError("token id out of range")


def pad_batch(seqs: Sequence[Sequence[int]]) -> np.ndarray:
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), PAD, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = s
    return out


def _encode(params: ModelParams, ids: np.ndarray, rng=None, keep_cache=False):
    """Run the encoder on a (B, T) batch; returns final hidden states (B, T, D)."""
    cfg = params.cfg
    p = params.tensors
    dtype = params.dtype
    B, T = ids.shape
    H, dh = cfg.n_heads, cfg.head_dim
    scale = 1.0 / math.sqrt(dh)
    rate = cfg.dropout_rate

    key_mask = np.where(ids == PAD, -1e9, 0.0).astype(dtype)[:, None, None, :]
    x0 = p["tok_emb"][ids] + p["pos_emb"][:T]
    h, ln0 = _layer_norm(x0, p["emb_ln_g"], p["emb_ln_b"])
    h, m0 = _dropout(h, rate, rng)
    caches = []
    for layer in range(cfg.n_layers):
        w = {k: p[f"l{layer}.{k}"] for k in LAYER_TENSORS}
        x = h
        q = (x @ w["wq"] + w["bq"]).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        k = (x @ w["wk"] + w["bk"]).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        v = (x @ w["wv"] + w["bv"]).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        a = _softmax(q @ k.transpose(0, 1, 3, 2) * scale + key_mask)
        c = (a @ v).transpose(0, 2, 1, 3).reshape(B, T, H * dh)
        o, m1 = _dropout(c @ w["wo"] + w["bo"], rate, rng)
        h1, ln1 = _layer_norm(x + o, w["ln1_g"], w["ln1_b"])
        z = h1 @ w["w1"] + w["b1"]
        g, t = _gelu(z)
        f, m2 = _dropout(g @ w["w2"] + w["b2"], rate, rng)
        h, ln2 = _layer_norm(h1 + f, w["ln2_g"], w["ln2_b"])
        if keep_cache:
            caches.append(dict(x=x, q=q, k=k, v=v, a=a, c=c, m1=m1, ln1=ln1, h1=h1,
                               z=z, g=g, t=t, m2=m2, ln2=ln2))
    cache = dict(ids=ids, ln0=ln0, m0=m0, layers=caches, h=h) if keep_cache else None
    return h, cache


def forward(params: ModelParams, token_ids) -> np.ndarray:
    """Inference-mode logits, shape ``(len, vocab_size)`` for one sequence or
    ``(batch, len, vocab_size)`` for a padded batch."""
    ids = np.asarray(token_ids, dtype=np.int64)
    single = ids.ndim == 1
    if single:
        ids = ids[None, :]
    _check_ids(params, ids)
    h, _ = _encode(params, ids)
    logits = h @ params["tok_emb"].T + params["out_bias"]
    return logits[0] if single else logits


def log_probs(params: ModelParams, token_ids) -> np.ndarray:
    return _log_softmax(forward(params, token_ids))


def _encode_back(params: ModelParams, cache, dh_final) -> dict[str, np.ndarray]:
    cfg = params.cfg
    p = params.tensors
    grads = {n: np.zeros_like(v) for n, v in p.items()}
    ids = cache["ids"]
    B, T = ids.shape
    H, hd = cfg.n_heads, cfg.head_dim
    scale = 1.0 / math.sqrt(hd)

    dh = dh_final
    for layer in reversed(range(cfg.n_layers)):
        pre = f"l{layer}."
        w = {k: p[pre + k] for k in LAYER_TENSORS}
        cc = cache["layers"][layer]
        dr2, dg2, db2 = _layer_norm_back(dh, w["ln2_g"], cc["ln2"])
        grads[pre + "ln2_g"] += dg2
        grads[pre + "ln2_b"] += db2
        df = dr2 if cc["m2"] is None else dr2 * cc["m2"]
        grads[pre + "w2"] += cc["g"].reshape(-1, cfg.d_ff).T @ df.reshape(-1, cfg.d_model)
        grads[pre + "b2"] += df.reshape(-1, cfg.d_model).sum(0)
        dz = _gelu_back(df @ w["w2"].T, cc["z"], cc["t"])
        grads[pre + "w1"] += cc["h1"].reshape(-1, cfg.d_model).T @ dz.reshape(-1, cfg.d_ff)
        grads[pre + "b1"] += dz.reshape(-1, cfg.d_ff).sum(0)
        dh1 = dr2 + dz @ w["w1"].T

        dr1, dg1, db1 = _layer_norm_back(dh1, w["ln1_g"], cc["ln1"])
        grads[pre + "ln1_g"] += dg1
        grads[pre + "ln1_b"] += db1
        do = dr1 if cc["m1"] is None else dr1 * cc["m1"]
        grads[pre + "wo"] += cc["c"].reshape(-1, cfg.d_model).T @ do.reshape(-1, cfg.d_model)
        grads[pre + "bo"] += do.reshape(-1, cfg.d_model).sum(0)
        dc = (do @ w["wo"].T).reshape(B, T, H, hd).transpose(0, 2, 1, 3)
        a, q, k, v = cc["a"], cc["q"], cc["k"], cc["v"]
        da = dc @ v.transpose(0, 1, 3, 2)
        dv = a.transpose(0, 1, 3, 2) @ dc
        ds = a * (da - (da * a).sum(-1, keepdims=True)) * scale
        dq = ds @ k
        dk = ds.transpose(0, 1, 3, 2) @ q
        x2 = cc["x"].reshape(-1, cfg.d_model)
        dx = dr1
        for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
            dflat = dproj.transpose(0, 2, 1, 3).reshape(-1, cfg.d_model)
            grads[pre + "w" + name] += x2.T @ dflat
            grads[pre + "b" + name] += dflat.sum(0)
            dx = dx + (dflat @ w["w" + name].T).reshape(B, T, cfg.d_model)
        dh = dx

    if cache["m0"] is not None:
        dh = dh * cache["m0"]
    dx0, dg0, db0 = _layer_norm_back(dh, p["emb_ln_g"], cache["ln0"])
    grads["emb_ln_g"] += dg0
    grads["emb_ln_b"] += db0
    np.add.at(grads["tok_emb"], ids.reshape(-1), dx0.reshape(-1, cfg.d_model))
    grads["pos_emb"][:T] += dx0.sum(0)
    return grads


def _label_arrays(instances: Sequence[MaskedInstance]):
    rows, cols, targets = [], [], []
    for i, inst in enumerate(instances):
        for pos in sorted(inst.labels):
            rows.append(i)
            cols.append(pos)
            targets.append(inst.labels[pos])
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), \
        np.array(targets, dtype=np.int64)


def mlm_loss_and_grads(params: ModelParams, batch: Sequence[MaskedInstance],
                       rng: Optional[np.random.Generator] = None):
    """Mean cross-entropy over every labelled position in the batch, and its
    gradient for every tensor.  ``rng`` switches dropout on."""
    if not batch:
        raise NoLabeledPositions("empty batch")
    if any(not inst.labels for inst in batch):
        raise NoLabeledPositions("every instance needs at least one label")
    ids = pad_batch([inst.input_ids for inst in batch])
    _check_ids(params, ids)
    rows, cols, targets = _label_arrays(batch)
    h, cache = _encode(params, ids, rng=rng, keep_cache=True)
    emb = params["tok_emb"]
    hsel = h[rows, cols]
    logits = hsel @ emb.T + params["out_bias"]
    logp = _log_softmax(logits)
    n = len(targets)
    loss = float(-logp[np.arange(n), targets].sum() / n)

    dlogits = np.exp(logp)
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n
    dh = np.zeros_like(h)
    np.add.at(dh, (rows, cols), dlogits @ emb)
    grads = _encode_back(params, cache, dh)
    grads["tok_emb"] += dlogits.T @ hsel
    grads["out_bias"] += dlogits.sum(0)
    return loss, grads


# ---------------------------------------------------------------------------
# training

class Trainer:
    """Carries parameters and optimizer state across calls to :meth:`run`.

    Epoch ``e`` draws its shuffle, masks and dropout from a generator seeded
    with ``(cfg.seed, e)``, so ``run(5); run(5)`` equals ``run(10)`` bit for bit.
    """

    def __init__(self, params: ModelParams, sentences: Sequence[Sentence], vocab: Vocab):
        if not sentences:
            raise ValueError("empty corpus")
        longest = max(len(s) for s in sentences)
        if longest > params.cfg.max_len:
            raise SequenceTooLong(f"corpus sentence of length {longest} exceeds max_len")
        self.params = params
        self.cfg = params.cfg
        self.sentences = list(sentences)
        self.vocab = vocab
        self.epoch = 0
        self.step = 0
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.trace: list[float] = []

    def _update(self, grads):
        cfg = self.cfg
        lr = cfg.learning_rate
        if cfg.optimizer == "sgd":
            for k, g in grads.items():
                self.params.tensors[k] -= lr * g
            return
        b1, b2, eps = 0.9, 0.999, 1e-8
        self.step += 1
        c1 = 1 - b1 ** self.step
        c2 = 1 - b2 ** self.step
        dtype = self.params.dtype
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            upd = (lr / c1) * m / (np.sqrt(v / c2) + eps)
            self.params.tensors[k] -= upd.astype(dtype)

    def run_epoch(self) -> float:
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, self.epoch])
        order = rng.permutation(len(self.sentences))
        instances = [mask_for_training(self.sentences[i], self.vocab, rng, cfg.mask_rate)
                     for i in order]
        instances = [inst for inst in instances if inst.labels]
        total, count = 0.0, 0
        for start in range(0, len(instances), cfg.batch_size):
            batch = instances[start:start + cfg.batch_size]
            loss, grads = mlm_loss_and_grads(self.params, batch, rng=rng)
            if not math.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} in epoch {self.epoch}")
            self._update(grads)
            n = sum(len(inst.labels) for inst in batch)
            total += loss * n
            count += n
        self.epoch += 1
        mean = total / count if count else float("nan")
        self.trace.append(mean)
        return mean

    def run(self, epochs: int) -> list[float]:
        return [self.run_epoch() for _ in range(epochs)]


def train(params: ModelParams, corpus: Sequence[Sentence], vocab: Vocab,
          epochs: Optional[int] = None) -> tuple[ModelParams, list[float]]:
    """Train a copy of ``params`` for ``epochs`` (default ``cfg.epochs``)."""
    trainer = Trainer(params.copy(), corpus, vocab)
    trace = trainer.run(params.cfg.epochs if epochs is None else epochs)
    return trainer.params, trace


def masked_accuracy(params: ModelParams, instances: Sequence[MaskedInstance]) -> float:
    """Top-1 accuracy at the labelled positions (inference mode)."""
    hits = total = 0
    for start in range(0, len(instances), 64):
        chunk = [i for i in instances[start:start + 64] if i.labels]
        if not chunk:
            continue
        ids = pad_batch([i.input_ids for i in chunk])
        rows, cols, targets = _label_arrays(chunk)
        h, _ = _encode(params, ids)
        logits = h[rows, cols] @ params["tok_emb"].T + params["out_bias"]
        hits += int((logits.argmax(-1) == targets).sum())
        total += len(targets)
    return hits / total if total else 0.0


# ---------------------------------------------------------------------------
# unmasking

@dataclass(frozen=True)
class UnmaskResult:
    ranked: tuple[tuple[int, float], ...]

    @property
    def top(self) -> tuple[int, float]:
        return self.ranked[0]


def _mask_position(ids: Sequence[int]) -> int:
    where = [i for i, t in enumerate(ids) if t == MASK]
    if not where:
        raise NoMask("query has no [MASK]")
    if len(where) > 1:
        raise MultipleMasks(f"query has {len(where)} [MASK] tokens")
    return where[0]


def mask_log_probs(params: ModelParams, queries: Sequence[Sequence[int]],
                   batch_size: int = 256) -> np.ndarray:
    """Full-vocabulary log-softmax at the single ``[MASK]`` of each query,
    shape ``(len(queries), vocab_size)``."""
    positions = np.array([_mask_position(q) for q in queries], dtype=np.int64)
    out = np.empty((len(queries), params.cfg.vocab_size), dtype=params.dtype)
    for start in range(0, len(queries), batch_size):
        chunk = queries[start:start + batch_size]
        ids = pad_batch(chunk)
        _check_ids(params, ids)
        h, _ = _encode(params, ids)
        rows = np.arange(len(chunk))
        hsel = h[rows, positions[start:start + batch_size]]
        out[start:start + len(chunk)] = _log_softmax(hsel @ params["tok_emb"].T
                                                     + params["out_bias"])
    return out


def rank_candidates(scores: np.ndarray, candidates: Iterable[int]) -> UnmaskResult:
    cands = sorted(set(int(c) for c in candidates))
    ranked = sorted(((c, float(scores[c])) for c in cands), key=lambda cs: (-cs[1], cs[0]))
    return UnmaskResult(tuple(ranked))


def unmask(params: ModelParams, token_ids: Sequence[int], candidates: Iterable[int]) -> UnmaskResult:
    cands = list(candidates)
    if not cands:
        raise ValueError("candidate set is empty")
    scores = mask_log_probs(params, [list(token_ids)])[0]
    return rank_candidates(scores, cands)


# ---------------------------------------------------------------------------
# persistence

def _u32(n: int) -> bytes:
    return struct.pack("<I", n)


def model_to_bytes(params: ModelParams, vocab: Vocab) -> bytes:
    cfg = params.cfg
    if len(vocab) != cfg.vocab_size:
        raise ValueError("vocab size does not match model config")
    parts = [FORMAT_MAGIC, _u32(FORMAT_VERSION)]
    cfg_bytes = json.dumps(asdict(cfg), sort_keys=True).encode()
    parts += [_u32(len(cfg_bytes)), cfg_bytes, _u32(len(vocab))]
    for tok in vocab.tokens:
        b = tok.encode("utf-8")
        parts += [_u32(len(b)), b]
    names = tensor_names(cfg)
    parts.append(_u32(len(names)))
    for name in names:
        arr = np.ascontiguousarray(params.tensors[name], dtype="<f4")
        nb = name.encode()
        parts += [_u32(len(nb)), nb, _u32(arr.ndim)] + [_u32(d) for d in arr.shape]
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data, self.pos = data, pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptFile("unexpected end of model data")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def model_from_bytes(data: bytes) -> tuple[ModelParams, Vocab]:
    if len(data) < len(FORMAT_MAGIC) + 4 or not data.startswith(FORMAT_MAGIC):
        raise CorruptFile("not a model file (bad magic)")
    version = struct.unpack_from("<I", data, len(FORMAT_MAGIC))[0]
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, expected {FORMAT_VERSION}")
    if len(data) < 44:
        raise CorruptFile("model file truncated")
    body, checksum = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != checksum:
        raise CorruptFile("checksum mismatch (truncated or damaged file)")
    r = _Reader(body, len(FORMAT_MAGIC) + 4)
    try:
        cfg = ModelConfig(**json.loads(r.take(r.u32()).decode()))
        vocab = Vocab([r.take(r.u32()).decode("utf-8") for _ in range(r.u32())])
        tensors = {}
        for _ in range(r.u32()):
            name = r.take(r.u32()).decode()
            shape = tuple(r.u32() for _ in range(r.u32()))
            count = int(np.prod(shape)) if shape else 1
            tensors[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape) \
                .astype(np.float32)
    except (ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptFile(str(exc)) from exc
    expected = tensor_shapes(cfg)
    if list(tensors) != list(expected) or any(tensors[k].shape != s for k, s in expected.items()):
        raise CorruptFile("tensor table does not match config")
    return ModelParams(cfg, tensors), vocab


def save_model(params: ModelParams, vocab: Vocab, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(params, vocab))


def load_model(path) -> tuple[ModelParams, Vocab]:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
