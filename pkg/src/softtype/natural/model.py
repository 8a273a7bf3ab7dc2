"""Character-level LSTM classifier over identifier names, in plain numpy.

Forward and backward passes are written out by hand (backpropagation through
time).  Batches of names with different lengths are processed together: each
sequence is left-aligned and a mask freezes its state once it has ended, so
the final state of every row is the state after its last character.

Checkpoint layout (JSON, UTF-8)::

    {"format": "softtype-lstm", "version": 1,
     "dims": {"vocab": V, "embed": D, "hidden": H, "types": T},
     "types": [...], "alphabet": "...",
     "params": {"<name>": {"shape": [...], "data": [...flat row-major floats...]}}}

Floats are written with ``repr`` precision so a save/load cycle is exact.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import CheckpointError

CHECKPOINT_FORMAT = "softtype-lstm"
CHECKPOINT_VERSION = 1
PARAM_NAMES = ("embedding", "w_input", "w_hidden", "b_gates", "w_out", "b_out")


class CharVocab:
    """Printable ASCII plus one out-of-vocabulary slot at index 0."""

    def __init__(self, alphabet: str = string.printable[:95]):
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet has repeated characters")
        self.alphabet = alphabet
        self._index = {ch: i + 1 for i, ch in enumerate(alphabet)}

    OOV = 0

    def __len__(self):
        return len(self.alphabet) + 1

    def encode(self, name: str) -> list[int]:
        return [self._index.get(ch, self.OOV) for ch in name]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


@dataclass
class ForwardCache:
    steps: list
    chars: np.ndarray
    mask: np.ndarray
    h_final: np.ndarray
    logp: np.ndarray


class LstmModel:
    """Embedding -> single-layer LSTM -> affine head -> log-softmax.

    Gate blocks in `w_input`, `w_hidden` and `b_gates` are ordered
    input, forget, cell-candidate, output.
    """

    def __init__(self, params: dict[str, np.ndarray], types: Sequence[str], vocab: CharVocab | None = None):
        self.vocab = vocab or CharVocab()
        self.types = tuple(types)
        self.params = {k: np.asarray(params[k], dtype=float) for k in PARAM_NAMES}
        self._check()

    @property
    def embed_dim(self):
        return self.params["embedding"].shape[1]

    @property
    def hidden_dim(self):
        return self.params["w_hidden"].shape[1]

    @property
    def num_types(self):
        return len(self.types)

    def _check(self):
        p = self.params
        V, D = p["embedding"].shape
        H = p["w_hidden"].shape[1]
        T = len(self.types)
        expected = {
            "embedding": (len(self.vocab), D),
            "w_input": (4 * H, D),
            "w_hidden": (4 * H, H),
            "b_gates": (4 * H,),
            "w_out": (T, H),
            "b_out": (T,),
        }
        for k, shape in expected.items():
            if p[k].shape != shape:
                raise CheckpointError(f"parameter {k} has shape {p[k].shape}, expected {shape}")
        if not all(np.all(np.isfinite(v)) for v in p.values()):
            raise CheckpointError("model parameters must be finite")

    @classmethod
    def initialise(cls, types, embed_dim=32, hidden_dim=32, seed=0, vocab=None):
        vocab = vocab or CharVocab()
        rng = np.random.default_rng(seed)
        k = 1.0 / np.sqrt(hidden_dim)
        H = hidden_dim

        def u(*shape):
            return rng.uniform(-k, k, size=shape)

        b = u(4 * H)
        b[H:2 * H] = 1.0  # forget gate
        params = {
            "embedding": u(len(vocab), embed_dim),
            "w_input": u(4 * H, embed_dim),
            "w_hidden": u(4 * H, H),
            "b_gates": b,
            "w_out": u(len(types), H),
            "b_out": u(len(types)),
        }
        return cls(params, types, vocab)

    @classmethod
    def zeros(cls, types, embed_dim=32, hidden_dim=32, vocab=None):
        vocab = vocab or CharVocab()
        H = hidden_dim
        params = {
            "embedding": np.zeros((len(vocab), embed_dim)),
            "w_input": np.zeros((4 * H, embed_dim)),
            "w_hidden": np.zeros((4 * H, H)),
            "b_gates": np.zeros(4 * H),
            "w_out": np.zeros((len(types), H)),
            "b_out": np.zeros(len(types)),
        }
        return cls(params, types, vocab)

    def copy(self) -> LstmModel:
        return LstmModel({k: v.copy() for k, v in self.params.items()}, self.types, self.vocab)

    # -- forward / backward -------------------------------------------------

    def encode_batch(self, names: Sequence[str]):
        encoded = [self.vocab.encode(n) for n in names]
        if any(len(e) == 0 for e in encoded):
            raise ValueError("identifier names must be nonempty")
        L = max(len(e) for e in encoded)
        chars = np.zeros((L, len(names)), dtype=np.int64)
        mask = np.zeros((L, len(names)), dtype=bool)
        for b, e in enumerate(encoded):
            chars[: len(e), b] = e
            mask[: len(e), b] = True
        return chars, mask

    def forward_batch(self, names: Sequence[str], keep_cache: bool = False):
        chars, mask = self.encode_batch(names)
        p = self.params
        H = self.hidden_dim
        B = len(names)
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        steps = []
        x_all = p["embedding"][chars]  # (L, B, D)
        pre_all = x_all @ p["w_input"].T + p["b_gates"]
        for t in range(chars.shape[0]):
            z = pre_all[t] + h @ p["w_hidden"].T
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            m = mask[t][:, None]
            if keep_cache:
                steps.append((h, c, i, f, g, o, tc))
            h = np.where(m, h_new, h)
            c = np.where(m, c_new, c)
        logits = h @ p["w_out"].T + p["b_out"]
        logp = _log_softmax(logits)
        if keep_cache:
            return logp, ForwardCache(steps, chars, mask, h, logp)
        return logp

    def forward(self, name: str) -> np.ndarray:
        """Log-probability vector over the model's types for one name."""
        if not name:
            raise ValueError("identifier names must be nonempty")
        return self.forward_batch([name])[0]

    def backward(self, cache: ForwardCache, dlogp: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of sum(dlogp * logp) with respect to every parameter."""
        p = self.params
        prob = np.exp(cache.logp)
        # through log-softmax
        dlogits = dlogp - prob * dlogp.sum(axis=1, keepdims=True)
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        grads["w_out"] = dlogits.T @ cache.h_final
        grads["b_out"] = dlogits.sum(axis=0)
        dh = dlogits @ p["w_out"]
        dc = np.zeros_like(dh)
        x_all = p["embedding"][cache.chars]
        dx_all = np.zeros_like(x_all)
        for t in range(len(cache.steps) - 1, -1, -1):
            h_prev, c_prev, i, f, g, o, tc = cache.steps[t]
            m = cache.mask[t][:, None]
            dh_t = np.where(m, dh, 0.0)
            dc_t = np.where(m, dc, 0.0)
            do = dh_t * tc
            dc_t = dc_t + dh_t * o * (1.0 - tc * tc)
            dz = np.concatenate(
                [
                    dc_t * g * i * (1.0 - i),
                    dc_t * c_prev * f * (1.0 - f),
                    dc_t * i * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            grads["w_input"] += dz.T @ x_all[t]
            grads["w_hidden"] += dz.T @ h_prev
            grads["b_gates"] += dz.sum(axis=0)
            dx_all[t] = dz @ p["w_input"]
            # ended sequences pass their state gradient through unchanged
            dh = np.where(m, dz @ p["w_hidden"], dh)
            dc = np.where(m, dc_t * f, dc)
        L, B, D = x_all.shape
        np.add.at(grads["embedding"], cache.chars.reshape(-1), dx_all.reshape(L * B, D))
        return grads

    # -- checkpoints --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "dims": {
                "vocab": len(self.vocab),
                "embed": self.embed_dim,
                "hidden": self.hidden_dim,
                "types": self.num_types,
            },
            "types": list(self.types),
            "alphabet": self.vocab.alphabet,
            "params": {
                k: {"shape": list(v.shape), "data": [float(x) for x in v.reshape(-1)]}
                for k, v in self.params.items()
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> LstmModel:
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError("not a softtype LSTM checkpoint")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
        try:
            dims = doc["dims"]
            vocab = CharVocab(doc["alphabet"])
            types = doc["types"]
            params = {}
            for k in PARAM_NAMES:
                entry = doc["params"][k]
                params[k] = np.array(entry["data"], dtype=float).reshape(entry["shape"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed checkpoint: {exc}") from None
        if dims.get("vocab") != len(vocab) or dims.get("types") != len(types):
            raise CheckpointError("checkpoint header does not match its vocabulary / types")
        model = cls(params, types, vocab)
        if (model.embed_dim, model.hidden_dim) != (dims.get("embed"), dims.get("hidden")):
            raise CheckpointError("checkpoint header dimensions do not match its parameters")
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> LstmModel:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_json(doc)
