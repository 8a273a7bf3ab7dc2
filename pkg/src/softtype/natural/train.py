"""Training the name -> type classifier with Adam on mean negative log-likelihood."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import TrainingDivergedError
from ..logic import TypeUniverse
from .model import LstmModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelledCorpus:
    pairs: tuple[tuple[str, int], ...]
    universe: TypeUniverse

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(n), int(t)) for n, t in self.pairs))
        for name, t in self.pairs:
            if not name:
                raise ValueError("corpus names must be nonempty")
            if not 0 <= t < len(self.universe):
                raise ValueError(f"type index {t} out of range for {name!r}")

    def __len__(self):
        return len(self.pairs)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.pairs]

    @property
    def labels(self) -> np.ndarray:
        return np.array([t for _, t in self.pairs], dtype=np.int64)

    def subset(self, indices) -> LabelledCorpus:
        return LabelledCorpus(tuple(self.pairs[i] for i in indices), self.universe)


def read_corpus(path, universe: TypeUniverse | None = None) -> LabelledCorpus:
    """Read ``name<TAB>type`` lines.  Unknown types extend the universe unless one is given."""
    pairs, type_names = [], list(universe.names) if universe else []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"{path}:{lineno}: expected 'name<TAB>type'")
        name, ty = parts[0], parts[1].strip()
        if ty not in type_names:
            if universe is not None:
                raise ValueError(f"{path}:{lineno}: type {ty!r} not in universe {universe.names}")
            type_names.append(ty)
        pairs.append((name, type_names.index(ty)))
    return LabelledCorpus(tuple(pairs), universe or TypeUniverse(tuple(type_names)))


def write_corpus(corpus: LabelledCorpus, path) -> None:
    lines = [f"{n}\t{corpus.universe.names[t]}" for n, t in corpus.pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class TrainConfig:
    embed_dim: int = 32
    hidden_dim: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 100
    max_steps: int | None = None
    val_fraction: float = 0.1
    clip_norm: float | None = 5.0
    seed: int = 0

    @classmethod
    def full_scale(cls, **kw) -> TrainConfig:
        return cls(embed_dim=128, hidden_dim=64, **kw)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr, beta1, beta2, eps):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def nll(model: LstmModel, names: Sequence[str], labels) -> float:
    """Mean negative log-likelihood of the labels."""
    logp = model.forward_batch(list(names))
    return float(-np.mean(logp[np.arange(len(labels)), labels]))


def nll_and_grads(model: LstmModel, names: Sequence[str], labels):
    logp, cache = model.forward_batch(list(names), keep_cache=True)
    n = len(labels)
    loss = float(-np.mean(logp[np.arange(n), labels]))
    dlogp = np.zeros_like(logp)
    dlogp[np.arange(n), labels] = -1.0 / n
    return loss, model.backward(cache, dlogp)


def accuracy(model: LstmModel, names: Sequence[str], labels) -> float:
    if len(names) == 0:
        return float("nan")
    pred = np.argmax(model.forward_batch(list(names)), axis=1)
    return float(np.mean(pred == np.asarray(labels)))


@dataclass
class TrainingRun:
    model: LstmModel
    train_nll: list[float] = field(default_factory=list)
    val_nll: list[float] = field(default_factory=list)
    best_epoch: int = -1
    steps: int = 0


def split_indices(n: int, fraction: float, rng: np.random.Generator):
    """(train, held_out) index arrays; held-out is empty when fraction is 0 or n < 2."""
    order = rng.permutation(n)
    k = int(round(n * fraction)) if n >= 2 else 0
    return np.sort(order[k:]), np.sort(order[:k])


def fit(corpus: LabelledCorpus, cfg: TrainConfig = TrainConfig()) -> TrainingRun:
    """Train with Adam; keep the parameters with the best validation NLL.

    Without a validation split (tiny corpora), the training NLL selects instead.
    """
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = split_indices(len(corpus), cfg.val_fraction, rng)
    names = corpus.names
    labels = corpus.labels
    tr_names = [names[i] for i in train_idx]
    tr_labels = labels[train_idx]
    if len(val_idx):
        va_names, va_labels = [names[i] for i in val_idx], labels[val_idx]
    else:
        va_names, va_labels = tr_names, tr_labels

    model = LstmModel.initialise(corpus.universe.names, cfg.embed_dim, cfg.hidden_dim, seed=cfg.seed)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    run = TrainingRun(model=model.copy())
    best = np.inf
    steps = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(tr_names))
        total, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            if cfg.max_steps is not None and steps >= cfg.max_steps:
                break
            batch = order[start:start + cfg.batch_size]
            loss, grads = nll_and_grads(model, [tr_names[i] for i in batch], tr_labels[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss {loss} at epoch {epoch}, step {steps}")
            if cfg.clip_norm is not None:
                norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if norm > cfg.clip_norm:
                    for g in grads.values():
                        g *= cfg.clip_norm / norm
            opt.step(model.params, grads)
            total += loss * len(batch)
            count += len(batch)
            steps += 1
        if count == 0:
            break
        run.train_nll.append(total / count)
        val = nll(model, va_names, va_labels)
        if not np.isfinite(val):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        run.val_nll.append(val)
        log.info("epoch %d: train nll %.4f, val nll %.4f", epoch, total / count, val)
        if val < best:
            best = val
            run.model = model.copy()
            run.best_epoch = epoch
    run.steps = steps
    return run


def train_model(corpus: LabelledCorpus, cfg: TrainConfig = TrainConfig()) -> LstmModel:
    return fit(corpus, cfg).model
