"""Mini-batch training with RMSprop, early stopping, and run logging.

Determinism contract: for a fixed seed and dataset, every run visits the
same example order (epoch shuffles come from a generator keyed by
(seed, epoch)) and applies the same dropout masks (per-example streams
keyed by (seed, epoch, example index)), so two runs produce identical
histories and parameters.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .autodiff import Tape, backward, kl_divergence
from .errors import ConfigError, NumericError
from .layers import compute_class_weights
from .optim import RmsProp

BATCH_SIZE = 32
MAX_EPOCHS = 100
PATIENCE = 5


@dataclass
class TrainConfig:
    batch_size: int = BATCH_SIZE
    max_epochs: int = MAX_EPOCHS
    patience: int = PATIENCE
    lr: float = 1e-4
    seed: int = 0
    #: None resolves from the model variant at train time.
    use_class_weights: bool | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 0 <= self.patience < self.max_epochs:
            raise ConfigError(
                f"patience must be in [0, max_epochs), got {self.patience} with max_epochs {self.max_epochs}"
            )
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    seconds: float


@dataclass
class TrainHistory:
    """Per-epoch losses and timing, plus the epoch whose weights were kept."""

    epochs: list = field(default_factory=list)
    best_epoch: int = -1

    @property
    def train_losses(self):
        return [e.train_loss for e in self.epochs]

    @property
    def val_losses(self):
        return [e.val_loss for e in self.epochs]

    def write_log(self, path):
        """One JSON record per line: epoch, train_loss, val_loss, seconds."""
        with open(path, "w", encoding="utf-8") as f:
            for stats in self.epochs:
                f.write(json.dumps(asdict(stats)) + "\n")


def _example_loss(model, example, weights, train_mode=False, dropout_rng=None):
    flow = example.flow if model.config.uses_flow else None
    probs = model.forward(example.tokens, flow, train_mode=train_mode, dropout_rng=dropout_rng)
    return kl_divergence(example.target, probs, weights=weights)


def evaluate_loss(model, examples, class_weights=None):
    """Mean per-example KL in evaluation mode (no dropout, no recording)."""
    if not examples:
        raise ValueError("evaluate_loss requires at least one example")
    weights = class_weights.weights if class_weights is not None else None
    total = 0.0
    for example in examples:
        total += float(_example_loss(model, example, weights).data)
    return total / len(examples)


def _resolve_class_weights(model, train_examples, config, class_weights):
    use = config.use_class_weights
    if use is None:
        use = model.config.uses_class_weights
    if not use:
        return None
    if class_weights is not None:
        return class_weights
    if model.tag_vocab is None:
        raise ConfigError(
            "class-weighted training needs explicit class weights or a model with a tag vocabulary"
        )
    return compute_class_weights(train_examples, model.tag_vocab)


def train(model, train_examples, val_examples, config, class_weights=None, log_path=None):
    """Optimize the model; return it with its best-validation-epoch weights.

    Each epoch shuffles the training set, steps RMSprop once per batch on
    the mean (optionally class-weighted) KL, then measures validation
    loss.  Training stops after `patience + 1` consecutive epochs without
    a strict validation improvement, or at `max_epochs`.  The parameters
    snapshotted at the best epoch are restored before returning.
    """
    if not train_examples or not val_examples:
        raise ValueError("train requires non-empty train and validation sets")
    config.validate()
    active_weights = _resolve_class_weights(model, train_examples, config, class_weights)
    model.class_weights = active_weights if active_weights is not None else model.class_weights
    weight_vec = active_weights.weights if active_weights is not None else None

    params = model.parameters()
    optimizer = RmsProp(params, lr=config.lr)
    history = TrainHistory()
    best_val = np.inf
    best_state = {name: t.data.copy() for name, t in params.items()}
    stale_epochs = 0

    n = len(train_examples)
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = np.random.default_rng([config.seed, epoch]).permutation(n)
        epoch_loss = 0.0
        for batch_no, start in enumerate(range(0, n, config.batch_size), start=1):
            batch = order[start:start + config.batch_size]
            optimizer.zero_grad()
            scale = 1.0 / len(batch)
            for example_idx in batch:
                example = train_examples[int(example_idx)]
                rng = np.random.default_rng([config.seed, epoch, int(example_idx)])
                with Tape():
                    loss = _example_loss(model, example, weight_vec, train_mode=True, dropout_rng=rng)
                    scaled = loss * scale
                value = float(loss.data)
                if not np.isfinite(value):
                    raise NumericError(f"non-finite loss at epoch {epoch}, batch {batch_no}")
                backward(scaled)
                epoch_loss += value
            try:
                optimizer.step()
            except NumericError as e:
                raise NumericError(f"epoch {epoch}, batch {batch_no}: {e}") from None
            model.enforce_constraints()

        val_loss = evaluate_loss(model, val_examples, active_weights)
        history.epochs.append(EpochStats(
            epoch=epoch,
            train_loss=epoch_loss / n,
            val_loss=val_loss,
            seconds=time.perf_counter() - started,
        ))
        if val_loss < best_val:
            best_val = val_loss
            history.best_epoch = epoch
            best_state = {name: t.data.copy() for name, t in params.items()}
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs > config.patience:
                break

    for name, tensor in params.items():
        tensor.data = best_state[name]
    if log_path is not None:
        history.write_log(log_path)
    return model, history
