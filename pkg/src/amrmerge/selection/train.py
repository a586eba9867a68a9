"""Adam training of the attention classifier, one document graph per step."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ..merge import DocumentGraph
from .gat import GatModel, attention_mask, backward, forward, init_model, loss_and_probs

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 128
    patience: int = 3
    d_emb: int = 300
    d_hid: int = 256
    init_scale: float = 1.0
    threshold: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LabeledGraph:
    graph: DocumentGraph
    features: np.ndarray
    labels: np.ndarray
    mask: np.ndarray = field(default=None)
    doc_id: str = ""

    def __post_init__(self) -> None:
        if self.mask is None:
            self.mask = attention_mask(len(self.graph), self.graph.undirected_neighbors())
        self.labels = np.asarray(self.labels, dtype=int)


class EpochRecord(NamedTuple):
    epoch: int
    train_loss: float
    dev_loss: float


@dataclass
class TrainResult:
    model: GatModel
    history: list[EpochRecord]
    best_epoch: int
    stopped_early: bool


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def mean_loss(model: GatModel, graphs: Sequence[LabeledGraph]) -> float:
    graphs = [g for g in graphs if len(g.labels)]
    if not graphs:
        return float("nan")
    return float(np.mean([loss_and_probs(model, g.features, g.mask, g.labels)[0] for g in graphs]))


def gat_train(
    train: Sequence[LabeledGraph],
    dev: Sequence[LabeledGraph] = (),
    config: TrainConfig | None = None,
    model: GatModel | None = None,
) -> TrainResult:
    """Train with cross-entropy and Adam, batch size one graph.

    Stops once the monitored loss (dev if given, else train) has not improved
    for ``patience`` consecutive epochs, and returns the best-epoch weights.
    """
    config = config or TrainConfig()
    train = [g for g in train if len(g.labels)]
    if not train:
        raise ValueError("no training graphs")
    d_in = train[0].features.shape[1]
    if model is None:
        model = init_model(d_in, config.d_hid, seed=config.seed, init_scale=config.init_scale)
    model = model.copy()
    model.meta.update({"train_config": config.to_dict()})
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(model.params, config.lr, config.beta1, config.beta2, config.eps)

    history: list[EpochRecord] = []
    best = (np.inf, 0, model.copy())
    stale = 0
    stopped = False
    for epoch in range(1, config.max_epochs + 1):
        losses = []
        for idx in rng.permutation(len(train)):
            g = train[idx]
            loss, probs, cache = loss_and_probs(model, g.features, g.mask, g.labels)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss {loss} at epoch {epoch} on graph {g.doc_id or idx}")
            grads = backward(model, probs, cache, g.labels)
            opt.step(model.params, grads)
            losses.append(loss)
        train_loss = float(np.mean(losses))
        dev_loss = mean_loss(model, dev) if dev else float("nan")
        if dev and not np.isfinite(dev_loss):
            raise NumericalError(f"non-finite dev loss at epoch {epoch}")
        history.append(EpochRecord(epoch, train_loss, dev_loss))
        log.debug("epoch %d train %.6f dev %.6f", epoch, train_loss, dev_loss)
        monitored = dev_loss if dev else train_loss
        if monitored < best[0]:
            best = (monitored, epoch, model.copy())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped = True
                break
    return TrainResult(best[2], history, best[1], stopped)


def predict_proba(model: GatModel, graph: LabeledGraph) -> np.ndarray:
    if not len(graph.labels):
        return np.zeros(0)
    return forward(model, graph.features, graph.mask)[:, 1]


def predict(model: GatModel, graph: LabeledGraph, threshold: float = 0.5) -> np.ndarray:
    # ties (e.g. an all-zero model) are not selected
    return (predict_proba(model, graph) > threshold).astype(int)
