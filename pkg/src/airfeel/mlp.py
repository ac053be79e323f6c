"""One-hidden-layer perceptron with hand-rolled gradients.

The model is inputs -> hidden (ReLU) -> class scores, trained with
softmax cross-entropy.  Parameters live in a single flat vector so that
aggregation schemes can treat the model as an anonymous sequence of
reals.  Flattening order: W1 (n_inputs x n_hidden, row-major), b1,
W2 (n_hidden x n_classes, row-major), b2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MlpArch:
    n_inputs: int
    n_hidden: int
    n_classes: int

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_hidden < 1 or self.n_classes < 2:
            raise ValueError(
                f"invalid arch ({self.n_inputs}, {self.n_hidden}, {self.n_classes})"
            )

    @property
    def layout(self) -> tuple[tuple[int, ...], ...]:
        return (
            (self.n_inputs, self.n_hidden),
            (self.n_hidden,),
            (self.n_hidden, self.n_classes),
            (self.n_classes,),
        )

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for shape in self.layout)


@dataclass
class ModelVector:
    """All weights and biases of one model, flattened."""

    values: np.ndarray
    layout: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = sum(int(np.prod(s)) for s in self.layout)
        if self.values.size != expected:
            raise ValueError(f"expected {expected} parameters, got {self.values.size}")

    def copy(self) -> "ModelVector":
        return ModelVector(self.values.copy(), self.layout)


def arch_of(model: ModelVector) -> MlpArch:
    (n_in, n_hid), _, (_, n_cls), _ = model.layout
    return MlpArch(n_in, n_hid, n_cls)


def _unpack(model: ModelVector):
    """Views of W1, b1, W2, b2 into the flat vector."""
    parts = []
    offset = 0
    for shape in model.layout:
        size = int(np.prod(shape))
        parts.append(model.values[offset : offset + size].reshape(shape))
        offset += size
    return parts


def init_model(arch: MlpArch, seed) -> ModelVector:
    """Weights uniform in +/- 1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    values = np.zeros(arch.n_params)
    model = ModelVector(values, arch.layout)
    w1, _, w2, _ = _unpack(model)
    w1[...] = rng.uniform(-1.0, 1.0, w1.shape) / np.sqrt(arch.n_inputs)
    w2[...] = rng.uniform(-1.0, 1.0, w2.shape) / np.sqrt(arch.n_hidden)
    return model


def _forward(model: ModelVector, features: np.ndarray):
    w1, b1, w2, b2 = _unpack(model)
    hidden = np.maximum(features @ w1 + b1, 0.0)
    logits = hidden @ w2 + b2
    return hidden, logits


def predict(model: ModelVector, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties break to the lowest class index."""
    _, logits = _forward(model, np.asarray(features, dtype=float))
    return np.argmax(logits, axis=1)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss(model: ModelVector, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy over the batch."""
    _, logits = _forward(model, np.asarray(features, dtype=float))
    logp = _log_softmax(logits)
    return float(-logp[np.arange(len(labels)), labels].mean())


def loss_and_grad(model: ModelVector, features: np.ndarray, labels: np.ndarray):
    """Loss plus its gradient as a flat vector matching the layout."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    batch = len(labels)
    w1, b1, w2, b2 = _unpack(model)

    hidden, logits = _forward(model, features)
    logp = _log_softmax(logits)
    loss_value = float(-logp[np.arange(batch), labels].mean())

    dlogits = np.exp(logp)
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch

    grad = np.empty_like(model.values)
    gmodel = ModelVector(grad, model.layout)
    gw1, gb1, gw2, gb2 = _unpack(gmodel)
    gw2[...] = hidden.T @ dlogits
    gb2[...] = dlogits.sum(axis=0)
    dhidden = dlogits @ w2.T
    dhidden[hidden <= 0.0] = 0.0
    gw1[...] = features.T @ dhidden
    gb1[...] = dhidden.sum(axis=0)
    return loss_value, grad
