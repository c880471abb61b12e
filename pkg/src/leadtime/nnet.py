"""Feed-forward network regressor: ReLU hidden layers, identity output,
mean-squared-error loss, plain mini-batch gradient descent.

Initialization is uniform in +/- sqrt(6 / (fan_in + fan_out)) with zero
biases, seeded, and batch order is drawn from the same seeded stream, so
training is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import warn_if_unstandardized


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; retry with a smaller step size."""


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...]
    epochs: int
    step_size: float
    batch_size: int
    seed: int

    def __post_init__(self) -> None:
        if any(int(h) < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]  # per layer, (fan_out,)
    config: TrainConfig

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(
            w.shape[1] for w in self.weights
        )

    def to_json_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "config": {
                "hidden": list(self.config.hidden),
                "epochs": self.config.epochs,
                "step_size": self.config.step_size,
                "batch_size": self.config.batch_size,
                "seed": self.config.seed,
            },
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "MlpModel":
        cfg = payload["config"]
        return cls(
            weights=[np.asarray(w, dtype=np.float64) for w in payload["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in payload["biases"]],
            config=TrainConfig(
                hidden=tuple(cfg["hidden"]),
                epochs=int(cfg["epochs"]),
                step_size=float(cfg["step_size"]),
                batch_size=int(cfg["batch_size"]),
                seed=int(cfg["seed"]),
            ),
        )


def _init_params(
    d: int, hidden: tuple[int, ...], rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    sizes = (d,) + tuple(hidden) + (1,)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(
    weights: list[np.ndarray], biases: list[np.ndarray], X: np.ndarray
) -> np.ndarray:
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
    return (h @ weights[-1] + biases[-1]).ravel()


def mse_loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    err = _forward(model.weights, model.biases, X) - y
    return float(np.mean(err * err))


def loss_and_grads(
    model: MlpModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """MSE loss plus its gradient w.r.t. every weight matrix and bias."""
    n_layers = len(model.weights)
    acts = [X]
    zs = []
    h = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = h @ W + b
        zs.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    out = (h @ model.weights[-1] + model.biases[-1]).ravel()
    err = out - y
    loss = float(np.mean(err * err))

    grads_w: list[np.ndarray | None] = [None] * n_layers
    grads_b: list[np.ndarray | None] = [None] * n_layers
    delta = (2.0 / len(y)) * err[:, None]
    for layer in reversed(range(n_layers)):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (zs[layer - 1] > 0.0)
    return loss, grads_w, grads_b  # type: ignore[return-value]


def fit_mlp(
    X: np.ndarray, y: np.ndarray, config: TrainConfig
) -> tuple[MlpModel, list[float]]:
    """Mini-batch gradient descent on MSE; returns the model and the
    full-training-set loss recorded after every epoch."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    warn_if_unstandardized(X, "fit_mlp")
    n, d = X.shape
    rng = np.random.default_rng(config.seed)
    weights, biases = _init_params(d, config.hidden, rng)
    model = MlpModel(weights=weights, biases=biases, config=config)

    history: list[float] = []
    full_batch = config.batch_size >= n
    for _ in range(config.epochs):
        order = np.arange(n) if full_batch else rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads_w, grads_b = loss_and_grads(model, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss diverged (step_size={config.step_size}); "
                    "try a smaller step size"
                )
            for layer in range(len(weights)):
                weights[layer] -= config.step_size * grads_w[layer]
                biases[layer] -= config.step_size * grads_b[layer]
        epoch_loss = mse_loss(model, X, y)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"loss diverged (step_size={config.step_size}); "
                "try a smaller step size"
            )
        history.append(epoch_loss)
    return model, history


def predict_mlp(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"design width {X.shape[1] if X.ndim == 2 else '?'} does not match "
            f"network input size {model.weights[0].shape[0]}"
        )
    out = _forward(model.weights, model.biases, X)
    if not np.all(np.isfinite(out)):
        raise ValueError("network produced non-finite predictions")
    return out
