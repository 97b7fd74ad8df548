"""Reference MLP (ReLU hidden layers, softmax cross-entropy) over a flat
parameter vector, with hand-derived gradients.

Flattening order: for each layer in turn, weight matrix (fan_in x fan_out,
row-major) then bias.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from app.exceptions import ContractViolation


@dataclass(frozen=True)
class ModelArch:
    layer_sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ContractViolation(f"invalid layer sizes {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

    @classmethod
    def mlp(cls, input_dim: int, classes: int, hidden: int = 64) -> "ModelArch":
        return cls((input_dim, hidden, classes))

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def shapes(self) -> List[Tuple[Tuple[int, int], Tuple[int]]]:
        return [((a, b), (b,)) for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:])]

    @property
    def param_count(self) -> int:
        return sum(a * b + b for (a, b), _ in self.shapes)

    def unpack(self, params: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Views (W, b) per layer into the flat vector."""
        if params.shape[0] != self.param_count:
            raise ContractViolation(
                f"parameter vector has {params.shape[0]} entries, architecture needs {self.param_count}"
            )
        layers, offset = [], 0
        for (a, b), _ in self.shapes:
            W = params[offset:offset + a * b].reshape(a, b)
            offset += a * b
            bias = params[offset:offset + b]
            offset += b
            layers.append((W, bias))
        return layers


@dataclass(frozen=True)
class GlobalModel:
    params: np.ndarray
    arch: ModelArch

    def __post_init__(self):
        p = np.array(self.params, dtype=np.float64).reshape(-1)
        if p.shape[0] != self.arch.param_count:
            raise ContractViolation(
                f"model has {p.shape[0]} parameters, architecture needs {self.arch.param_count}"
            )
        if not np.all(np.isfinite(p)):
            raise ContractViolation("model parameters are not finite")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    def with_params(self, params: np.ndarray) -> "GlobalModel":
        return GlobalModel(params=params, arch=self.arch)


def init_model(arch: ModelArch, seed: int) -> GlobalModel:
    """He-normal weights, zero biases."""
    rng = np.random.default_rng([seed, 7919])
    parts = []
    for (a, b), _ in arch.shapes:
        parts.append(rng.normal(0.0, np.sqrt(2.0 / a), size=a * b))
        parts.append(np.zeros(b))
    return GlobalModel(params=np.concatenate(parts), arch=arch)


def logits(arch: ModelArch, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    layers = arch.unpack(params)
    h = X
    for W, b in layers[:-1]:
        h = np.maximum(h @ W + b, 0.0)
    W, b = layers[-1]
    return h @ W + b


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def cross_entropy(arch: ModelArch, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    lp = log_softmax(logits(arch, params, X))
    return float(-lp[np.arange(len(y)), y].mean())


def loss_and_grad(
    arch: ModelArch, params: np.ndarray, X: np.ndarray, y: np.ndarray
) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient as a flat vector."""
    layers = arch.unpack(params)

    activations = [X]
    h = X
    for W, b in layers[:-1]:
        h = np.maximum(h @ W + b, 0.0)
        activations.append(h)
    W_out, b_out = layers[-1]
    lp = log_softmax(h @ W_out + b_out)

    m = len(y)
    rows = np.arange(m)
    loss = float(-lp[rows, y].mean())

    delta = np.exp(lp)
    delta[rows, y] -= 1.0
    delta /= m

    grads = []
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        a_in = activations[li]
        grads.append((a_in.T @ delta, delta.sum(axis=0)))
        if li > 0:
            delta = (delta @ W.T) * (activations[li] > 0.0)

    flat = []
    for gW, gb in reversed(grads):
        flat.append(gW.reshape(-1))
        flat.append(gb)
    return loss, np.concatenate(flat)
