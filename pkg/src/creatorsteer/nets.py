"""Small feed-forward networks with hand-written backprop.

Kept deliberately tiny: tanh hidden layers, linear output, float64
throughout. Analytic gradients are verified against central finite
differences in the test suite, and all updates are bitwise reproducible
for a fixed seed.
"""

from __future__ import annotations

import numpy as np


class MLP:
    """Fully connected net: x @ W1 + b1 -> tanh -> ... -> output.

    The output layer is linear unless `tanh_out` is set (used when the net
    serves as a feature trunk).
    """

    def __init__(self, sizes: list[int], rng=None, tanh_out: bool = False):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.tanh_out = tanh_out
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            w = rng.normal(0.0, scale, size=(fan_in, fan_out)) if rng is not None \
                else np.zeros((fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def _act(self, i: int) -> bool:
        return i < len(self.weights) - 1 or self.tanh_out

    def forward(self, x: np.ndarray):
        """Returns (output, cache); x has shape (batch, in)."""
        activations = [np.atleast_2d(x)]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = activations[-1] @ w + b
            a = np.tanh(z) if self._act(i) else z
            activations.append(a)
        return activations[-1], activations

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, activations: list[np.ndarray], grad_out: np.ndarray):
        """Gradients of a scalar loss wrt all parameters.

        `grad_out` is dLoss/dOutput for the batch in `activations`.
        Returns [(dW, db), ...] in layer order.
        """
        grads = [None] * len(self.weights)
        delta = np.atleast_2d(grad_out)
        if self.tanh_out:
            delta = delta * (1.0 - activations[-1] ** 2)
        for i in reversed(range(len(self.weights))):
            a_in = activations[i]
            grads[i] = (a_in.T @ delta, delta.sum(axis=0))
            if i > 0:
                # tanh' = 1 - tanh^2, evaluated at the stored activation
                delta = (delta @ self.weights[i].T) * (1.0 - activations[i] ** 2)
        return grads

    # -- parameter plumbing (checkpoints, finite differences, optimizers) --

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def get_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_vector(self, vec: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            p[...] = vec[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != len(vec):
            raise ValueError("parameter vector size mismatch")

    def copy(self) -> "MLP":
        clone = MLP(self.sizes, tanh_out=self.tanh_out)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": [a.tolist() for a in self.m], "v": [a.tolist() for a in self.v]}

    def restore(self, doc: dict) -> None:
        self.t = doc["t"]
        self.m = [np.array(a) for a in doc["m"]]
        self.v = [np.array(a) for a in doc["v"]]


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
