"""Hand-rolled tanh MLPs over a single flat parameter vector, plus Adam."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from ..path_metrics import LayerSegment


class Mlp:
    """Fully connected net ``in -> hidden... -> out`` with tanh (or relu) hidden units.

    Every weight matrix and bias is a view into ``self.params`` so the whole
    network can be flattened, archived and reloaded as one vector.  Layer
    segments are named ``Layer1``, ``Layer2``, ... with the output layer last.
    With ``squash=True`` the output goes through ``scale * tanh``.  Weights
    start uniform in ``+-1/sqrt(fan_in)``; `out_init` overrides that bound for
    the output layer.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        squash: bool = False,
        scale: float = 1.0,
        rng: Optional[np.random.Generator] = None,
        out_init: Optional[float] = None,
        activation: str = "tanh",
    ):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        if activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.sizes = tuple(int(s) for s in sizes)
        self.squash = squash
        self.scale = float(scale)
        segments = []
        offset = 0
        for k, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            length = fan_in * fan_out + fan_out
            segments.append(LayerSegment(f"Layer{k + 1}", offset, length))
            offset += length
        self.layers = tuple(segments)
        self.params = np.zeros(offset)
        self._bind()
        if rng is not None:
            for k, ((w, b), fan_in) in enumerate(zip(self.weights, self.sizes[:-1])):
                bound = 1.0 / np.sqrt(fan_in)
                if out_init is not None and k == len(self.weights) - 1:
                    bound = out_init
                w[...] = rng.uniform(-bound, bound, size=w.shape)
                b[...] = rng.uniform(-bound, bound, size=b.shape)
        self._cache = None

    def _bind(self) -> None:
        self.weights = []
        for seg, fan_in, fan_out in zip(self.layers, self.sizes[:-1], self.sizes[1:]):
            block = self.params[seg.offset:seg.stop]
            w = block[: fan_in * fan_out].reshape(fan_in, fan_out)
            b = block[fan_in * fan_out:]
            self.weights.append((w, b))

    @property
    def m(self) -> int:
        return self.params.shape[0]

    def get_params(self) -> np.ndarray:
        return self.params.copy()

    def set_params(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != self.params.shape:
            raise ShapeMismatch(f"expected {self.params.shape[0]} parameters, got {flat.shape}")
        self.params[...] = flat
        self._cache = None

    def copy(self) -> "Mlp":
        twin = Mlp(self.sizes, squash=self.squash, scale=self.scale, activation=self.activation)
        twin.set_params(self.params)
        return twin

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[np.newaxis, :] if single else x
        if h.shape[1] != self.sizes[0]:
            raise ShapeMismatch(f"input width {h.shape[1]} != {self.sizes[0]}")
        acts = [h]
        last = len(self.weights) - 1
        relu = self.activation == "relu"
        for k, (w, b) in enumerate(self.weights):
            z = h @ w + b
            if k < last:
                h = np.maximum(z, 0.0) if relu else np.tanh(z)
            else:
                h = np.tanh(z) if self.squash else z
            acts.append(h)
        self._cache = acts
        out = h * self.scale if self.squash else h
        return out[0] if single else out

    __call__ = forward

    def predict(self, x) -> np.ndarray:
        """Forward pass that leaves the backward cache untouched."""
        cache = self._cache
        try:
            return self.forward(x)
        finally:
            self._cache = cache

    def backward(self, upstream) -> tuple[np.ndarray, np.ndarray]:
        """Reverse-mode pass for the last forward batch.

        `upstream` is dL/d(output) with the output's shape.  Returns the flat
        parameter gradient and dL/d(input).  The gradient is summed over the
        batch, so callers fold any averaging into `upstream`.
        """
        if self._cache is None:
            raise StaleCache("backward called without a matching forward pass")
        acts = self._cache
        g = np.asarray(upstream, dtype=np.float64)
        if g.ndim == 1:
            g = g[np.newaxis, :]
        if g.shape != acts[-1].shape:
            raise ShapeMismatch(f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}")
        grad = np.zeros_like(self.params)
        last = len(self.weights) - 1
        if self.squash:
            g = g * self.scale
        for k in range(last, -1, -1):
            w, _ = self.weights[k]
            out = acts[k + 1]
            if k < last and self.activation == "relu":
                g = g * (out > 0.0)
            elif k < last or self.squash:
                g = g * (1.0 - out * out)
            seg = self.layers[k]
            fan_in, fan_out = w.shape
            block = grad[seg.offset:seg.stop]
            block[: fan_in * fan_out] = (acts[k].T @ g).ravel()
            block[fan_in * fan_out:] = g.sum(axis=0)
            g = g @ w.T
        single = np.asarray(upstream).ndim == 1
        return grad, (g[0] if single else g)


class Adam:
    """Adam with bias correction updating an :class:`Mlp` in place."""

    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, net: Mlp, grad: np.ndarray) -> None:
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        net.params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        net._cache = None
