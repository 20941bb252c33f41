"""Network layers with hand-derived backward passes.

The classifier is a stack of four layer kinds:

* embedding lookup turning a padded id sequence into an n x k sentence
  matrix (the pad row is frozen at zero),
* a 1-D "valid" convolution sliding m window filters of width h over the
  sentence matrix, emitting one feature per (filter, position) so the
  output is a length n-h+1 sequence of m-channel steps,
* an LSTM consuming that sequence in order and returning its final
  hidden state,
* a dense softmax head producing the 3-class probability vector.

Every layer caches its forward intermediates and exposes ``backward``,
which converts an upstream gradient into parameter gradients and the
gradient with respect to the layer input.  All gradients are exact
derivatives of the composed scalar loss; the test suite checks each one
against central finite differences.
"""

from __future__ import annotations

import numpy as np

from . import tensor_core as tc

__all__ = [
    "IdOutOfRange",
    "SequenceTooShort",
    "EmptySequence",
    "NoCachedForward",
    "EmbeddingLayer",
    "ConvLayer",
    "LstmLayer",
    "DenseSoftmax",
    "cross_entropy",
    "cross_entropy_grad",
    "PAD_ID",
]

PAD_ID = 0

_LOG_EPS = 1e-12


class IdOutOfRange(IndexError):
    pass


class SequenceTooShort(ValueError):
    pass


class EmptySequence(ValueError):
    pass


class NoCachedForward(RuntimeError):
    """backward() was called before any forward() cached intermediates."""


def _activation(name: str):
    if name == "tanh":
        return tc.tanh
    if name == "sigmoid":
        return tc.sigmoid
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name: str, out: np.ndarray) -> np.ndarray:
    # derivative expressed through the cached activation output
    if name == "tanh":
        return 1.0 - out * out
    return out * (1.0 - out)


class EmbeddingLayer:
    """Lookup table of shape V x k; row PAD_ID is zero and never learns."""

    def __init__(self, table: np.ndarray):
        self.table = table
        self._cache = None

    def forward(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and int(ids.max()) >= len(self.table):
            raise IdOutOfRange(
                f"id {int(ids.max())} outside table of size {len(self.table)}"
            )
        self._cache = ids
        return self.table[ids]

    def backward(self, d_out: np.ndarray):
        if self._cache is None:
            raise NoCachedForward("embedding backward without forward")
        ids = self._cache
        d_table = np.zeros_like(self.table)
        np.add.at(d_table, ids, d_out)
        d_table[PAD_ID] = 0.0  # pad embedding is frozen
        return {"table": d_table}, None


class ConvLayer:
    """Valid 1-D convolution over word windows.

    ``filters`` is an (m, h, k) stack; feature (i, j) is
    f(<W_j, P[i:i+h]> + b_j), so an n x k input yields an
    (n-h+1) x m output and no pooling follows.
    """

    def __init__(self, filters: np.ndarray, bias: np.ndarray, activation: str = "tanh"):
        if filters.ndim != 3:
            raise ValueError(f"filters must be (m, h, k), got {filters.shape}")
        self.filters = filters
        self.bias = bias
        self.activation = activation
        self._cache = None

    @property
    def window(self) -> int:
        return self.filters.shape[1]

    def forward(self, sentence: np.ndarray) -> np.ndarray:
        n = sentence.shape[0]
        h = self.window
        if n < h:
            raise SequenceTooShort(f"sequence length {n} < window {h}")
        windows = np.lib.stride_tricks.sliding_window_view(
            sentence, (h, sentence.shape[1])
        )[:, 0]  # (n-h+1, h, k)
        pre = np.einsum("thk,mhk->tm", windows, self.filters) + self.bias
        out = _activation(self.activation)(pre)
        self._cache = (windows, out)
        return out

    def backward(self, d_out: np.ndarray):
        if self._cache is None:
            raise NoCachedForward("conv backward without forward")
        windows, out = self._cache
        h = self.window
        d_pre = d_out * _activation_grad(self.activation, out)
        d_filters = np.einsum("tm,thk->mhk", d_pre, windows)
        d_bias = d_pre.sum(axis=0)
        steps, _, k = windows.shape
        d_sentence = np.zeros((steps + h - 1, k), dtype=np.float64)
        per_window = np.einsum("tm,mhk->thk", d_pre, self.filters)
        for t in range(steps):
            d_sentence[t : t + h] += per_window[t]
        return {"filters": d_filters, "bias": d_bias}, d_sentence


class LstmLayer:
    """Gated recurrence over a step sequence, returning the final hidden state.

    Per step t with z = [x_t ; h_{t-1}]:

        i = sigmoid(W_i z + b_i)      f = sigmoid(W_f z + b_f)
        o = sigmoid(W_o z + b_o)      g = tanh(W_c z + b_c)
        c = f * c_prev + i * g        h = o * tanh(c)

    Cell and hidden state start at zero for every sequence.  The backward
    pass propagates the gradient of the final hidden state through all
    steps in reverse.
    """

    GATES = ("input", "forget", "output", "cell")

    def __init__(self, weights: dict[str, np.ndarray], biases: dict[str, np.ndarray]):
        self.weights = weights  # each (d_h, in_dim + d_h)
        self.biases = biases  # each (d_h,)
        self._cache = None

    @property
    def hidden_size(self) -> int:
        return self.weights["input"].shape[0]

    @property
    def input_size(self) -> int:
        return self.weights["input"].shape[1] - self.hidden_size

    def forward(self, steps: np.ndarray) -> np.ndarray:
        if len(steps) == 0:
            raise EmptySequence("LSTM needs at least one step")
        d_h = self.hidden_size
        h = np.zeros(d_h)
        c = np.zeros(d_h)
        trace = []
        for x in steps:
            z = np.concatenate([x, h])
            i = tc.sigmoid(self.weights["input"] @ z + self.biases["input"])
            f = tc.sigmoid(self.weights["forget"] @ z + self.biases["forget"])
            o = tc.sigmoid(self.weights["output"] @ z + self.biases["output"])
            g = np.tanh(self.weights["cell"] @ z + self.biases["cell"])
            c_prev = c
            c = f * c_prev + i * g
            ct = np.tanh(c)
            h = o * ct
            trace.append((z, i, f, o, g, c_prev, ct))
        self._cache = trace
        return h

    def backward(self, d_h_final: np.ndarray):
        if self._cache is None:
            raise NoCachedForward("LSTM backward without forward")
        trace = self._cache
        in_dim = self.input_size
        d_weights = {g: np.zeros_like(self.weights[g]) for g in self.GATES}
        d_biases = {g: np.zeros_like(self.biases[g]) for g in self.GATES}
        d_steps = np.zeros((len(trace), in_dim))
        d_h = np.asarray(d_h_final, dtype=np.float64)
        d_c = np.zeros_like(d_h)
        for t in range(len(trace) - 1, -1, -1):
            z, i, f, o, g, c_prev, ct = trace[t]
            d_o = d_h * ct
            d_c = d_c + d_h * o * (1.0 - ct * ct)
            d_i = d_c * g
            d_g = d_c * i
            d_f = d_c * c_prev
            d_c_prev = d_c * f
            pre = {
                "input": d_i * i * (1.0 - i),
                "forget": d_f * f * (1.0 - f),
                "output": d_o * o * (1.0 - o),
                "cell": d_g * (1.0 - g * g),
            }
            d_z = np.zeros_like(z)
            for gate in self.GATES:
                d_weights[gate] += np.outer(pre[gate], z)
                d_biases[gate] += pre[gate]
                d_z += self.weights[gate].T @ pre[gate]
            d_steps[t] = d_z[:in_dim]
            d_h = d_z[in_dim:]
            d_c = d_c_prev
        grads = {f"w_{g}": d_weights[g] for g in self.GATES}
        grads.update({f"b_{g}": d_biases[g] for g in self.GATES})
        return grads, d_steps


class DenseSoftmax:
    """Affine map to class scores followed by a stabilized softmax."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = weights  # (classes, in_dim)
        self.bias = bias
        self._cache = None

    def forward(self, hidden: np.ndarray) -> np.ndarray:
        scores = self.weights @ hidden + self.bias
        scores = scores - scores.max()
        exp = np.exp(scores)
        probs = exp / exp.sum()
        self._cache = (hidden, probs)
        return probs

    def backward(self, d_probs: np.ndarray):
        if self._cache is None:
            raise NoCachedForward("dense backward without forward")
        hidden, probs = self._cache
        # softmax Jacobian applied to the upstream gradient
        d_scores = probs * (d_probs - float(d_probs @ probs))
        d_weights = np.outer(d_scores, hidden)
        d_bias = d_scores
        d_hidden = self.weights.T @ d_scores
        return {"weights": d_weights, "bias": d_bias}, d_hidden


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood of the true class, clamped away from log 0."""
    return float(-np.log(max(float(probs[label]), _LOG_EPS)))


def cross_entropy_grad(probs: np.ndarray, label: int) -> np.ndarray:
    """Gradient of cross_entropy with respect to the probability vector."""
    d = np.zeros_like(probs)
    p = float(probs[label])
    if p > _LOG_EPS:  # below the clamp the loss is constant
        d[label] = -1.0 / p
    return d
