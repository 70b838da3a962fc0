"""Minimal dense/conv network stack with reverse-mode gradients.

Everything is float64 and batch-first. Convolutions are valid (no padding),
stride 1, with kernels spanning the time axis only (1 x k), so the asset
count stays a free dimension. The two trading networks:

    actor:  (N, 4, m, n) price block -> (N, m+1) raw weight logits
    critic: (N, 5, m, n) price block plus replicated-action channel -> (N, 1)

``minmax_action`` turns raw logits into a valid signed weight vector and has
a hand-derived vector-Jacobian product so policy gradients can flow through
the full deployed policy.
"""

from __future__ import annotations

import base64
import copy
import json
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ProtocolError
from .portfolio_math import initial_weights


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Conv2D:
    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, kh: int, kw: int,
                 rng: np.random.Generator | None = None):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kh, self.kw = kh, kw
        fan_in = in_channels * kh * kw
        fan_out = out_channels * kh * kw
        if rng is None:
            self.weight = np.zeros((out_channels, in_channels, kh, kw))
        else:
            self.weight = glorot_uniform(rng, (out_channels, in_channels, kh, kw), fan_in, fan_out)
        self.bias = np.zeros(out_channels)
        self._x = None
        self._cols = None
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"conv expects (N, {self.in_channels}, H, W), got {x.shape}")
        if x.shape[2] < self.kh or x.shape[3] < self.kw:
            raise ValueError(f"input {x.shape} smaller than kernel ({self.kh}, {self.kw})")
        n = x.shape[0]
        ho, wo = x.shape[2] - self.kh + 1, x.shape[3] - self.kw + 1
        # im2col: one GEMM per forward instead of a slow many-axis contraction.
        windows = sliding_window_view(x, (self.kh, self.kw), axis=(2, 3))
        cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5))
        cols = cols.reshape(n * ho * wo, -1)
        self._x = x
        self._cols = cols
        out = cols @ self.weight.reshape(self.out_channels, -1).T + self.bias
        return out.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ProtocolError("backward before forward")
        x = self._x
        n, _, ho, wo = dout.shape
        dmat = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(n * ho * wo, -1)
        self.d_weight = (dmat.T @ self._cols).reshape(self.weight.shape)
        self.d_bias = dmat.sum(axis=0)
        dcols = (dmat @ self.weight.reshape(self.out_channels, -1))
        dcols = dcols.reshape(n, ho, wo, self.in_channels, self.kh, self.kw)
        dcols = dcols.transpose(0, 3, 1, 2, 4, 5)
        dx = np.zeros_like(x)
        for i in range(self.kh):
            for j in range(self.kw):
                dx[:, :, i : i + ho, j : j + wo] += dcols[:, :, :, :, i, j]
        return dx

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.d_weight, self.d_bias]

    def spec(self):
        return {"kind": self.kind, "in_channels": self.in_channels,
                "out_channels": self.out_channels, "kh": self.kh, "kw": self.kw}


class Dense:
    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator | None = None):
        self.in_dim, self.out_dim = in_dim, out_dim
        if rng is None:
            self.weight = np.zeros((in_dim, out_dim))
        else:
            self.weight = glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim)
        self.bias = np.zeros(out_dim)
        self._x = None
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"dense expects (N, {self.in_dim}), got {x.shape}")
        self._x = x
        return x @ self.weight + self.bias

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ProtocolError("backward before forward")
        self.d_weight = self._x.T @ dout
        self.d_bias = dout.sum(axis=0)
        return dout @ self.weight.T

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.d_weight, self.d_bias]

    def spec(self):
        return {"kind": self.kind, "in_dim": self.in_dim, "out_dim": self.out_dim}


class ReLU:
    kind = "relu"

    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise ProtocolError("backward before forward")
        return np.where(self._mask, dout, 0.0)

    def params(self):
        return []

    def grads(self):
        return []

    def spec(self):
        return {"kind": self.kind}


class Flatten:
    kind = "flatten"

    def __init__(self):
        self._shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise ProtocolError("backward before forward")
        return dout.reshape(self._shape)

    def params(self):
        return []

    def grads(self):
        return []

    def spec(self):
        return {"kind": self.kind}


_LAYER_KINDS = {"conv2d": Conv2D, "dense": Dense, "relu": ReLU, "flatten": Flatten}


class Network:
    """Plain sequential stack. Forward caches activations for one backward pass."""

    def __init__(self, layers: list):
        self.layers = layers
        self._forward_done = False

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        if out.ndim == 3:
            out = out[None]
        for layer in self.layers:
            out = layer.forward(out)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("network produced non-finite output")
        self._forward_done = True
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if not self._forward_done:
            raise ProtocolError("backward before forward")
        grad = np.asarray(dout, dtype=np.float64)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def clone(self) -> "Network":
        return copy.deepcopy(self)

    def spec(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    @classmethod
    def from_spec(cls, spec: list[dict]) -> "Network":
        layers = []
        for entry in spec:
            kind = entry["kind"]
            if kind not in _LAYER_KINDS:
                raise ValueError(f"unknown layer kind {kind!r}")
            args = {k: v for k, v in entry.items() if k != "kind"}
            layers.append(_LAYER_KINDS[kind](**args))
        return cls(layers)


def build_actor(num_assets: int, window: int, rng: np.random.Generator) -> Network:
    """Policy network: price block in, m+1 raw weight logits out."""
    if window < 5:
        raise ValueError("window must be >= 5 for two time-axis convolutions")
    flat = 16 * num_assets * (window - 4)
    return Network([
        Conv2D(4, 16, 1, 3, rng),
        ReLU(),
        Conv2D(16, 16, 1, 3, rng),
        ReLU(),
        Flatten(),
        Dense(flat, 64, rng),
        ReLU(),
        Dense(64, num_assets + 1, rng),
    ])


def build_critic(num_assets: int, window: int, rng: np.random.Generator) -> Network:
    """Action-value network: price block plus action channel in, scalar out."""
    if window < 5:
        raise ValueError("window must be >= 5 for two time-axis convolutions")
    flat = 16 * num_assets * (window - 4)
    return Network([
        Conv2D(5, 16, 1, 3, rng),
        ReLU(),
        Conv2D(16, 16, 1, 3, rng),
        ReLU(),
        Flatten(),
        Dense(flat, 64, rng),
        ReLU(),
        Dense(64, 1, rng),
    ])


# ---------------------------------------------------------------------------
# Action activation: min-max rescale to [-1, 1], clamp cash, absolute-sum
# normalize. Differentiable almost everywhere; the cached pieces below give
# the exact vector-Jacobian product at generic points.

def minmax_forward_batch(raw: np.ndarray):
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[1] < 2:
        raise ValueError(f"raw actions must be (N, k>=2), got {raw.shape}")
    n, k = raw.shape
    i_min = np.argmin(raw, axis=1)
    i_max = np.argmax(raw, axis=1)
    mn = raw[np.arange(n), i_min]
    mx = raw[np.arange(n), i_max]
    span = mx - mn
    degenerate = span == 0.0

    safe_span = np.where(degenerate, 1.0, span)
    z = (raw - mn[:, None]) / safe_span[:, None]
    u = 2.0 * z - 1.0
    cash_clamped = u[:, 0] < 0
    u[cash_clamped, 0] = 0.0
    total = np.abs(u).sum(axis=1)
    # A non-degenerate row always keeps its +1 at the argmax, so total >= 1.
    w = u / total[:, None]
    if np.any(degenerate):
        w[degenerate] = initial_weights(k - 1)
    cache = (i_min, i_max, safe_span, z, u, cash_clamped, total, w, degenerate)
    return w, cache


def minmax_vjp_batch(cache, dw: np.ndarray) -> np.ndarray:
    """Gradient of the loss w.r.t. raw logits, given the gradient w.r.t. weights."""
    i_min, i_max, span, z, u, cash_clamped, total, w, degenerate = cache
    n = dw.shape[0]
    rows = np.arange(n)
    # w = u / total, total = sum |u|
    du = dw / total[:, None] - (np.sum(dw * u, axis=1) / total**2)[:, None] * np.sign(u)
    du[cash_clamped, 0] = 0.0
    dz = 2.0 * du
    draw = dz / span[:, None]
    sum_dz = dz.sum(axis=1)
    sum_dz_z = np.sum(dz * z, axis=1)
    np.add.at(draw, (rows, i_max), -sum_dz_z / span)
    np.add.at(draw, (rows, i_min), (sum_dz_z - sum_dz) / span)
    draw[degenerate] = 0.0
    return draw


def minmax_action_batch(raw: np.ndarray) -> np.ndarray:
    w, _ = minmax_forward_batch(raw)
    return w


def minmax_action(raw: np.ndarray) -> np.ndarray:
    """Raw logits to a valid signed weight vector; all-equal logits fall back to all-cash."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1:
        raise ValueError("minmax_action takes a single vector; use minmax_action_batch")
    return minmax_action_batch(raw[None])[0]


def critic_input(tensor_data: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Insert the action as a fifth channel: risky weight i fills row i of the block."""
    return critic_input_batch(tensor_data[None], np.asarray(weights)[None])[0]


def critic_input_batch(tensors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    tensors = np.asarray(tensors, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if tensors.ndim != 4 or tensors.shape[1] != 4:
        raise ValueError(f"expected price blocks (N, 4, m, n), got {tensors.shape}")
    n_batch, _, m, window = tensors.shape
    if weights.shape != (n_batch, m + 1):
        raise ValueError(
            f"weights shape {weights.shape} does not match {m} risky assets"
        )
    channel = np.broadcast_to(weights[:, 1:, None], (n_batch, m, window))
    return np.concatenate([tensors, channel[:, None, :, :]], axis=1)


# ---------------------------------------------------------------------------
# Checkpoints: a versioned JSON manifest with base64 float64 buffers, so the
# exact parameter bits round-trip.

CHECKPOINT_VERSION = 1


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(data.tobytes()).decode("ascii")}


def _decode_array(entry: dict) -> np.ndarray:
    buf = base64.b64decode(entry["data"])
    return np.frombuffer(buf, dtype="<f8").reshape(entry["shape"]).astype(np.float64)


def _net_payload(net: Network) -> dict:
    return {"spec": net.spec(), "params": [_encode_array(p) for p in net.params()]}


def _net_from_payload(payload: dict) -> Network:
    net = Network.from_spec(payload["spec"])
    params = net.params()
    if len(params) != len(payload["params"]):
        raise ValueError("parameter count does not match layer spec")
    for target, entry in zip(params, payload["params"]):
        arr = _decode_array(entry)
        if arr.shape != target.shape:
            raise ValueError(f"parameter shape {arr.shape} != expected {target.shape}")
        target[...] = arr
    return net


def save_checkpoint(path: str | Path, actor: Network, critic: Network, meta: dict) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "meta": meta,
        "actor": _net_payload(actor),
        "critic": _net_payload(critic),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[Network, Network, dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('format_version')!r}")
    return (
        _net_from_payload(payload["actor"]),
        _net_from_payload(payload["critic"]),
        payload["meta"],
    )
