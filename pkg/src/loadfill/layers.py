"""1-D network building blocks on (batch, channels, time) tensors.

Everything here follows two shape conventions chosen so variable window
lengths flow through the stride-2 stacks without reconfiguration:

* convolution: cross-correlation with zero same-padding, output length
  ceil(T / stride); even padding surplus goes to the right;
* transpose convolution: the exact adjoint of that convolution, output
  length T * stride.

Weights initialize uniformly in +-sqrt(1/fan_in), biases (including gate
biases) at zero, all draws taken from an explicit torch.Generator so model
construction is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

# rank-3 activation carrier: (batch, channels, time)
Tensor3 = torch.Tensor

LEAKY_SLOPE = 0.2
SN_EPS = 1e-12


def _act(name: str):
    if name == "leaky_relu":
        return lambda x: F.leaky_relu(x, LEAKY_SLOPE)
    if name == "identity":
        return lambda x: x
    raise ValueError(f"unknown activation {name!r}")


def _same_pad_amount(length: int, kernel_size: int, stride: int) -> int:
    out_t = -(-length // stride)
    return max(0, (out_t - 1) * stride + kernel_size - length)


def conv1d(x: Tensor3, weight: torch.Tensor, bias: torch.Tensor | None = None, stride: int = 1) -> Tensor3:
    """Same-padded strided cross-correlation; weight is (out, in, k)."""
    if x.shape[1] != weight.shape[1]:
        raise ValueError(f"input has {x.shape[1]} channels, weight expects {weight.shape[1]}")
    total = _same_pad_amount(x.shape[-1], weight.shape[-1], stride)
    x = F.pad(x, (total // 2, total - total // 2))
    return F.conv1d(x, weight, bias, stride=stride)


def tconv1d(x: Tensor3, weight: torch.Tensor, bias: torch.Tensor | None = None, stride: int = 1) -> Tensor3:
    """Adjoint of :func:`conv1d` under the same weight; weight is (in, out, k).

    Output length is input length * stride, i.e. the conv input length whose
    strided output matches ``x``. For every x, y of matching shapes and b=0,
    <conv1d(x, w), y> == <x, tconv1d(y, w)>.
    """
    if x.shape[1] != weight.shape[0]:
        raise ValueError(f"input has {x.shape[1]} channels, weight expects {weight.shape[0]}")
    k = weight.shape[-1]
    target = x.shape[-1] * stride
    total = _same_pad_amount(target, k, stride)
    left = total // 2
    raw = F.conv_transpose1d(x, weight, None, stride=stride)
    raw = F.pad(raw, (-left, target - (raw.shape[-1] - left)))
    if bias is not None:
        raw = raw + bias.view(1, -1, 1)
    return raw


def init_uniform_(tensor: torch.Tensor, fan_in: int, generator: torch.Generator | None = None) -> torch.Tensor:
    bound = math.sqrt(1.0 / fan_in)
    with torch.no_grad():
        tensor.uniform_(-bound, bound, generator=generator)
    return tensor


@dataclass(frozen=True)
class LayerSpec:
    """One row of a network table."""

    kind: str  # gc | gtc | cnn | attention | dense
    kernel_size: int = 3
    out_channels: int = 0
    stride: int = 1
    heads: int = 4
    activation: str = "leaky_relu"
    spectral_norm: bool = False

    def __post_init__(self):
        if self.kind not in ("gc", "gtc", "cnn", "attention", "dense"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.activation not in ("leaky_relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "kernel_size": self.kernel_size,
            "out_channels": self.out_channels,
            "stride": self.stride,
            "heads": self.heads,
            "activation": self.activation,
            "spectral_norm": self.spectral_norm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)


class GatedConv1d(nn.Module):
    """Convolution modulated by a learned sigmoid gate over the same input."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, activation="leaky_relu", generator=None):
        super().__init__()
        self.stride = stride
        self.activation = activation
        self._phi = _act(activation)
        fan_in = in_channels * kernel_size
        self.weight = nn.Parameter(init_uniform_(torch.empty(out_channels, in_channels, kernel_size), fan_in, generator))
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.weight_gate = nn.Parameter(init_uniform_(torch.empty(out_channels, in_channels, kernel_size), fan_in, generator))
        self.bias_gate = nn.Parameter(torch.zeros(out_channels))

    def forward(self, x: Tensor3) -> Tensor3:
        feat = conv1d(x, self.weight, self.bias, self.stride)
        gate = conv1d(x, self.weight_gate, self.bias_gate, self.stride)
        return self._phi(feat) * torch.sigmoid(gate)


class GatedTConv1d(nn.Module):
    """Gated transpose convolution; upsamples time by its stride."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=2, activation="leaky_relu", generator=None):
        super().__init__()
        self.stride = stride
        self.activation = activation
        self._phi = _act(activation)
        fan_in = in_channels * kernel_size
        self.weight = nn.Parameter(init_uniform_(torch.empty(in_channels, out_channels, kernel_size), fan_in, generator))
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.weight_gate = nn.Parameter(init_uniform_(torch.empty(in_channels, out_channels, kernel_size), fan_in, generator))
        self.bias_gate = nn.Parameter(torch.zeros(out_channels))

    def forward(self, x: Tensor3) -> Tensor3:
        feat = tconv1d(x, self.weight, self.bias, self.stride)
        gate = tconv1d(x, self.weight_gate, self.bias_gate, self.stride)
        return self._phi(feat) * torch.sigmoid(gate)


class Dense(nn.Module):
    """Per-time-step linear map over channels (a kernel-1 convolution)."""

    def __init__(self, in_channels, out_channels, activation="identity", generator=None):
        super().__init__()
        self.activation = activation
        self._phi = _act(activation)
        self.weight = nn.Parameter(init_uniform_(torch.empty(out_channels, in_channels), in_channels, generator))
        self.bias = nn.Parameter(torch.zeros(out_channels))

    def forward(self, x: Tensor3) -> Tensor3:
        return self._phi(conv1d(x, self.weight.unsqueeze(-1), self.bias))


class MultiHeadSelfAttention(nn.Module):
    """Self-attention over time positions, channels as the embedding.

    Queries, keys and values are head-wise linear projections of the input;
    scores are scaled by sqrt(head width) unless ``scale`` overrides it. The
    block output adds the input back (residual). The most recent attention
    probabilities stay available on ``last_attention`` for probing.
    """

    def __init__(self, channels, heads=4, scale=None, generator=None):
        super().__init__()
        if channels % heads != 0:
            raise ValueError(f"heads ({heads}) must divide the channel width ({channels})")
        self.heads = heads
        self.head_dim = channels // heads
        self.scale = float(scale) if scale is not None else math.sqrt(self.head_dim)
        self.w_query = nn.Parameter(init_uniform_(torch.empty(channels, channels), channels, generator))
        self.w_key = nn.Parameter(init_uniform_(torch.empty(channels, channels), channels, generator))
        self.w_value = nn.Parameter(init_uniform_(torch.empty(channels, channels), channels, generator))
        self.w_out = nn.Parameter(init_uniform_(torch.empty(channels, channels), channels, generator))
        self.last_attention = None

    def _split_heads(self, s: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
        b, t, c = s.shape
        return (s @ w).reshape(b, t, self.heads, self.head_dim).transpose(1, 2)

    def forward(self, x: Tensor3) -> Tensor3:
        s = x.transpose(1, 2)  # (B, T, C)
        q = self._split_heads(s, self.w_query)
        k = self._split_heads(s, self.w_key)
        v = self._split_heads(s, self.w_value)
        attn = torch.softmax(q @ k.transpose(-1, -2) / self.scale, dim=-1)
        self.last_attention = attn.detach()
        b, t, c = s.shape
        mixed = (attn @ v).transpose(1, 2).reshape(b, t, c) @ self.w_out
        return (mixed + s).transpose(1, 2)


def spectral_normalize(weight: torch.Tensor, u: torch.Tensor, power_iterations: int = 1, update_u: bool = True):
    """Divide a weight by its power-iteration estimate of the top singular value.

    The weight is viewed as (out_features, rest). ``u`` is the persistent
    left-singular estimate and is refreshed in place when ``update_u``.
    Returns (normalized weight, sigma estimate). Gradients flow through the
    division with u and v treated as constants.
    """
    mat = weight.reshape(weight.shape[0], -1)
    with torch.no_grad():
        for _ in range(power_iterations if update_u else 0):
            v = F.normalize(mat.t() @ u, dim=0, eps=SN_EPS)
            u.copy_(F.normalize(mat @ v, dim=0, eps=SN_EPS))
        # clone so later in-place refreshes of u cannot invalidate this graph
        u_const = u.clone()
        v_const = F.normalize(mat.t() @ u_const, dim=0, eps=SN_EPS)
    sigma = torch.dot(u_const, mat @ v_const)
    return weight / sigma.clamp_min(SN_EPS), sigma


class SpectralNormConv1d(nn.Module):
    """Convolution whose weight is spectrally normalized at every forward.

    One power-iteration refresh of the persistent ``u`` vector happens per
    forward pass while the module is in training mode; evaluation reuses the
    stored estimate so inference is a pure function of the parameters.
    """

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, activation="leaky_relu",
                 power_iterations=1, generator=None):
        super().__init__()
        self.stride = stride
        self.activation = activation
        self._phi = _act(activation)
        self.power_iterations = power_iterations
        fan_in = in_channels * kernel_size
        self.weight = nn.Parameter(init_uniform_(torch.empty(out_channels, in_channels, kernel_size), fan_in, generator))
        self.bias = nn.Parameter(torch.zeros(out_channels))
        u = torch.randn(out_channels, generator=generator)
        self.register_buffer("sn_u", F.normalize(u, dim=0, eps=SN_EPS))

    def normalized_weight(self) -> torch.Tensor:
        w, _ = spectral_normalize(self.weight, self.sn_u, self.power_iterations, update_u=self.training)
        return w

    def forward(self, x: Tensor3) -> Tensor3:
        return self._phi(conv1d(x, self.normalized_weight(), self.bias, self.stride))


class PlainConv1d(nn.Module):
    """Unnormalized convolution + activation."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, activation="leaky_relu", generator=None):
        super().__init__()
        self.stride = stride
        self.activation = activation
        self._phi = _act(activation)
        fan_in = in_channels * kernel_size
        self.weight = nn.Parameter(init_uniform_(torch.empty(out_channels, in_channels, kernel_size), fan_in, generator))
        self.bias = nn.Parameter(torch.zeros(out_channels))

    def forward(self, x: Tensor3) -> Tensor3:
        return self._phi(conv1d(x, self.weight, self.bias, self.stride))


def make_layer(spec: LayerSpec, in_channels: int, generator: torch.Generator | None = None) -> nn.Module:
    """Instantiate the module a :class:`LayerSpec` row describes."""
    if spec.kind == "gc":
        return GatedConv1d(in_channels, spec.out_channels, spec.kernel_size, spec.stride, spec.activation, generator)
    if spec.kind == "gtc":
        return GatedTConv1d(in_channels, spec.out_channels, spec.kernel_size, spec.stride, spec.activation, generator)
    if spec.kind == "cnn":
        if spec.spectral_norm:
            return SpectralNormConv1d(in_channels, spec.out_channels, spec.kernel_size, spec.stride,
                                      spec.activation, generator=generator)
        return PlainConv1d(in_channels, spec.out_channels, spec.kernel_size, spec.stride, spec.activation, generator)
    if spec.kind == "attention":
        return MultiHeadSelfAttention(in_channels, spec.heads, generator=generator)
    if spec.kind == "dense":
        return Dense(in_channels, spec.out_channels, spec.activation, generator)
    raise ValueError(f"unknown layer kind {spec.kind!r}")
