"""Spectral-normalized convolutional critic.

Five stride-2 convolutions compress a (profile, mask) pair into a final
feature map whose every element sees the whole window; those raw values are
the scores a hinge loss consumes. The four intermediate activation maps are
exposed for the feature-matching loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from loadfill.layers import LayerSpec, SpectralNormConv1d, Tensor3, make_layer

DISC_INPUT_CHANNELS = 2  # profile, mask


def default_disc_layers(width: int = 16) -> list[LayerSpec]:
    kn = [width, 2 * width, 4 * width, 8 * width, 16 * width]
    specs = [LayerSpec("cnn", 4, k, 2, activation="leaky_relu", spectral_norm=True) for k in kn[:-1]]
    specs.append(LayerSpec("cnn", 4, kn[-1], 2, activation="identity", spectral_norm=True))
    return specs


@dataclass
class DiscConfig:
    layers: list[LayerSpec] = field(default_factory=default_disc_layers)
    input_channels: int = DISC_INPUT_CHANNELS

    def __post_init__(self):
        self.layers = [ls if isinstance(ls, LayerSpec) else LayerSpec.from_dict(ls) for ls in self.layers]
        if len(self.layers) != 5:
            raise ValueError("discriminator must have exactly 5 layers")
        if not all(ls.kind == "cnn" and ls.spectral_norm and ls.stride == 2 for ls in self.layers):
            raise ValueError("discriminator layers must be stride-2 spectral-normalized convolutions")

    @classmethod
    def scaled(cls, factor: int) -> "DiscConfig":
        return cls(layers=default_disc_layers(16 // factor))

    def to_dict(self) -> dict:
        return {"layers": [ls.to_dict() for ls in self.layers], "input_channels": self.input_channels}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscConfig":
        return cls(layers=d["layers"], input_channels=d["input_channels"])


@dataclass
class DiscOutput:
    scores: torch.Tensor  # (B, M): final map flattened, raw values
    features: list[Tensor3]  # activations of layers 1..4


class Discriminator(nn.Module):
    def __init__(self, config: DiscConfig | None = None, seed: int | None = None):
        super().__init__()
        self.config = config or DiscConfig()
        gen = None
        if seed is not None:
            gen = torch.Generator()
            gen.manual_seed(seed)
        layers = []
        ch = self.config.input_channels
        for spec in self.config.layers:
            layers.append(make_layer(spec, ch, gen))
            ch = spec.out_channels
        self.layers = nn.ModuleList(layers)

    def forward(self, profile: Tensor3, mask: Tensor3) -> DiscOutput:
        if profile.shape[-1] != mask.shape[-1]:
            raise ValueError(f"profile length {profile.shape[-1]} != mask length {mask.shape[-1]}")
        x = torch.cat([profile, mask], dim=1)
        features = []
        for layer in self.layers[:-1]:
            x = layer(x)
            features.append(x)
        x = self.layers[-1](x)
        return DiscOutput(scores=x.flatten(start_dim=1), features=features)

    def score_width(self, window_len: int) -> int:
        """M for a given window length: channels * ceil(W / 2^5)."""
        t = window_len
        for _ in self.layers:
            t = -(-t // 2)
        return self.config.layers[-1].out_channels * t

    def sn_layers(self) -> list[SpectralNormConv1d]:
        return [m for m in self.layers if isinstance(m, SpectralNormConv1d)]
