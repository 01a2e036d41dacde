"""Two-stage restoration generator.

Stage one is a gated-convolution encoder-decoder that drafts the missing
segment from the masked load, the temperature and the mask. Its draft is
spliced into the observed window and the result goes through the
fine-tuning network, whose four self-attention blocks at the bottleneck
recover sharper detail. Both stages keep the full window length so one
parameter set serves masks of any length between one and four hours.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from loadfill.layers import LayerSpec, Tensor3, MultiHeadSelfAttention, make_layer

INPUT_CHANNELS = 3  # masked load, temperature, mask


def _gc(ks, kn, st, activation="leaky_relu"):
    return LayerSpec("gc", ks, kn, st, activation=activation)


def _gtc(ks, kn, st):
    return LayerSpec("gtc", ks, kn, st)


def default_coarse_layers(width: int = 64) -> list[LayerSpec]:
    w = width
    return [
        _gc(5, w, 1),
        _gc(4, 2 * w, 2),
        _gc(3, 2 * w, 1),
        _gc(4, 4 * w, 2),
        _gc(3, 4 * w, 1),
        _gtc(3, 2 * w, 2),
        _gc(3, 2 * w, 1),
        _gtc(3, w, 2),
        _gc(3, 1, 1, activation="identity"),
    ]


def default_fine_layers(width: int = 64, heads: int = 4) -> list[LayerSpec]:
    w = width
    attn = LayerSpec("attention", kernel_size=1, out_channels=4 * w, stride=1, heads=heads)
    return [
        _gc(5, w, 1),
        _gc(4, 2 * w, 2),
        _gc(3, 2 * w, 1),
        _gc(4, 4 * w, 2),
        _gc(3, 4 * w, 1),
        attn,
        attn,
        attn,
        attn,
        _gc(3, 4 * w, 1),
        _gtc(3, 2 * w, 2),
        _gc(3, 2 * w, 1),
        _gtc(3, w, 2),
        _gc(3, 1, 1, activation="identity"),
    ]


@dataclass
class GeneratorConfig:
    coarse_layers: list[LayerSpec] = field(default_factory=default_coarse_layers)
    fine_layers: list[LayerSpec] = field(default_factory=default_fine_layers)
    input_channels: int = INPUT_CHANNELS

    def __post_init__(self):
        self.coarse_layers = [ls if isinstance(ls, LayerSpec) else LayerSpec.from_dict(ls) for ls in self.coarse_layers]
        self.fine_layers = [ls if isinstance(ls, LayerSpec) else LayerSpec.from_dict(ls) for ls in self.fine_layers]
        for name, stack in (("coarse", self.coarse_layers), ("fine", self.fine_layers)):
            down = int(np.prod([ls.stride for ls in stack if ls.kind in ("gc", "cnn", "dense", "attention")]))
            up = int(np.prod([ls.stride for ls in stack if ls.kind == "gtc"]))
            if down != up:
                raise ValueError(f"{name} stack does not restore the window length (down {down} vs up {up})")
            if stack[-1].out_channels != 1:
                raise ValueError(f"{name} stack must end with one output channel")
        if sum(1 for ls in self.fine_layers if ls.kind == "attention") != 4:
            raise ValueError("fine stack must contain exactly 4 attention blocks")

    @classmethod
    def scaled(cls, factor: int) -> "GeneratorConfig":
        """Channel-scaled-down variant for fast tests; factor 8 gives width 8."""
        return cls(coarse_layers=default_coarse_layers(64 // factor), fine_layers=default_fine_layers(64 // factor))

    def to_dict(self) -> dict:
        return {
            "coarse_layers": [ls.to_dict() for ls in self.coarse_layers],
            "fine_layers": [ls.to_dict() for ls in self.fine_layers],
            "input_channels": self.input_channels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(coarse_layers=d["coarse_layers"], fine_layers=d["fine_layers"], input_channels=d["input_channels"])


@dataclass
class GeneratorOutput:
    stage1: Tensor3  # coarse full-window estimate, (B, 1, W)
    stage2: Tensor3  # fine full-window estimate, (B, 1, W)


def _build_stack(specs: list[LayerSpec], in_channels: int, generator) -> nn.ModuleList:
    layers = nn.ModuleList()
    ch = in_channels
    for spec in specs:
        layers.append(make_layer(spec, ch, generator))
        ch = ch if spec.kind == "attention" else spec.out_channels
    return layers


class StackNetwork(nn.Module):
    """Sequential stack of layer-spec modules over a 3-channel input."""

    def __init__(self, specs: list[LayerSpec], in_channels: int, generator=None):
        super().__init__()
        self.layers = _build_stack(specs, in_channels, generator)
        self.in_channels = in_channels

    def forward(self, x: Tensor3) -> Tensor3:
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        for layer in self.layers:
            x = layer(x)
        return x

    def attention_blocks(self) -> list[MultiHeadSelfAttention]:
        return [m for m in self.layers if isinstance(m, MultiHeadSelfAttention)]


def splice(observed: Tensor3, generated: Tensor3, mask: Tensor3) -> Tensor3:
    """Generated values inside the mask, observations everywhere else."""
    if observed.shape != generated.shape or observed.shape[-1] != mask.shape[-1]:
        raise ValueError(
            f"splice shapes differ: observed {tuple(observed.shape)}, generated {tuple(generated.shape)}, "
            f"mask {tuple(mask.shape)}"
        )
    return observed * (1.0 - mask) + generated * mask


class Generator(nn.Module):
    """Coarse draft, splice, fine polish."""

    def __init__(self, config: GeneratorConfig | None = None, seed: int | None = None):
        super().__init__()
        self.config = config or GeneratorConfig()
        gen = None
        if seed is not None:
            gen = torch.Generator()
            gen.manual_seed(seed)
        self.coarse = StackNetwork(self.config.coarse_layers, self.config.input_channels, gen)
        self.fine = StackNetwork(self.config.fine_layers, self.config.input_channels, gen)

    def coarse_forward(self, z: Tensor3) -> Tensor3:
        return self.coarse(z)

    def fine_forward(self, composite: Tensor3, temperature: Tensor3, mask: Tensor3) -> Tensor3:
        return self.fine(torch.cat([composite, temperature, mask], dim=1))

    def forward(self, z: Tensor3) -> GeneratorOutput:
        observed, temperature, mask = z[:, 0:1], z[:, 1:2], z[:, 2:3]
        stage1 = self.coarse_forward(z)
        composite1 = splice(observed, stage1, mask)
        stage2 = self.fine_forward(composite1, temperature, mask)
        return GeneratorOutput(stage1=stage1, stage2=stage2)


def pack_input(sample, dtype=torch.float32) -> Tensor3:
    """Sample -> (1, 3, W) model input."""
    z = np.stack([sample.load_masked, sample.temperature, sample.mask.astype(np.float32)])
    return torch.as_tensor(z, dtype=dtype).unsqueeze(0)


def inpaint(model: Generator, sample, stats) -> np.ndarray:
    """Restore one sample's event segment, in kW.

    Runs the frozen generator on the packed window and denormalizes the
    fine-stage values at the masked positions; everything outside the mask
    stays whatever was observed, so only the event segment is returned.
    """
    return inpaint_batch(model, [sample], stats)[0]


def inpaint_batch(model: Generator, samples, stats, batch_size: int = 64) -> list[np.ndarray]:
    """Restore many samples' event segments (kW), batched for speed."""
    was_training = model.training
    model.eval()
    results = []
    try:
        with torch.no_grad():
            for i in range(0, len(samples), batch_size):
                chunk = samples[i : i + batch_size]
                z = torch.cat([pack_input(s) for s in chunk], dim=0)
                out = model(z)
                for j, s in enumerate(chunk):
                    seg = out.stage2[j, 0, s.event.start_index : s.event.stop_index]
                    results.append(stats.denorm_load(seg.numpy().astype(np.float64)))
    finally:
        model.train(was_training)
    return results
