"""Alternating adversarial training of the two-stage generator.

Each iteration runs ``d_steps_per_g`` critic updates (hinge loss on real
windows against spliced fakes, generator frozen) followed by one generator
update that minimizes the coarse content loss plus the refined objective
(content + adversarial + feature matching) through both stages. Everything
is deterministic under the config seed: parameter draws, batch order and
power-iteration state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

from loadfill.checkpoint import Checkpoint
from loadfill.discriminator import DiscConfig, Discriminator
from loadfill.generator import Generator, GeneratorConfig, splice
from loadfill.losses import adv_loss, content_loss, disc_loss, feat_loss, window_mask
from loadfill.optim import Adam
from loadfill.samples import Sample, SampleSet


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    lambda_adv: float = 0.1
    lambda_feat: float = 10.0
    batch_size: int = 16
    max_iters: int = 2000
    margin_steps: int | None = None  # None: half an hour at the data resolution
    d_steps_per_g: int = 1
    seed: int = 0
    val_interval: int = 100
    torch_threads: int | None = 1  # these nets run fastest single-threaded

    def __post_init__(self):
        if self.lambda_adv < 0 or self.lambda_feat < 0:
            raise ValueError("loss weights must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.d_steps_per_g < 1:
            raise ValueError("d_steps_per_g must be >= 1")
        if self.margin_steps is not None and self.margin_steps < 0:
            raise ValueError("margin_steps must be >= 0")

    def resolved_margin(self, resolution: int) -> int:
        if self.margin_steps is not None:
            return self.margin_steps
        return round(30 / resolution)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class LossReport:
    """Per-iteration loss traces, all in normalized units."""

    l_coarse: list[float] = field(default_factory=list)
    l_content2: list[float] = field(default_factory=list)
    l_adv: list[float] = field(default_factory=list)
    l_feat: list[float] = field(default_factory=list)
    l_refine: list[float] = field(default_factory=list)
    l_d: list[float] = field(default_factory=list)

    FIELDS = ("l_coarse", "l_content2", "l_adv", "l_feat", "l_refine", "l_d")

    def append(self, **values):
        for name in self.FIELDS:
            getattr(self, name).append(float(values[name]))

    def __len__(self):
        return len(self.l_coarse)

    def rows(self):
        for i in range(len(self)):
            yield {"iteration": i + 1, **{name: getattr(self, name)[i] for name in self.FIELDS}}


def collate(samples: list[Sample], dtype=torch.float32) -> dict:
    """Stack samples into batch tensors (requires ground truth)."""
    z = np.stack(
        [np.stack([s.load_masked, s.temperature, s.mask.astype(np.float32)]) for s in samples]
    )
    real = np.stack([s.real_window() for s in samples])[:, None, :]
    batch = {
        "z": torch.as_tensor(z, dtype=dtype),
        "real": torch.as_tensor(real, dtype=dtype),
        "events": [s.event for s in samples],
    }
    batch["mask"] = batch["z"][:, 2:3]
    return batch


class _BatchSampler:
    """Seeded epoch-shuffled index stream."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = rng
        self._queue: list[int] = []

    def next_batch(self) -> list[int]:
        while len(self._queue) < self.batch_size:
            self._queue.extend(self.rng.permutation(self.n).tolist())
        out, self._queue = self._queue[: self.batch_size], self._queue[self.batch_size :]
        return out


def train_step(
    gen: Generator,
    disc: Discriminator,
    opt_g: Adam,
    opt_d: Adam,
    batches: list[dict],
    cfg: TrainConfig,
    margin_steps: int,
) -> dict:
    """One alternating update; ``batches`` holds one batch per critic step
    plus a final one for the generator step."""
    d_losses = []
    for batch in batches[:-1]:
        with torch.no_grad():
            out = gen(batch["z"])
            fake = splice(batch["z"][:, 0:1], out.stage2, batch["mask"])
        real_out = disc(batch["real"], batch["mask"])
        fake_out = disc(fake, batch["mask"])
        l_d = disc_loss(real_out.scores, fake_out.scores)
        _check_finite(l_d, "discriminator loss")
        opt_d.zero_grad()
        l_d.backward()
        opt_d.step()
        d_losses.append(float(l_d.detach()))

    batch = batches[-1]
    w = batch["z"].shape[-1]
    hmask = window_mask(batch["events"], margin_steps, w)
    out = gen(batch["z"])
    composite = splice(batch["z"][:, 0:1], out.stage2, batch["mask"])
    fake_out = disc(composite, batch["mask"])
    with torch.no_grad():
        real_out = disc(batch["real"], batch["mask"])

    l_coarse = content_loss(out.stage1, batch["real"], hmask)
    l_content2 = content_loss(out.stage2, batch["real"], hmask)
    l_adv = adv_loss(fake_out.scores)
    l_feat = feat_loss(fake_out.features, [f.detach() for f in real_out.features])
    l_refine = l_content2 + cfg.lambda_adv * l_adv + cfg.lambda_feat * l_feat
    total = l_coarse + l_refine
    _check_finite(total, "generator loss")
    opt_g.zero_grad()
    total.backward()
    opt_g.step()

    return {
        "l_coarse": float(l_coarse.detach()),
        "l_content2": float(l_content2.detach()),
        "l_adv": float(l_adv.detach()),
        "l_feat": float(l_feat.detach()),
        "l_refine": float(l_refine.detach()),
        "l_d": float(np.mean(d_losses)),
    }


def _check_finite(loss: torch.Tensor, what: str):
    if not torch.isfinite(loss):
        raise TrainingDiverged(
            f"{what} became non-finite ({float(loss.detach())}); lower the learning rates or weights"
        )


@torch.no_grad()
def validation_content_loss(gen: Generator, samples: list[Sample], margin_steps: int, batch_size: int = 64) -> float:
    """Mean fine-stage content loss over a split, in eval mode."""
    was_training = gen.training
    gen.eval()
    try:
        losses = []
        for i in range(0, len(samples), batch_size):
            batch = collate(samples[i : i + batch_size])
            out = gen(batch["z"])
            hmask = window_mask(batch["events"], margin_steps, batch["z"].shape[-1])
            losses.append(float(content_loss(out.stage2, batch["real"], hmask)) * len(batch["events"]))
        return sum(losses) / len(samples)
    finally:
        gen.train(was_training)


def fit(
    cfg: TrainConfig,
    sample_set: SampleSet,
    gen_config: GeneratorConfig | None = None,
    disc_config: DiscConfig | None = None,
    log_every: int | None = None,
) -> tuple[Checkpoint, LossReport]:
    """Train from scratch and return the best-validation checkpoint.

    The retained checkpoint is the one with the lowest validation
    fine-stage content loss (checked every ``val_interval`` iterations and
    at the end); with an empty validation split the final iterate is kept
    and a warning is issued.
    """
    if not sample_set.train:
        raise ValueError("training split is empty")
    if cfg.torch_threads:
        torch.set_num_threads(cfg.torch_threads)
    margin = cfg.resolved_margin(sample_set.resolution)

    gen = Generator(gen_config, seed=cfg.seed)
    disc = Discriminator(disc_config, seed=cfg.seed + 1)
    gen.train()
    disc.train()
    opt_g = Adam(gen.parameters(), lr=cfg.lr_g, beta1=cfg.beta1, beta2=cfg.beta2)
    opt_d = Adam(disc.parameters(), lr=cfg.lr_d, beta1=cfg.beta1, beta2=cfg.beta2)
    rng = np.random.default_rng(cfg.seed)
    sampler = _BatchSampler(len(sample_set.train), cfg.batch_size, rng)

    report = LossReport()
    best = None  # (val_loss, Checkpoint)

    def snapshot(iteration):
        return Checkpoint.capture(gen, disc, sample_set.stats, cfg.to_dict(), iteration)

    def consider(iteration):
        nonlocal best
        if not sample_set.validation:
            return
        val = validation_content_loss(gen, sample_set.validation, margin)
        if best is None or val < best[0]:
            best = (val, snapshot(iteration))

    for it in range(1, cfg.max_iters + 1):
        batches = [
            collate([sample_set.train[j] for j in sampler.next_batch()])
            for _ in range(cfg.d_steps_per_g + 1)
        ]
        losses = train_step(gen, disc, opt_g, opt_d, batches, cfg, margin)
        report.append(**losses)
        if log_every and it % log_every == 0:
            print(
                f"iter {it}: coarse {losses['l_coarse']:.4f} refine {losses['l_refine']:.4f} "
                f"d {losses['l_d']:.4f}"
            )
        if cfg.val_interval and it % cfg.val_interval == 0:
            consider(it)

    if cfg.max_iters > 0:
        consider(cfg.max_iters)
    if best is None:
        if not sample_set.validation:
            warnings.warn("validation split is empty; keeping the final-iteration checkpoint")
        return snapshot(cfg.max_iters), report
    return best[1], report
