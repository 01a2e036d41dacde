"""Checkpoint store: named tensors in a flat binary file plus a manifest.

A checkpoint directory holds ``manifest.json`` (tensor names, shapes and
byte offsets, the network/training configs, normalization statistics, the
iteration counter and a format version) and ``params.bin`` (the tensors'
little-endian float32 values concatenated in manifest order). Saving a
loaded checkpoint reproduces both files byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch

from loadfill.discriminator import DiscConfig, Discriminator
from loadfill.generator import Generator, GeneratorConfig
from loadfill.series import NormStats

CKPT_VERSION = 1


@dataclass
class Checkpoint:
    state: dict[str, np.ndarray]  # name -> float32 array, insertion-ordered
    stats: NormStats
    gen_config: GeneratorConfig
    disc_config: DiscConfig
    train_config: dict
    iteration: int
    version: int = CKPT_VERSION

    @classmethod
    def capture(cls, gen: Generator, disc: Discriminator, stats: NormStats, train_config: dict, iteration: int):
        state = {}
        for prefix, model in (("generator", gen), ("discriminator", disc)):
            for name, tensor in model.state_dict().items():
                state[f"{prefix}.{name}"] = tensor.detach().cpu().numpy().astype(np.float32).copy()
        return cls(
            state=state,
            stats=stats,
            gen_config=gen.config,
            disc_config=disc.config,
            train_config=dict(train_config),
            iteration=iteration,
        )

    def build_models(self) -> tuple[Generator, Discriminator]:
        gen = Generator(self.gen_config)
        disc = Discriminator(self.disc_config)
        for prefix, model in (("generator", gen), ("discriminator", disc)):
            sd = {
                name[len(prefix) + 1 :]: torch.as_tensor(arr)
                for name, arr in self.state.items()
                if name.startswith(prefix + ".")
            }
            model.load_state_dict(sd)
        gen.eval()
        disc.eval()
        return gen, disc

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        tensors = []
        offset = 0
        for name, arr in self.state.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            tensors.append({"name": name, "shape": list(arr.shape), "dtype": "<f4", "offset": offset})
            offset += arr.nbytes
        manifest = {
            "version": self.version,
            "iteration": self.iteration,
            "stats": self.stats.to_dict(),
            "gen_config": self.gen_config.to_dict(),
            "disc_config": self.disc_config.to_dict(),
            "train_config": self.train_config,
            "tensors": tensors,
        }
        with open(os.path.join(directory, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        with open(os.path.join(directory, "params.bin"), "wb") as fh:
            for name in self.state:
                fh.write(np.ascontiguousarray(self.state[name], dtype="<f4").tobytes())

    @classmethod
    def load(cls, directory: str) -> "Checkpoint":
        with open(os.path.join(directory, "manifest.json")) as fh:
            manifest = json.load(fh)
        if manifest.get("version") != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
        raw = np.fromfile(os.path.join(directory, "params.bin"), dtype="<f4")
        state = {}
        for entry in manifest["tensors"]:
            start = entry["offset"] // 4
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            state[entry["name"]] = raw[start : start + count].reshape(entry["shape"]).copy()
        return cls(
            state=state,
            stats=NormStats.from_dict(manifest["stats"]),
            gen_config=GeneratorConfig.from_dict(manifest["gen_config"]),
            disc_config=DiscConfig.from_dict(manifest["disc_config"]),
            train_config=manifest["train_config"],
            iteration=manifest["iteration"],
        )
