"""Patch-pair dataset handling and the two-stage training loop.

Each iteration samples co-located patches from random (input, reference)
image pairs, converts both to gradient fields, evaluates the total loss
and takes one Adam step.  The learning rate switches once, after the
stage-1 iteration budget.  Per-iteration RNG is derived from (seed,
iteration), so a run resumed from a checkpoint replays the exact same
batches as an uninterrupted one.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .gradients import forward_gradients
from .imageio import load_image
from .layers import AdamState, adam_step
from .losses import LossWeights, total_loss_parts
from .network import (NetworkWeights, backward_from_cache, build_network,
                      forward_with_cache, load_checkpoint, save_checkpoint)
from .tensor import Tensor
from .vgg import VggTrunk, load_vgg

# two-stage schedule sized for sum-reduced (unnormalized) pixel losses;
# with the per-element normalization used here, prefer the defaults below
UNNORMALIZED_SUM_LR = (1e-8, 1e-9)


@dataclass
class TrainConfig:
    patch_size: int = 64
    batch_size: int = 10
    iters_stage1: int = 50000
    iters_stage2: int = 50000
    lr_stage1: float = 1e-4
    lr_stage2: float = 1e-5
    alpha: float = 10000.0
    beta: float = 10.0
    seed: int = 0
    checkpoint_interval: int = 0       # 0 disables periodic checkpoints
    checkpoint_dir: str = ""
    vgg_path: str = ""
    loss_csv: str = ""

    def __post_init__(self):
        if self.patch_size < 4 or self.patch_size % 4:
            raise ValueError(f"patch_size must be a positive multiple of 4, got {self.patch_size}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_stage1 <= 0 or self.lr_stage2 <= 0:
            raise ValueError("stage learning rates must be > 0")
        if self.iters_stage1 < 0 or self.iters_stage2 < 0:
            raise ValueError("iteration counts must be >= 0")

    @property
    def total_iters(self) -> int:
        return self.iters_stage1 + self.iters_stage2

    def lr_at(self, iteration: int) -> float:
        return self.lr_stage1 if iteration < self.iters_stage1 else self.lr_stage2

    def loss_weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha, beta=self.beta)


_CONFIG_FIELDS = {
    "patch_size": int, "batch_size": int,
    "iters_stage1": int, "iters_stage2": int,
    "lr_stage1": float, "lr_stage2": float,
    "alpha": float, "beta": float, "seed": int,
    "checkpoint_interval": int, "checkpoint_dir": str,
    "vgg_path": str, "loss_csv": str,
}


def load_config(path, overrides: dict | None = None) -> TrainConfig:
    """Parse a key=value config file; later overrides win."""
    values: dict = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got '{line}'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown config key '{key}'")
            values[key] = _CONFIG_FIELDS[key](raw)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


class PairDataset:
    """In-memory (input, reference) image pairs, each (3, H, W) in [0, 1]."""

    def __init__(self, pairs: list[tuple[np.ndarray, np.ndarray]]) -> None:
        if not pairs:
            raise ValueError("dataset is empty")
        checked = []
        for k, (a, b) in enumerate(pairs):
            a = np.ascontiguousarray(a, np.float32)
            b = np.ascontiguousarray(b, np.float32)
            if a.ndim != 3 or a.shape[0] != 3:
                raise ValueError(f"pair {k}: images must be (3, H, W), got {a.shape}")
            if a.shape != b.shape:
                raise ValueError(
                    f"pair {k}: input {a.shape} and reference {b.shape} differ in size"
                )
            checked.append((a, b))
        self.pairs = checked

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_paths(cls, path_pairs: list[tuple[str, str]]) -> "PairDataset":
        return cls([(load_image(a), load_image(b)) for a, b in path_pairs])

    @classmethod
    def from_dirs(cls, input_dir, style_dir) -> "PairDataset":
        """Pair same-named files from two directories."""
        names = sorted(os.listdir(input_dir))
        if not names:
            raise ValueError(f"no images in {input_dir}")
        pairs = []
        for name in names:
            ref = os.path.join(style_dir, name)
            if not os.path.exists(ref):
                raise FileNotFoundError(f"no matching reference for '{name}' in {style_dir}")
            pairs.append((os.path.join(input_dir, name), ref))
        return cls.from_paths(pairs)


def sample_patch_batch(ds: PairDataset, cfg: TrainConfig,
                       rng: np.random.Generator) -> tuple[Tensor, Tensor]:
    """Co-located random patch pairs, returned as gradient-field batches."""
    P = cfg.patch_size
    ins = np.empty((cfg.batch_size, 3, P, P), np.float32)
    refs = np.empty_like(ins)
    for k in range(cfg.batch_size):
        idx = int(rng.integers(len(ds)))
        a, b = ds.pairs[idx]
        H, W = a.shape[1:]
        if H < P or W < P:
            raise ValueError(
                f"image {idx} is {H}x{W}, smaller than patch size {P}"
            )
        y0 = int(rng.integers(H - P + 1))
        x0 = int(rng.integers(W - P + 1))
        ins[k] = a[:, y0:y0 + P, x0:x0 + P]
        refs[k] = b[:, y0:y0 + P, x0:x0 + P]
    return forward_gradients(Tensor(ins)), forward_gradients(Tensor(refs))


def _iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, iteration])


def train(ds: PairDataset, cfg: TrainConfig,
          resume_from: str = "",
          batch_hook=None) -> tuple[NetworkWeights, list[tuple[int, float, float, float]]]:
    """Run the training loop; returns final weights and the loss history.

    History rows are (iteration, total, pixel, feat).  batch_hook, if
    given, replaces patch sampling (used for single-batch overfit tests);
    it receives the iteration rng and must return (input, target) fields.
    """
    trunk: VggTrunk | None = None
    if cfg.beta > 0.0:
        if not cfg.vgg_path:
            raise ValueError("beta > 0 requires a VGG trunk (set vgg_path)")
        trunk = load_vgg(cfg.vgg_path)
    if resume_from:
        net, start_iter = load_checkpoint(resume_from)
        if net.adam is None:
            net.adam = AdamState(net.params())
    else:
        net = build_network(cfg.seed)
        net.adam = AdamState(net.params())
        start_iter = 0
    weights = cfg.loss_weights()
    history: list[tuple[int, float, float, float]] = []
    for it in range(start_iter, cfg.total_iters):
        rng = _iteration_rng(cfg.seed, it)
        if batch_hook is not None:
            batch_in, batch_ref = batch_hook(rng)
        else:
            batch_in, batch_ref = sample_patch_batch(ds, cfg, rng)
        try:
            out, cache = forward_with_cache(net, batch_in.data, keep=True)
            total, lp, lf, grad = total_loss_parts(Tensor(out), batch_ref, weights, trunk)
            if not np.isfinite(total):
                raise NumericError("loss is non-finite")
            grads, _ = backward_from_cache(net, cache, grad.data, want_input_grad=False)
            net.set_params(adam_step(net.params(), grads, net.adam, cfg.lr_at(it)))
        except NumericError as e:
            raise NumericError(f"training diverged at iteration {it}: {e}") from e
        history.append((it, total, lp, lf))
        if cfg.checkpoint_interval and cfg.checkpoint_dir and \
                (it + 1) % cfg.checkpoint_interval == 0:
            os.makedirs(cfg.checkpoint_dir, exist_ok=True)
            save_checkpoint(net, os.path.join(cfg.checkpoint_dir, f"ckpt_{it + 1:07d}.gstw"),
                            iteration=it + 1)
    if cfg.loss_csv:
        write_history_csv(cfg.loss_csv, history)
    return net, history


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "total", "pixel", "feat"])
        for row in history:
            w.writerow([row[0], f"{row[1]:.9g}", f"{row[2]:.9g}", f"{row[3]:.9g}"])


def smoothed(series: list[float], window: int = 100) -> list[float]:
    """Trailing-window running mean, same length as the input."""
    out = []
    acc = 0.0
    for i, v in enumerate(series):
        acc += v
        if i >= window:
            acc -= series[i - window]
        out.append(acc / min(i + 1, window))
    return out
