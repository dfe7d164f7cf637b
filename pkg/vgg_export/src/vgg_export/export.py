"""Convert VGG-16 checkpoint weights into the 7-conv GSTW trunk file.

The source is either the string "torchvision" (downloads the ImageNet
checkpoint through torchvision's model zoo) or a path to a saved
state_dict.  Only the convolutions through conv3-3 are exported; pooling
layers carry no weights, so the consumer rebuilds them structurally.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .gstw_writer import write_gstw

# torchvision vgg16 "features" indices for the trunk convolutions
LAYER_MAP: list[tuple[str, str]] = [
    ("features.0", "conv1_1"),
    ("features.2", "conv1_2"),
    ("features.5", "conv2_1"),
    ("features.7", "conv2_2"),
    ("features.10", "conv3_1"),
    ("features.12", "conv3_2"),
    ("features.14", "conv3_3"),
]

EXPECTED_SHAPES: dict[str, tuple[int, int, int, int]] = {
    "conv1_1": (64, 3, 3, 3),
    "conv1_2": (64, 64, 3, 3),
    "conv2_1": (128, 64, 3, 3),
    "conv2_2": (128, 128, 3, 3),
    "conv3_1": (256, 128, 3, 3),
    "conv3_2": (256, 256, 3, 3),
    "conv3_3": (256, 256, 3, 3),
}


@dataclass
class ExportManifest:
    source: str
    output: str
    layer_map: dict[str, str]
    sha256: str
    shapes: dict[str, list[int]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def load_source_state(source: str) -> dict:
    """state_dict from 'torchvision' or a .pth path."""
    import torch

    if source == "torchvision":
        from torchvision.models import VGG16_Weights, vgg16
        model = vgg16(weights=VGG16_Weights.IMAGENET1K_V1)
        return model.state_dict()
    return torch.load(source, map_location="cpu", weights_only=True)


def _lookup(state: dict, key: str):
    # saved dicts may carry "features.N.weight" (whole model) or
    # "N.weight" (features submodule alone)
    if key in state:
        return state[key]
    short = key.split(".", 1)[1]
    if short in state:
        return state[short]
    raise KeyError(f"source checkpoint is missing '{key}'")


def export_vgg(source: str, output: str) -> ExportManifest:
    """Write the GSTW trunk file and return its manifest."""
    state = load_source_state(source)
    entries: list[tuple[str, np.ndarray]] = []
    shapes: dict[str, list[int]] = {}
    for src_name, repo_name in LAYER_MAP:
        w = _lookup(state, f"{src_name}.weight").detach().cpu().numpy()
        b = _lookup(state, f"{src_name}.bias").detach().cpu().numpy()
        expect = EXPECTED_SHAPES[repo_name]
        if tuple(w.shape) != expect:
            raise ValueError(
                f"{repo_name}: kernel shape {tuple(w.shape)}, expected {expect}"
            )
        if b.shape != (expect[0],):
            raise ValueError(
                f"{repo_name}: bias shape {tuple(b.shape)}, expected ({expect[0]},)"
            )
        entries.append((f"{repo_name}.weight", w.astype(np.float32)))
        entries.append((f"{repo_name}.bias", b.astype(np.float32)))
        shapes[repo_name] = list(w.shape)
    write_gstw(output, entries)
    digest = hashlib.sha256(open(output, "rb").read()).hexdigest()
    return ExportManifest(
        source=source,
        output=str(output),
        layer_map=dict(LAYER_MAP),
        sha256=digest,
        shapes=shapes,
    )
