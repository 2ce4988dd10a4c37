"""Batch extraction of pool3 embeddings from an image directory."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

from . import EmptyDirectory
from .model import load_backbone
from .pademb import write_pademb

INPUT_SIZE = 299
# canonical ImageNet normalization; the resize is a straight bilinear
# mapping to the network input size
MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class ExtractJob:
    image_dir: str
    out_path: str
    batch_size: int = 32
    weights: str = "pretrained"


def list_images(image_dir: str) -> list[str]:
    """PNG/JPEG filenames directly inside the directory, sorted
    lexicographically; this order is the embedding row order."""
    names = sorted(
        name
        for name in os.listdir(image_dir)
        if name.lower().endswith(IMAGE_EXTENSIONS)
        and os.path.isfile(os.path.join(image_dir, name))
    )
    if not names:
        raise EmptyDirectory("no PNG/JPEG images in %s" % image_dir)
    return names


def load_tensor(path: str) -> torch.Tensor:
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - MEAN) / STD
    return torch.from_numpy(arr.transpose(2, 0, 1))


def extract(job: ExtractJob) -> dict:
    """Run the job; returns the sidecar metadata that was written.

    Output: PADEMB1 file with one 2048-dim row per image, plus a sidecar
    JSON (``<out>.json``) listing the filenames in row order, the weight
    identifier, and the preprocessing policy.
    """
    names = list_images(job.image_dir)
    model, identifier = load_backbone(job.weights)

    rows = []
    with torch.no_grad():
        for start in range(0, len(names), job.batch_size):
            batch_names = names[start : start + job.batch_size]
            batch = torch.stack(
                [load_tensor(os.path.join(job.image_dir, n)) for n in batch_names]
            )
            rows.append(model(batch).numpy())
    data = np.concatenate(rows, axis=0)

    write_pademb(data, job.out_path)
    sidecar = {
        "count": int(data.shape[0]),
        "dim": int(data.shape[1]),
        "files": names,
        "weights": identifier,
        "resize": "bilinear-%dx%d" % (INPUT_SIZE, INPUT_SIZE),
        "normalization": "imagenet-mean-std",
        "features": "pool3",
    }
    sidecar_path = os.fspath(job.out_path) + ".json"
    tmp = "%s.tmp%d" % (sidecar_path, os.getpid())
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, sidecar_path)
    return sidecar
