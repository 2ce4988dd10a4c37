"""Inception-v3 backbone with the classifier head removed.

The forward pass ends at the global average pool ("pool3"), yielding one
2048-dimensional vector per image.  Weights come from one of three
sources, each pinned by an identifier that goes into the output sidecar:

* ``pretrained``  -- torchvision's IMAGENET1K_V1 checkpoint (downloads on
  first use; raises ModelLoadFailure offline),
* ``random``      -- a seeded random initialization, deterministic per
  seed; useful for format validation and pipeline tests, not for
  comparable FID values,
* a filesystem path to a state-dict checkpoint.
"""

from __future__ import annotations

import hashlib
import os

import torch
import torchvision

from . import ModelLoadFailure

RANDOM_SEED = 20240601


def load_backbone(weights: str) -> tuple[torch.nn.Module, str]:
    """Build the eval-mode backbone; returns (model, weight identifier)."""
    try:
        if weights == "pretrained":
            enum = torchvision.models.Inception_V3_Weights.IMAGENET1K_V1
            model = torchvision.models.inception_v3(weights=enum)
            identifier = "torchvision-inception_v3-IMAGENET1K_V1"
        elif weights == "random":
            torch.manual_seed(RANDOM_SEED)
            model = torchvision.models.inception_v3(
                weights=None, aux_logits=True, init_weights=True
            )
            identifier = "torchvision-inception_v3-random-seed%d" % RANDOM_SEED
        else:
            model = torchvision.models.inception_v3(
                weights=None, aux_logits=True, init_weights=False
            )
            state = torch.load(weights, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
            digest = hashlib.sha256(open(weights, "rb").read()).hexdigest()[:12]
            identifier = "file-%s-sha256-%s" % (os.path.basename(weights), digest)
    except ModelLoadFailure:
        raise
    except Exception as exc:
        raise ModelLoadFailure("cannot load weights %r: %s" % (weights, exc)) from exc

    model.fc = torch.nn.Identity()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model, identifier
