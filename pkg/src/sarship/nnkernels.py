"""Forward pass of the dual-feature fusion attention block.

Tensors are ``(H, W, C)`` arrays.  The block pools each input over space,
turns the pooled vector into channel weights with a sigmoid, rescales the
inputs, concatenates them (original features first) and applies a 1x1
convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import ShapeError


@dataclass(frozen=True)
class Conv1x1Weights:
    """1x1 convolution from ``c_in`` to ``c_out`` channels.

    ``matrix`` has shape ``(c_in, c_out)``; ``bias`` has shape ``(c_out,)``.
    """

    matrix: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ShapeError(f"1x1 weights must be 2-D, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=float)
            if b.shape != (m.shape[1],):
                raise ShapeError(f"bias shape {b.shape} does not match {m.shape[1]} outputs")
            object.__setattr__(self, "bias", b)


def spatial_avg_pool(f) -> np.ndarray:
    """Per-channel mean over the spatial dimensions."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 3 or f.size == 0:
        raise ShapeError(f"expected a non-empty (H, W, C) tensor, got shape {f.shape}")
    return f.mean(axis=(0, 1))


def channel_attention(f) -> np.ndarray:
    return expit(spatial_avg_pool(f))


def conv1x1(x, weights: Conv1x1Weights) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != weights.matrix.shape[0]:
        raise ShapeError(f"input has {x.shape[-1]} channels, weights expect {weights.matrix.shape[0]}")
    out = x @ weights.matrix
    if weights.bias is not None:
        out = out + weights.bias
    return out


def dfa_fuse(f2, f2_de, weights: Conv1x1Weights) -> np.ndarray:
    """Fuse original and denoised features; returns ``(H, W, C_out)``."""
    f2 = np.asarray(f2, dtype=float)
    f2_de = np.asarray(f2_de, dtype=float)
    if f2.shape != f2_de.shape:
        raise ShapeError(f"feature shapes differ: {f2.shape} vs {f2_de.shape}")
    m2 = channel_attention(f2)
    m2_de = channel_attention(f2_de)
    cat = np.concatenate([m2 * f2, m2_de * f2_de], axis=-1)
    return conv1x1(cat, weights)
