"""Temporal patch partitioning and the random Fourier feature map.

A gesture matrix (channels x frames) is split into equal non-overlapping
temporal patches; each patch vector is lifted with a fixed random cosine
feature map whose inner products approximate an RBF kernel.
"""

from dataclasses import dataclass

import numpy as np

from .numutil import RngStream, check_finite


@dataclass(frozen=True)
class PatchSpec:
    """Input geometry: channels x frames split into equal patches."""

    channels: int
    frames: int
    patches: int

    def __post_init__(self):
        if self.channels < 1 or self.frames < 1 or self.patches < 1:
            raise ValueError("channels, frames, patches must be >= 1")
        if self.frames % self.patches != 0:
            raise ValueError(
                f"patches ({self.patches}) must divide frames ({self.frames})"
            )

    @property
    def frames_per_patch(self):
        return self.frames // self.patches

    @property
    def patch_dim(self):
        return self.channels * self.frames_per_patch


@dataclass(frozen=True)
class RffMap:
    """Fixed random feature map: sampled once, never trained.

    W has shape patch_dim x m with entries N(0, 2*gamma); b has length m
    with entries Uniform[0, 2pi).
    """

    W: np.ndarray
    b: np.ndarray
    gamma: float
    m: int

    @property
    def patch_dim(self):
        return self.W.shape[0]


def patchify(X, spec):
    """Split X (channels x frames) into spec.patches patch vectors.

    Returns an array of shape (patches, patch_dim). Each patch vector is
    flattened channel-major within a frame, frames in temporal order.
    """
    X = np.atleast_2d(check_finite(X, "gesture"))
    if X.shape != (spec.channels, spec.frames):
        raise ValueError(
            f"gesture shape {X.shape} does not match spec "
            f"({spec.channels}, {spec.frames})"
        )
    fpp = spec.frames_per_patch
    out = np.empty((spec.patches, spec.patch_dim))
    for p in range(spec.patches):
        out[p] = X[:, p * fpp:(p + 1) * fpp].T.ravel()
    return out


def unpatchify(patches, spec):
    """Inverse of patchify: reassemble the channels x frames matrix."""
    patches = np.asarray(patches, dtype=float)
    if patches.shape != (spec.patches, spec.patch_dim):
        raise ValueError("patch array shape does not match spec")
    fpp = spec.frames_per_patch
    X = np.empty((spec.channels, spec.frames))
    for p in range(spec.patches):
        X[:, p * fpp:(p + 1) * fpp] = patches[p].reshape(fpp, spec.channels).T
    return X


def rff_init(spec, m, gamma, rng):
    """Sample a fixed RFF map: W ~ N(0, 2*gamma), b ~ Uniform[0, 2pi)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if not isinstance(rng, RngStream):
        raise TypeError("rng must be an RngStream")
    d = spec.patch_dim
    W = rng.gauss(d * m, 0.0, np.sqrt(2.0 * gamma)).reshape(d, m)
    b = rng.uniform(m, 0.0, 2.0 * np.pi)
    return RffMap(W=W, b=b, gamma=float(gamma), m=int(m))


def rff_transform(patches, rmap):
    """Apply the cosine feature map row-wise.

    Returns Q of shape (patches, m) with rows sqrt(2/m)*cos(x W + b);
    every entry is bounded by sqrt(2/m) in magnitude.
    """
    patches = np.atleast_2d(np.asarray(patches, dtype=float))
    if patches.shape[1] != rmap.patch_dim:
        raise ValueError(
            f"patch length {patches.shape[1]} does not match map "
            f"patch_dim {rmap.patch_dim}"
        )
    return np.sqrt(2.0 / rmap.m) * np.cos(patches @ rmap.W + rmap.b)
