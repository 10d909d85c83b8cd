"""The convex attention classifier.

Attention scores are per-class, per-patch inner products with the weight
tensor; attention weights come from Euclidean simplex projection of each
class's score row; class scores are the attention-weighted sum of the
per-patch alignments. The whole trained state serializes to a compact
binary bundle.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

from .features import PatchSpec, RffMap, patchify, rff_transform
from .numutil import check_finite
from .projections import simplex_project_rows

MAGIC = b"CVAT"
FORMAT_VERSION = 1
LOSS_KINDS = ("hinge", "squared")

# sanity cap on serialized dimensions; catches corrupt headers before
# any allocation
_MAX_DIM = 1 << 20


class ModelFormatError(ValueError):
    """Malformed or incompatible serialized model bundle."""


@dataclass(frozen=True)
class ModelBundle:
    """Serializable unit: RFF map, trained weights, norm stats, config."""

    rff: RffMap
    weights: np.ndarray  # (K, P, m)
    spec: PatchSpec
    n_classes: int
    norm_mean: np.ndarray  # per channel
    norm_std: np.ndarray
    loss_kind: str
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        K, P, m = self.weights.shape
        if K != self.n_classes or P != self.spec.patches or m != self.rff.m:
            raise ValueError("weights shape inconsistent with spec/rff")
        if self.rff.patch_dim != self.spec.patch_dim:
            raise ValueError("rff patch_dim inconsistent with spec")
        if self.norm_mean.shape != (self.spec.channels,):
            raise ValueError("norm stats must be per channel")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")


def attention_scores(Q, A):
    """Scores s[k, p] = <Q_p, A[k, p]> / sqrt(m)."""
    Q = np.asarray(Q, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.ndim != 3 or Q.shape != A.shape[1:]:
        raise ValueError(f"shape mismatch: Q {Q.shape} vs A {A.shape}")
    m = Q.shape[1]
    return np.einsum("pm,kpm->kp", Q, A) / np.sqrt(m)


def attention_weights(s):
    """Project each class's score row onto the probability simplex."""
    return simplex_project_rows(np.atleast_2d(s))


def attend(Q, alpha):
    """Attended features: row k is the alpha_k-weighted sum of patches."""
    Q = np.asarray(Q, dtype=float)
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    if alpha.shape[1] != Q.shape[0]:
        raise ValueError(f"shape mismatch: alpha {alpha.shape} vs Q {Q.shape}")
    return alpha @ Q


def class_scores(Q, A):
    """f[k] = sum_p alpha[k, p] * <Q_p, A[k, p]> = sqrt(m) <alpha_k, s_k>."""
    s = attention_scores(Q, A)
    alpha = attention_weights(s)
    m = Q.shape[1]
    return np.sqrt(m) * np.einsum("kp,kp->k", alpha, s)


def batch_class_scores(Q, A):
    """Vectorized class scores for a stack of feature matrices.

    Q has shape (n, P, m); returns scores (n, K), attention (n, K, P)
    and raw score rows (n, K, P).
    """
    Q = np.asarray(Q, dtype=float)
    A = np.asarray(A, dtype=float)
    n, P, m = Q.shape
    K = A.shape[0]
    s = np.einsum("npm,kpm->nkp", Q, A) / np.sqrt(m)
    alpha = simplex_project_rows(s.reshape(n * K, P)).reshape(n, K, P)
    f = np.sqrt(m) * np.einsum("nkp,nkp->nk", alpha, s)
    return f, alpha, s


def features_for(X, bundle):
    """Raw gesture -> normalized, patchified, RFF-lifted features."""
    X = np.atleast_2d(check_finite(X, "gesture"))
    Xn = (X - bundle.norm_mean[:, None]) / bundle.norm_std[:, None]
    return rff_transform(patchify(Xn, bundle.spec), bundle.rff)


def predict(X, bundle):
    """Classify one raw segmented gesture.

    Returns (label, scores); ties in the argmax go to the lowest class
    index.
    """
    f = class_scores(features_for(X, bundle), bundle.weights)
    return int(np.argmax(f)), f


def param_count(bundle):
    """(trainable, fixed) parameter counts.

    Trainable: the weight tensor K*P*m. Fixed: the RFF projection
    matrix and phase vector, patch_dim*m + m.
    """
    K, P, m = bundle.weights.shape
    return K * P * m, bundle.spec.patch_dim * m + m


def serialize(bundle, precision=64):
    """Pack a bundle into bytes.

    Little-endian; fixed header (magic, version, precision, loss kind,
    K, C, T, P, m, gamma) followed by norm stats, b, W, A. The 32-bit
    variant is the storage/export path; 64-bit round-trips exactly.
    """
    if precision not in (32, 64):
        raise ValueError(f"precision must be 32 or 64, got {precision}")
    dtype = "<f4" if precision == 32 else "<f8"
    spec = bundle.spec
    header = struct.pack(
        "<4sHBB5Id",
        MAGIC,
        bundle.format_version,
        precision,
        LOSS_KINDS.index(bundle.loss_kind),
        bundle.n_classes,
        spec.channels,
        spec.frames,
        spec.patches,
        bundle.rff.m,
        bundle.rff.gamma,
    )
    payload = np.concatenate(
        [
            bundle.norm_mean,
            bundle.norm_std,
            bundle.rff.b,
            bundle.rff.W.ravel(),
            bundle.weights.ravel(),
        ]
    ).astype(dtype)
    return header + payload.tobytes()


_HEADER = struct.Struct("<4sHBB5Id")


def deserialize(data):
    """Unpack bytes into a ModelBundle (distinct diagnostics per fault)."""
    if len(data) < _HEADER.size:
        raise ModelFormatError("truncated payload: header incomplete")
    magic, version, precision, loss_idx, K, C, T, P, m, gamma = _HEADER.unpack(
        data[: _HEADER.size]
    )
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    if precision not in (32, 64):
        raise ModelFormatError(f"bad precision flag {precision}")
    if loss_idx >= len(LOSS_KINDS):
        raise ModelFormatError(f"bad loss kind {loss_idx}")
    for name, v in (("K", K), ("C", C), ("T", T), ("P", P), ("m", m)):
        if not 1 <= v <= _MAX_DIM:
            raise ModelFormatError(f"dimension overflow: {name}={v}")
    spec = PatchSpec(channels=C, frames=T, patches=P)
    d = spec.patch_dim
    n_vals = 2 * C + m + d * m + K * P * m
    width = 4 if precision == 32 else 8
    expected = _HEADER.size + n_vals * width
    if len(data) != expected:
        raise ModelFormatError(
            f"truncated payload: expected {expected} bytes, got {len(data)}"
        )
    dtype = "<f4" if precision == 32 else "<f8"
    vals = np.frombuffer(data, dtype=dtype, offset=_HEADER.size).astype(float)
    pos = 0

    def take(n, shape):
        nonlocal pos
        out = vals[pos : pos + n].reshape(shape)
        pos += n
        return out

    norm_mean = take(C, (C,))
    norm_std = take(C, (C,))
    b = take(m, (m,))
    W = take(d * m, (d, m))
    A = take(K * P * m, (K, P, m))
    rff = RffMap(W=W, b=b, gamma=gamma, m=m)
    return ModelBundle(
        rff=rff,
        weights=A,
        spec=spec,
        n_classes=K,
        norm_mean=norm_mean,
        norm_std=norm_std,
        loss_kind=LOSS_KINDS[loss_idx],
        format_version=version,
    )


def save_model(bundle, path, precision=64):
    data = serialize(bundle, precision=precision)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_model(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def with_weights(bundle, A):
    """Copy of the bundle with a different weight tensor."""
    return replace(bundle, weights=np.asarray(A, dtype=float))
