"""2D joint attention, 3D part attention head, KL consistency and feature re-weighting."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fileio import decode_tensor, encode_tensor
from .joints import NUM_JOINTS, NUM_VOLUME_POINTS, OBJECT_LABEL

SPATIAL_3D_DIM = 384
HUMAN_3D_DIM = 1024
HIDDEN_DIM = 512


class AttentionError(ValueError):
    pass


def softmax(x, axis=-1):
    z = np.asarray(x, dtype=float)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def attention_map_2d(f):
    """Softmax over all positions of each position's inner product with the GAP vector.

    ``f`` is an ``H x W x C`` feature grid; returns ``H x W`` summing to 1.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 3 or f.shape[0] * f.shape[1] < 1:
        raise AttentionError(f"expected an H x W x C grid, got shape {f.shape}")
    g = f.mean(axis=(0, 1))
    logits = f @ g
    return softmax(logits.ravel()).reshape(logits.shape)


def joint_attention_2d(att, joint_cells):
    """Distance-weighted attention per joint, normalized over joints.

    Every map cell ``(u, v)`` (``u`` the column, ``v`` the row index)
    contributes to joint ``i`` with weight ``1 / (1 + d)``, ``d`` the
    Euclidean distance in cells to the joint at ``joint_cells[i] = (u_i, v_i)``.
    Each joint's score is the weighted mean attention; the scores are then
    normalized to sum to 1.
    """
    att = np.asarray(att, dtype=float)
    cells = np.asarray(joint_cells, dtype=float)
    if att.ndim != 2:
        raise AttentionError(f"attention map must be 2-D, got shape {att.shape}")
    if (att < 0).any():
        raise AttentionError("attention map has negative entries")
    h, w = att.shape
    vv, uu = np.mgrid[0:h, 0:w]
    d = np.hypot(uu[None] - cells[:, 0, None, None], vv[None] - cells[:, 1, None, None])
    k = 1.0 / (1.0 + d)
    a_hat = (k * att[None]).sum(axis=(1, 2)) / k.sum(axis=(1, 2))
    total = a_hat.sum()
    if not total > 0:
        raise AttentionError("attention map is identically zero")
    return a_hat / total


@dataclass
class AttentionHead:
    """Dense 1408 -> 512 -> 512 -> 17 map with ReLU between layers and a softmax output."""

    weights: list
    biases: list

    @classmethod
    def init(cls, seed=0, in_dim=SPATIAL_3D_DIM + HUMAN_3D_DIM, hidden=HIDDEN_DIM, out_dim=NUM_JOINTS):
        rng = np.random.default_rng(seed)
        dims = [in_dim, hidden, hidden, out_dim]
        weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a) for a, b in zip(dims[:-1], dims[1:])]
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(weights, biases)

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    def logits(self, x):
        h = np.asarray(x, dtype=float)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h

    def __call__(self, x):
        return softmax(self.logits(x))

    def to_dict(self):
        return {"layers": [{"weight": encode_tensor(w), "bias": encode_tensor(b)}
                           for w, b in zip(self.weights, self.biases)]}

    @classmethod
    def from_dict(cls, d):
        weights, biases = [], []
        for i, layer in enumerate(d["layers"]):
            w = decode_tensor(layer["weight"], f"layer{i}.weight")
            b = decode_tensor(layer["bias"], f"layer{i}.bias")
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise AttentionError(f"layer {i}: bad shapes {w.shape}, {b.shape}")
            if weights and weights[-1].shape[1] != w.shape[0]:
                raise AttentionError(f"layer {i}: input dim {w.shape[0]} != previous output {weights[-1].shape[1]}")
            weights.append(w)
            biases.append(b)
        if weights[-1].shape[1] != NUM_JOINTS:
            raise AttentionError(f"final layer must output {NUM_JOINTS} values")
        return cls(weights, biases)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def part_attention_3d(f_sp, f_h, head):
    """17-way part attention from per-point and human 3D features.

    ``f_h`` is tiled to every point, concatenated with ``f_sp``, averaged
    over points and passed through ``head``.
    """
    f_sp = np.asarray(f_sp, dtype=float)
    f_h = np.asarray(f_h, dtype=float)
    if f_sp.ndim != 2 or f_h.ndim != 1:
        raise AttentionError(f"expected N x D point features and a 1-D human feature, got {f_sp.shape}, {f_h.shape}")
    if f_sp.shape[1] + f_h.shape[0] != head.in_dim:
        raise AttentionError(f"concatenated width {f_sp.shape[1] + f_h.shape[0]} != head input {head.in_dim}")
    f3d = np.concatenate([f_sp, np.tile(f_h, (len(f_sp), 1))], axis=1)
    return head(f3d.mean(axis=0))


def assemble_att3d(part_att, labels):
    """Per-point attention: a body point takes its part's value, sphere points get 1."""
    part_att = np.asarray(part_att, dtype=float)
    labels = np.asarray(labels)
    out = np.ones(len(labels))
    body = labels != OBJECT_LABEL
    out[body] = part_att[labels[body] - 1]
    return out


def _smooth(a, eps):
    s = a + eps
    return s / s.sum()


def _smooth_vjp(a, eps, grad):
    # d/da of (a + eps) / sum(a + eps), applied to an upstream gradient.
    total = (a + eps).sum()
    p = (a + eps) / total
    return (grad - np.dot(grad, p)) / total


def kl_attention_consistency(a2d, a3d, eps=None):
    """KL divergence ``sum_i a2d_i ln(a2d_i / a3d_i)`` with gradients.

    Terms with ``a2d_i == 0`` contribute 0 (and a gradient of 0 w.r.t.
    ``a2d_i``). With ``eps`` set, both inputs are first smoothed to
    ``(a + eps) / sum(a + eps)`` and gradients are taken through the
    smoothing.

    Returns ``(loss, {"a2d": grad, "a3d": grad})``.
    """
    raw2, raw3 = np.asarray(a2d, dtype=float), np.asarray(a3d, dtype=float)
    if raw2.shape != raw3.shape:
        raise AttentionError(f"shape mismatch {raw2.shape} vs {raw3.shape}")
    if (raw2 < 0).any() or (raw3 < 0).any():
        raise AttentionError("attention values must be non-negative")
    p, q = (raw2, raw3) if eps is None else (_smooth(raw2, eps), _smooth(raw3, eps))
    pos = p > 0
    if (q[pos] <= 0).any():
        raise AttentionError("infinite KL: a3d is zero where a2d is positive")
    log_ratio = np.zeros_like(p)
    log_ratio[pos] = np.log(p[pos] / q[pos])
    loss = float(np.sum(p * log_ratio))
    g_p = np.where(pos, log_ratio + 1.0, 0.0)
    g_q = np.zeros_like(q)
    g_q[pos] = -p[pos] / q[pos]
    if eps is not None:
        g_p, g_q = _smooth_vjp(raw2, eps, g_p), _smooth_vjp(raw3, eps, g_q)
    return loss, {"a2d": g_p, "a3d": g_q}


def reweight(features, att):
    """Scale each position's (or point's) feature vector by its attention scalar."""
    features = np.asarray(features, dtype=float)
    att = np.asarray(att, dtype=float)
    if features.shape[:-1] != att.shape:
        raise AttentionError(f"attention shape {att.shape} does not match features {features.shape}")
    return features * att[..., None]


def check_volume_features(f_sp):
    f_sp = np.asarray(f_sp)
    if f_sp.ndim != 2 or f_sp.shape[0] != NUM_VOLUME_POINTS:
        raise AttentionError(f"3D spatial features must have {NUM_VOLUME_POINTS} rows, got {f_sp.shape}")
    return f_sp
