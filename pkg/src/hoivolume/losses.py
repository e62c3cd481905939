"""Triplet alignment with semi-hard mining, semantic consistency, BCE, total loss and score fusion.

Every loss returns ``(value, grads)`` where ``grads`` maps an input name to
the gradient array of that input. Subgradients at kinks (hinge, absolute
value, zero distance) are 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .attention import kl_attention_consistency

CLIP = 1e-12
MARGIN = 0.5


class LossError(ValueError):
    pass


@dataclass(frozen=True)
class LossWeights:
    tri: float = 0.001
    att: float = 0.01
    sem: float = 0.01
    cls: float = 1.0

    def __post_init__(self):
        for name in ("tri", "att", "sem", "cls"):
            if getattr(self, name) < 0:
                raise LossError(f"loss weight {name} must be non-negative")


@dataclass
class LossBreakdown:
    l_tri: float
    l_att: float
    l_sem: float
    l_cls_2d: float
    l_cls_3d: float
    l_cls_joint: float
    total: float
    gradients: dict = field(default_factory=dict, repr=False)

    @property
    def l_cls(self):
        return self.l_cls_2d + self.l_cls_3d + self.l_cls_joint

    def to_dict(self, gradients=False):
        d = {k: getattr(self, k) for k in
             ("l_tri", "l_att", "l_sem", "l_cls_2d", "l_cls_3d", "l_cls_joint", "total")}
        if gradients:
            d["gradients"] = {k: np.asarray(v).tolist() for k, v in sorted(self.gradients.items())}
        return d


def _same_shape(name_a, a, name_b, b):
    if a.shape != b.shape:
        raise LossError(f"{name_a} shape {a.shape} != {name_b} shape {b.shape}")


def _unit(diff):
    n = np.linalg.norm(diff)
    return (diff / n if n > 0 else np.zeros_like(diff)), n


def triplet_loss(anchor, pos, neg, alpha=MARGIN):
    """Hinge ``[d(a, p) - d(a, n) + alpha]_+`` with Euclidean ``d``."""
    a, p, n = (np.asarray(x, dtype=float) for x in (anchor, pos, neg))
    _same_shape("anchor", a, "positive", p)
    _same_shape("anchor", a, "negative", n)
    u_ap, d_ap = _unit(a - p)
    u_an, d_an = _unit(a - n)
    margin = d_ap - d_an + alpha
    if margin <= 0:
        z = np.zeros_like(a)
        return 0.0, {"anchor": z, "positive": z.copy(), "negative": z.copy()}
    return float(margin), {"anchor": u_ap - u_an, "positive": -u_ap, "negative": u_an}


def labels_from_targets(targets):
    """Per-row HOI id sets from a binary ``B x m`` target matrix."""
    return [frozenset(np.flatnonzero(np.asarray(row) > 0.5).tolist()) for row in np.atleast_2d(targets)]


@dataclass
class MiningResult:
    triplets: list
    skipped: list

    def __iter__(self):
        return iter(self.triplets)


def mine_semi_hard(anchors, candidates, anchor_labels, candidate_labels, include_self=True):
    """Farthest positive and nearest negative per anchor.

    ``anchors`` (2D features) and ``candidates`` (3D features) are ``B x d``
    arrays; the label arguments are per-row collections of HOI ids. A
    candidate is positive when its label set overlaps the anchor's and
    negative when the two sets are disjoint. With ``include_self`` the
    anchor's own 3D feature (same row index) may be selected as a positive.
    Ties go to the lowest candidate index. Anchors lacking a positive or a
    negative are listed in ``skipped``.

    Returns a :class:`MiningResult` of ``(anchor, positive, negative)`` index
    triples.
    """
    anchors = np.asarray(anchors, dtype=float)
    candidates = np.asarray(candidates, dtype=float)
    if anchors.ndim != 2 or candidates.ndim != 2 or anchors.shape[1] != candidates.shape[1]:
        raise LossError(f"feature shapes {anchors.shape} and {candidates.shape} are incompatible")
    a_sets = [frozenset(lab) for lab in anchor_labels]
    c_sets = [frozenset(lab) for lab in candidate_labels]
    if len(a_sets) != len(anchors) or len(c_sets) != len(candidates):
        raise LossError("one label set is required per feature row")
    dist = np.linalg.norm(anchors[:, None, :] - candidates[None, :, :], axis=2)
    triplets, skipped = [], []
    for i, ai in enumerate(a_sets):
        overlap = np.array([bool(ai & cj) for cj in c_sets], dtype=bool)
        positive = overlap.copy()
        if not include_self and i < len(positive):
            positive[i] = False
        negative = ~overlap
        if not positive.any() or not negative.any():
            skipped.append(i)
            continue
        d = dist[i]
        p = int(np.argmax(np.where(positive, d, -np.inf)))
        n = int(np.argmin(np.where(negative, d, np.inf)))
        triplets.append((i, p, n))
    return MiningResult(triplets, skipped)


def batch_triplet_loss(anchors, candidates, mined, alpha=MARGIN):
    """Mean triplet loss over mined triples, with gradients for both feature matrices."""
    anchors = np.asarray(anchors, dtype=float)
    candidates = np.asarray(candidates, dtype=float)
    g_a = np.zeros_like(anchors)
    g_c = np.zeros_like(candidates)
    triplets = list(mined)
    if not triplets:
        return 0.0, {"anchors": g_a, "candidates": g_c}
    total = 0.0
    for i, p, n in triplets:
        val, g = triplet_loss(anchors[i], candidates[p], candidates[n], alpha)
        total += val
        g_a[i] += g["anchor"]
        g_c[p] += g["positive"]
        g_c[n] += g["negative"]
    k = len(triplets)
    return total / k, {"anchors": g_a / k, "candidates": g_c / k}


def semantic_consistency(s2d, s3d, mode="abs"):
    """Per-class 2D/3D score disagreement.

    ``mode="abs"`` sums ``|s2d_i - s3d_i|`` over classes (the per-class
    2-norm of a scalar). ``mode="l2"`` takes the Euclidean norm of the whole
    difference vector instead.
    """
    a, b = np.asarray(s2d, dtype=float), np.asarray(s3d, dtype=float)
    _same_shape("s2d", a, "s3d", b)
    diff = a - b
    if mode == "abs":
        g = np.sign(diff)
        return float(np.abs(diff).sum()), {"s2d": g, "s3d": -g}
    if mode == "l2":
        u, n = _unit(diff)
        return float(n), {"s2d": u, "s3d": -u}
    raise LossError(f"unknown semantic consistency mode {mode!r}")


def bce_multilabel(scores, targets):
    """Mean binary cross-entropy over classes, scores clipped to ``[1e-12, 1 - 1e-12]``."""
    s = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    _same_shape("scores", s, "targets", t)
    m = s.size
    c = np.clip(s, CLIP, 1.0 - CLIP)
    loss = -np.sum(t * np.log(c) + (1.0 - t) * np.log1p(-c)) / m
    g = (-t / c + (1.0 - t) / (1.0 - c)) / m
    g = np.where((s > CLIP) & (s < 1.0 - CLIP), g, 0.0)
    return float(loss), {"scores": g}


def fuse_scores(s2d_h, s2d_o, s2d_sp, s3d_h, s3d_sp, s_joint):
    """Return ``(S2D, S3D, S)``: ``(h + o) * sp``, ``h3 + sp3`` and their sum with the joint score."""
    arrs = [np.asarray(x, dtype=float) for x in (s2d_h, s2d_o, s2d_sp, s3d_h, s3d_sp, s_joint)]
    names = ("s2d_H", "s2d_O", "s2d_sp", "s3d_H", "s3d_sp", "s_joint")
    for name, arr in zip(names[1:], arrs[1:]):
        _same_shape(names[0], arrs[0], name, arr)
    h, o, sp, h3, sp3, joint = arrs
    s2 = (h + o) * sp
    s3 = h3 + sp3
    return s2, s3, s2 + s3 + joint


COMPONENTS = ("tri", "att", "sem", "cls_2d", "cls_3d", "cls_joint")


def total_loss(parts, weights=LossWeights()):
    """Weighted total of component losses.

    ``parts`` maps each name in :data:`COMPONENTS` to a ``(value, grads)``
    pair. Gradients that share an input name are accumulated, each scaled
    by its component's weight (the three classification terms share the
    ``cls`` weight).
    """
    missing = [c for c in COMPONENTS if c not in parts]
    if missing:
        raise LossError(f"missing loss components: {', '.join(missing)}")
    scale = {"tri": weights.tri, "att": weights.att, "sem": weights.sem,
             "cls_2d": weights.cls, "cls_3d": weights.cls, "cls_joint": weights.cls}
    values = {}
    for name in COMPONENTS:
        value = float(parts[name][0])
        if not math.isfinite(value):
            raise LossError(f"loss component {name} is not finite ({value})")
        values[name] = value
    total = (weights.tri * values["tri"] + weights.att * values["att"] + weights.sem * values["sem"]
             + weights.cls * (values["cls_2d"] + values["cls_3d"] + values["cls_joint"]))
    grads = {}
    for name in COMPONENTS:
        for key, g in parts[name][1].items():
            contrib = scale[name] * np.asarray(g, dtype=float)
            grads[key] = grads[key] + contrib if key in grads else contrib
    return LossBreakdown(values["tri"], values["att"], values["sem"], values["cls_2d"],
                         values["cls_3d"], values["cls_joint"], total, grads)


def joint_objective(x, weights=LossWeights(), alpha=MARGIN, sem_mode="abs"):
    """All components evaluated on one sample and combined.

    ``x`` holds ``anchor``, ``positive``, ``negative`` (spatial features),
    ``a2d``, ``a3d`` (part attention), ``s2d_H``, ``s2d_O``, ``s2d_sp``,
    ``s3d_H``, ``s3d_sp``, ``s_joint`` (per-stream scores) and ``targets``.
    The semantic term compares the fused 2D and 3D scores; classification
    terms are per-stream BCE summed within each branch. Gradients are
    returned for every input except ``targets``.
    """
    tri = triplet_loss(x["anchor"], x["positive"], x["negative"], alpha)
    att = kl_attention_consistency(x["a2d"], x["a3d"])
    h, o, sp = (np.asarray(x[k], dtype=float) for k in ("s2d_H", "s2d_O", "s2d_sp"))
    s2, s3, _ = fuse_scores(h, o, sp, x["s3d_H"], x["s3d_sp"], x["s_joint"])
    sem_val, sem_g = semantic_consistency(s2, s3, sem_mode)
    # chain through S2D = (h + o) * sp and S3D = h3 + sp3
    sem = (sem_val, {"s2d_H": sem_g["s2d"] * sp, "s2d_O": sem_g["s2d"] * sp,
                     "s2d_sp": sem_g["s2d"] * (h + o), "s3d_H": sem_g["s3d"], "s3d_sp": sem_g["s3d"]})
    t = x["targets"]
    cls_2d = _sum_terms(**{k: bce_multilabel(x[k], t) for k in ("s2d_H", "s2d_O", "s2d_sp")})
    cls_3d = _sum_terms(**{k: bce_multilabel(x[k], t) for k in ("s3d_H", "s3d_sp")})
    cls_joint = _sum_terms(s_joint=bce_multilabel(x["s_joint"], t))
    return total_loss({"tri": tri, "att": att, "sem": sem, "cls_2d": cls_2d,
                       "cls_3d": cls_3d, "cls_joint": cls_joint}, weights)


def _sum_terms(**terms):
    value = sum(v for v, _ in terms.values())
    return value, {name: g["scores"] for name, (_, g) in terms.items()}


FEATURE_KEYS = ("f2d_sp", "f3d_sp", "a2d", "a3d")
SCORE_KEYS = ("s2d_H", "s2d_O", "s2d_sp", "s3d_H", "s3d_sp", "s_joint", "targets")


def _check_batch(tensors, keys, rows=None, width=None, kind="tensor"):
    for key in keys:
        if key not in tensors:
            raise LossError(f"missing {kind} {key!r}")
        t = tensors[key]
        if t.ndim != 2:
            raise LossError(f"{key}: expected a 2-D (batch x dim) tensor, got shape {t.shape}")
        if rows is not None and t.shape[0] != rows:
            raise LossError(f"{key}: batch size {t.shape[0]} != {rows}")
        if width is not None and t.shape[1] != width:
            raise LossError(f"{key}: width {t.shape[1]} != {width}")


def batch_breakdown(features, scores, weights=LossWeights(), alpha=MARGIN, sem_mode="abs"):
    """Loss breakdown of one batch.

    ``features`` holds ``f2d_sp`` and ``f3d_sp`` (``B x d``) plus ``a2d`` and
    ``a3d`` (``B x 17``); ``scores`` holds the six per-stream score matrices
    and binary ``targets`` (``B x m``). Triplets are mined inside the batch
    from the target label sets. Every component is averaged over the batch
    (the triplet term over mined triples). Returns ``(breakdown, mined)``.
    """
    _check_batch(features, ("f2d_sp",), kind="feature")
    b, d = features["f2d_sp"].shape
    _check_batch(features, ("f3d_sp",), b, d, "feature")
    _check_batch(features, ("a2d", "a3d"), b, features["a2d"].shape[1] if "a2d" in features else None, "feature")
    _check_batch(scores, SCORE_KEYS, b, scores["s2d_H"].shape[1] if "s2d_H" in scores else None, "score")

    labels = labels_from_targets(scores["targets"])
    mined = mine_semi_hard(features["f2d_sp"], features["f3d_sp"], labels, labels)
    tri_val, tri_g = batch_triplet_loss(features["f2d_sp"], features["f3d_sp"], mined, alpha)
    tri = (tri_val, {"f2d_sp": tri_g["anchors"], "f3d_sp": tri_g["candidates"]})

    att_val, g2, g3 = 0.0, np.zeros_like(features["a2d"]), np.zeros_like(features["a3d"])
    for i in range(b):
        v, g = kl_attention_consistency(features["a2d"][i], features["a3d"][i])
        att_val += v
        g2[i], g3[i] = g["a2d"], g["a3d"]
    att = (att_val / b, {"a2d": g2 / b, "a3d": g3 / b})

    h, o, sp = scores["s2d_H"], scores["s2d_O"], scores["s2d_sp"]
    s2, s3, _ = fuse_scores(h, o, sp, scores["s3d_H"], scores["s3d_sp"], scores["s_joint"])
    sem_val, gs2, gs3 = 0.0, np.zeros_like(s2), np.zeros_like(s3)
    for i in range(b):
        v, g = semantic_consistency(s2[i], s3[i], sem_mode)
        sem_val += v
        gs2[i], gs3[i] = g["s2d"], g["s3d"]
    sem = (sem_val / b, {"s2d_H": gs2 * sp / b, "s2d_O": gs2 * sp / b, "s2d_sp": gs2 * (h + o) / b,
                         "s3d_H": gs3 / b, "s3d_sp": gs3 / b})

    def cls(keys):
        value, grads = 0.0, {}
        for k in keys:
            v, g = bce_multilabel(scores[k], scores["targets"])
            # the mean over all B*m entries equals the batch mean of per-sample losses
            value += v
            grads[k] = g["scores"]
        return value, grads

    breakdown = total_loss({"tri": tri, "att": att, "sem": sem, "cls_2d": cls(("s2d_H", "s2d_O", "s2d_sp")),
                            "cls_3d": cls(("s3d_H", "s3d_sp")), "cls_joint": cls(("s_joint",))}, weights)
    return breakdown, mined
