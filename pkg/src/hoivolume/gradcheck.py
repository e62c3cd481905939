"""Central finite-difference checks of every analytic loss gradient."""

import numpy as np

from .attention import kl_attention_consistency
from .joints import NUM_JOINTS
from .losses import (
    LossWeights,
    bce_multilabel,
    joint_objective,
    semantic_consistency,
    triplet_loss,
)

KINK = 1e-3
# ln is singular at 0; central differences lose accuracy as (STEP / a)^2 near it
SIMPLEX_FLOOR = 5e-3
STEP = 1e-5


def numeric_grad(fn, inputs, key, step=STEP):
    x = {k: np.array(v, dtype=float) for k, v in inputs.items()}
    base = x[key]
    g = np.zeros_like(base)
    for i in np.ndindex(base.shape):
        orig = base[i]
        base[i] = orig + step
        fp = fn(x)
        base[i] = orig - step
        fm = fn(x)
        base[i] = orig
        g[i] = (fp - fm) / (2 * step)
    return g


def relative_error(analytic, numeric):
    a, n = np.ravel(analytic), np.ravel(numeric)
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)


def _simplex(rng, n):
    while True:
        a = rng.dirichlet(np.full(n, 4.0))
        if a.min() >= SIMPLEX_FLOOR:
            return a


def triplet_case(rng, dim, alpha=0.5):
    while True:
        a, p, n = (rng.standard_normal(dim) for _ in range(3))
        d_ap, d_an = np.linalg.norm(a - p), np.linalg.norm(a - n)
        if abs(d_ap - d_an + alpha) >= KINK and min(d_ap, d_an) >= KINK:
            return {"anchor": a, "positive": p, "negative": n}


def semantic_case(rng, dim):
    while True:
        s2, s3 = rng.uniform(0, 2, dim), rng.uniform(0, 2, dim)
        if np.abs(s2 - s3).min() >= KINK:
            return {"s2d": s2, "s3d": s3}


def bce_case(rng, dim):
    return {"scores": rng.uniform(0.01, 0.99, dim), "targets": (rng.random(dim) < 0.3).astype(float)}


def kl_case(rng):
    return {"a2d": _simplex(rng, NUM_JOINTS), "a3d": _simplex(rng, NUM_JOINTS)}


def total_case(rng, dim, m):
    while True:
        x = triplet_case(rng, dim)
        x.update(kl_case(rng))
        for k in ("s2d_H", "s2d_O", "s2d_sp", "s3d_H", "s3d_sp", "s_joint"):
            x[k] = rng.uniform(0.02, 0.98, m)
        x["targets"] = (rng.random(m) < 0.3).astype(float)
        s2 = (x["s2d_H"] + x["s2d_O"]) * x["s2d_sp"]
        s3 = x["s3d_H"] + x["s3d_sp"]
        if np.abs(s2 - s3).min() >= KINK:
            return x


def _check(value_and_grads, inputs, keys, corrupt=False):
    _, grads = value_and_grads(inputs)
    worst = 0.0
    for key, gkey in keys:
        g = grads[gkey] * (1.01 if corrupt else 1.0)
        num = numeric_grad(lambda x: value_and_grads(x)[0], inputs, key)
        worst = max(worst, relative_error(g, num))
    return worst


def _total(x, weights):
    b = joint_objective(x, weights)
    return b.total, b.gradients


CHECKS = ("triplet", "kl", "semantic", "bce", "total")


def run_grad_check(seeds=range(100), dim=16, m=24, weights=LossWeights(), corrupt=None):
    """Maximum relative gradient error per loss over ``seeds``.

    ``corrupt`` names a check whose analytic gradient is scaled by 1.01,
    to exercise the failure path.
    """
    if dim < 1 or m < 1:
        raise ValueError(f"feature and score dimensions must be positive (dim={dim}, m={m})")
    if corrupt is not None and corrupt not in CHECKS:
        raise ValueError(f"unknown check {corrupt!r}; choose from {', '.join(CHECKS)}")
    worst = dict.fromkeys(CHECKS, 0.0)
    total_keys = [(k, k) for k in ("anchor", "positive", "negative", "a2d", "a3d", "s2d_H", "s2d_O",
                                   "s2d_sp", "s3d_H", "s3d_sp", "s_joint")]
    for seed in seeds:
        rng = np.random.default_rng(seed)
        runs = {
            "triplet": (lambda x: triplet_loss(x["anchor"], x["positive"], x["negative"]),
                        triplet_case(rng, dim), [(k, k) for k in ("anchor", "positive", "negative")]),
            "kl": (lambda x: kl_attention_consistency(x["a2d"], x["a3d"]),
                   kl_case(rng), [("a2d", "a2d"), ("a3d", "a3d")]),
            "semantic": (lambda x: semantic_consistency(x["s2d"], x["s3d"]),
                         semantic_case(rng, m), [("s2d", "s2d"), ("s3d", "s3d")]),
            "bce": (lambda x: bce_multilabel(x["scores"], x["targets"]),
                    bce_case(rng, m), [("scores", "scores")]),
            "total": (lambda x: _total(x, weights), total_case(rng, dim, m), total_keys),
        }
        for name, (fn, inputs, keys) in runs.items():
            err = _check(fn, inputs, keys, corrupt=(name == corrupt))
            worst[name] = max(worst[name], err)
    return worst
