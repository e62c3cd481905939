"""Pose-ambiguity curation: Procrustes alignment to templates, clustering, ranking, and the latent outlier filter."""

import math
from dataclasses import dataclass

import numpy as np

from .joints import NUM_JOINTS


class AmbiguityError(ValueError):
    pass


@dataclass(frozen=True)
class Pose2D:
    joints: np.ndarray
    visible: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.joints, dtype=float)
        v = np.asarray(self.visible, dtype=bool)
        if j.shape != (NUM_JOINTS, 2) or v.shape != (NUM_JOINTS,):
            raise AmbiguityError(f"pose must be {NUM_JOINTS} x 2 with {NUM_JOINTS} flags, got {j.shape}, {v.shape}")
        object.__setattr__(self, "joints", j)
        object.__setattr__(self, "visible", v)

    @classmethod
    def from_array(cls, arr):
        """From ``17 x 3`` rows ``(u, v, vis)`` or ``17 x 2`` rows (all visible)."""
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 2:
            return cls(arr, np.ones(len(arr), dtype=bool))
        return cls(arr[:, :2], arr[:, 2] > 0)


@dataclass(frozen=True)
class Alignment:
    aligned: Pose2D
    residual: float
    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    used: np.ndarray


def procrustes_align(src, dst):
    """Similarity transform of ``src`` onto ``dst`` over mutually visible joints.

    Least-squares translation, rotation and uniform scale, reflections
    excluded. ``residual`` is the RMS joint distance after alignment.
    """
    used = src.visible & dst.visible
    if used.sum() < 3:
        raise AmbiguityError(f"need at least 3 common visible joints, got {int(used.sum())}")
    x, y = src.joints[used], dst.joints[used]
    mx, my = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - mx, y - my
    var_x = float((xc**2).sum())
    if var_x <= 0:
        raise AmbiguityError("source pose has zero spread over the used joints")
    u, s, vt = np.linalg.svd(yc.T @ xc)
    d = np.array([1.0, np.sign(np.linalg.det(u @ vt)) or 1.0])
    rot = (u * d) @ vt
    scale = float((s * d).sum() / var_x)
    trans = my - scale * rot @ mx
    aligned = scale * src.joints @ rot.T + trans
    residual = float(np.sqrt(np.mean(np.sum((aligned[used] - y) ** 2, axis=1))))
    return Alignment(Pose2D(aligned, src.visible), residual, scale, rot, trans, used)


def kmeans(x, k, seed=0, max_iter=100, tol=1e-6):
    """Lloyd's algorithm with k-means++ seeding.

    Stops when no center moves more than ``tol``. Empty clusters keep their
    previous center. Returns ``(centers, assignment)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if not 1 <= k <= n:
        raise AmbiguityError(f"k={k} must be between 1 and the sample count {n}")
    rng = np.random.default_rng(seed)
    centers = [x[rng.integers(n)]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        p = d2 / total if total > 0 else np.full(n, 1.0 / n)
        c = x[rng.choice(n, p=p)]
        centers.append(c)
        d2 = np.minimum(d2, np.sum((x - c) ** 2, axis=1))
    centers = np.array(centers)
    for _ in range(max_iter):
        assign = np.argmin(np.sum((x[:, None, :] - centers[None]) ** 2, axis=2), axis=1)
        new = centers.copy()
        for j in range(k):
            members = x[assign == j]
            if len(members):
                new[j] = members.mean(axis=0)
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift <= tol:
            break
    assign = np.argmin(np.sum((x[:, None, :] - centers[None]) ** 2, axis=2), axis=1)
    return centers, assign


@dataclass(frozen=True)
class AmbiguityRecord:
    sample_id: str
    distances: tuple
    mean_distance: float


def _template_features(sample, template):
    # Joints missing from either pose are pinned to the template so they add nothing.
    al = procrustes_align(sample, template)
    keep = sample.visible & template.visible
    feats = np.where(keep[:, None], al.aligned.joints, template.joints)
    return feats.ravel()


def cluster_and_rank(samples, templates, k, seed=0):
    """Rank samples by mean distance to their k-means center across templates.

    ``samples`` is a sequence of ``(sample_id, Pose2D)``. For each template,
    every sample is aligned to it, the aligned joint vectors are clustered
    and each sample's distance to its assigned center is recorded. Samples
    that cannot be aligned to a template get NaN for it and the mean skips
    it. Output is sorted by descending mean distance; ties and NaNs keep
    sample-id order (NaNs last). Samples are processed in sample-id order,
    so the result does not depend on input order.
    """
    samples = sorted(samples, key=lambda s: str(s[0]))
    if not samples:
        raise AmbiguityError("no samples to rank")
    if not templates:
        raise AmbiguityError("no templates given")
    if k > len(samples):
        raise AmbiguityError(f"k={k} exceeds the sample count {len(samples)}")
    n = len(samples)
    dist = np.full((n, len(templates)), np.nan)
    for t, template in enumerate(templates):
        rows, feats = [], []
        for i, (_, pose) in enumerate(samples):
            try:
                feats.append(_template_features(pose, template))
                rows.append(i)
            except AmbiguityError:
                continue
        if not rows:
            continue
        feats = np.array(feats)
        centers, assign = kmeans(feats, min(k, len(rows)), seed=seed)
        dist[rows, t] = np.linalg.norm(feats - centers[assign], axis=1)
    records = []
    for i, (sid, _) in enumerate(samples):
        row = dist[i]
        mean = float(np.mean(row[~np.isnan(row)])) if (~np.isnan(row)).any() else math.nan
        records.append(AmbiguityRecord(str(sid), tuple(float(d) for d in row), mean))
    return sorted(records, key=lambda r: (math.isnan(r.mean_distance),
                                          -r.mean_distance if not math.isnan(r.mean_distance) else 0.0))


def combine_with_probe(records, probes, weight=0.5):
    """Blend the distance rank with an external per-sample probe score.

    The rank score is ``1 - (rank - 1) / (n - 1)`` (1 for the most
    ambiguous sample). ``combined = weight * rank_score + (1 - weight) * probe``.
    Returns ``[(record, rank, probe, combined)]`` in the input order.
    """
    n = len(records)
    out = []
    for rank, rec in enumerate(records, start=1):
        rank_score = 1.0 if n == 1 else 1.0 - (rank - 1) / (n - 1)
        probe = probes.get(rec.sample_id)
        combined = None if probe is None else weight * rank_score + (1.0 - weight) * float(probe)
        out.append((rec, rank, probe, combined))
    return out


def flag_count(n, fraction):
    # tolerance guards against 0.1 * 30 == 3.0000000000000004
    return min(n, math.ceil(fraction * n - 1e-9))


def distances_to_mean(embeddings):
    e = np.asarray(embeddings, dtype=float)
    return np.linalg.norm(e - e.mean(axis=0), axis=1)


def monster_filter(embeddings, fraction=0.10):
    """Flag the ``ceil(fraction * n)`` embeddings farthest from the mean embedding.

    Ties in distance go to the lower sample index.
    """
    e = np.asarray(embeddings, dtype=float)
    if e.ndim != 2 or len(e) < 1:
        raise AmbiguityError(f"expected a non-empty n x d array, got shape {e.shape}")
    if not 0 < fraction < 1:
        raise AmbiguityError(f"fraction must be in (0, 1), got {fraction}")
    dist = distances_to_mean(e)
    order = np.lexsort((np.arange(len(e)), -dist))
    flags = np.zeros(len(e), dtype=bool)
    flags[order[:flag_count(len(e), fraction)]] = True
    return flags
