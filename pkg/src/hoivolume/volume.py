"""Normalized 3D spatial configuration volume: body points plus a hollow object sphere."""

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import SphereEstimate
from .joints import (
    LEFT_EYE,
    LEFT_SHOULDER,
    NUM_BODY_POINTS,
    NUM_JOINTS,
    NUM_SETS,
    NUM_SPHERE_POINTS,
    OBJECT_LABEL,
    PART_WORDS,
    PELVIS,
    RIGHT_EYE,
    RIGHT_SHOULDER,
)

DEFAULT_GRAVITY = (0.0, 1.0, 0.0)


class VolumeError(ValueError):
    pass


@dataclass(frozen=True)
class BodyPoints:
    vertices: np.ndarray
    joints3d: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        j = np.asarray(self.joints3d, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise VolumeError(f"vertices must be N x 3, got {v.shape}")
        if j.shape != (NUM_JOINTS, 3):
            raise VolumeError(f"joints3d must be {NUM_JOINTS} x 3, got {j.shape}")
        if not np.isfinite(j).all():
            raise VolumeError("joints3d contains non-finite values")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "joints3d", j)


@dataclass
class ConfigurationVolume:
    """1228 labeled points in the normalized frame.

    Rows ``[0, 916)`` are body points and rows ``[916, 1228)`` sphere points.
    ``labels[i]`` is ``j + 1`` for a body point nearest joint ``j`` and
    ``OBJECT_LABEL`` (18) for sphere points. ``semantics`` holds one reduced
    embedding per set, row ``label - 1``.
    """

    points: np.ndarray
    labels: np.ndarray
    joints: np.ndarray
    category: str
    sphere_center: np.ndarray = None
    sphere_radius: float = None
    semantics: np.ndarray = field(default=None, repr=False)

    @property
    def body(self):
        return self.points[:NUM_BODY_POINTS]

    @property
    def sphere(self):
        return self.points[NUM_BODY_POINTS:]

    def sets(self):
        """Map label -> point indices for all 18 sets (possibly empty)."""
        return {lab: np.flatnonzero(self.labels == lab) for lab in range(1, NUM_SETS + 1)}

    def point_semantics(self):
        """Per-point embedding, i.e. each point's set semantics."""
        if self.semantics is None:
            raise VolumeError("volume has no semantics; call pair_semantics first")
        return self.semantics[self.labels - 1]


def farthest_point_indices(points, n, seed=0):
    """Greedy farthest-point sampling; the start index is drawn from ``seed``."""
    points = np.asarray(points, dtype=float)
    num = len(points)
    if num < n:
        raise VolumeError(f"need at least {n} points, got {num}")
    rng = np.random.default_rng(seed)
    idx = np.empty(n, dtype=np.int64)
    idx[0] = rng.integers(num)
    dist = np.full(num, np.inf)
    for i in range(1, n):
        d = np.sum((points - points[idx[i - 1]]) ** 2, axis=1)
        np.minimum(dist, d, out=dist)
        idx[i] = np.argmax(dist)
    return idx


def downsample_body(body, n=NUM_BODY_POINTS, seed=0):
    vertices = body.vertices if isinstance(body, BodyPoints) else np.asarray(body, dtype=float)
    return vertices[farthest_point_indices(vertices, n, seed)]


def sample_sphere_surface(est, n=NUM_SPHERE_POINTS, seed=0):
    """Uniform points on the sphere surface (normalized Gaussian directions)."""
    if not est.radius > 0:
        raise VolumeError("sphere radius must be positive")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return est.center + est.radius * d


def normalizing_transform(joints3d, gravity=DEFAULT_GRAVITY):
    """Return ``(rotation, origin, scale)`` with ``x_new = scale * R @ (x - origin)``.

    Gravity maps to -z. The left-minus-right shoulder vector, after removing
    its gravity component, maps to +x. Unit length is the eye distance.
    """
    joints3d = np.asarray(joints3d, dtype=float)
    g = np.asarray(gravity, dtype=float)
    gn = np.linalg.norm(g)
    if not gn > 0:
        raise VolumeError("gravity vector must be nonzero")
    z_axis = -g / gn
    shoulders = joints3d[LEFT_SHOULDER] - joints3d[RIGHT_SHOULDER]
    if not np.linalg.norm(shoulders) > 0:
        raise VolumeError("shoulder joints coincide")
    x_axis = shoulders - np.dot(shoulders, z_axis) * z_axis
    xn = np.linalg.norm(x_axis)
    if xn <= 1e-9 * np.linalg.norm(shoulders):
        raise VolumeError("gravity is parallel to the shoulder line; frame is undefined")
    x_axis /= xn
    y_axis = np.cross(z_axis, x_axis)
    rot = np.stack([x_axis, y_axis, z_axis])
    pupil = np.linalg.norm(joints3d[LEFT_EYE] - joints3d[RIGHT_EYE])
    if not pupil > 0:
        raise VolumeError("pupil joints coincide; cannot normalize scale")
    return rot, joints3d[PELVIS].copy(), 1.0 / pupil


def apply_transform(points, rot, origin, scale):
    return scale * (np.asarray(points, dtype=float) - origin) @ rot.T


def align_and_normalize(body_points, sphere_points, joints3d, gravity=DEFAULT_GRAVITY):
    """Apply the normalizing similarity transform to body, sphere and joints.

    Returns ``(body, sphere, joints)`` in the normalized frame.
    """
    rot, origin, scale = normalizing_transform(joints3d, gravity)
    return (apply_transform(body_points, rot, origin, scale),
            apply_transform(sphere_points, rot, origin, scale),
            apply_transform(joints3d, rot, origin, scale))


def assign_part_sets(points, joints, num_body=NUM_BODY_POINTS):
    """Label each of the first ``num_body`` points with its nearest joint (+1).

    Remaining points are sphere points and get ``OBJECT_LABEL``. Ties go to
    the lower joint index.
    """
    points = np.asarray(points, dtype=float)
    joints = np.asarray(joints, dtype=float)
    labels = np.full(len(points), OBJECT_LABEL, dtype=np.int64)
    body = points[:num_body]
    d = np.linalg.norm(body[:, None, :] - joints[None, :, :], axis=2)
    labels[:num_body] = np.argmin(d, axis=1) + 1
    return labels


def build_volume(body, sphere, category, n_body=NUM_BODY_POINTS, n_sphere=NUM_SPHERE_POINTS,
                 seed=0, gravity=DEFAULT_GRAVITY):
    """Down-sample, sample the sphere, normalize and partition into a volume.

    ``body`` is a :class:`BodyPoints` in camera coordinates and ``sphere`` a
    :class:`~hoivolume.geometry.SphereEstimate` in the same frame.
    """
    rng = np.random.default_rng(seed)
    body_seed, sphere_seed = rng.integers(2**31, size=2)
    body_pts = downsample_body(body, n_body, seed=int(body_seed))
    rot, origin, scale = normalizing_transform(body.joints3d, gravity)
    joints = apply_transform(body.joints3d, rot, origin, scale)
    center = apply_transform(sphere.center[None], rot, origin, scale)[0]
    # sampled in the normalized frame so the volume is invariant to the input pose
    local = SphereEstimate(center, sphere.radius * scale, sphere.clamped)
    sphere_pts = sample_sphere_surface(local, n_sphere, seed=int(sphere_seed))
    points = np.vstack([apply_transform(body_pts, rot, origin, scale), sphere_pts])
    labels = assign_part_sets(points, joints, n_body)
    return ConfigurationVolume(points, labels, joints, category, center, local.radius)


@dataclass(frozen=True)
class PCAResult:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T


def fit_pca(data, k):
    """Top-``k`` principal axes of ``data`` (rows are samples).

    Each component's sign is chosen so that its largest-magnitude
    coordinate is positive.
    """
    data = np.asarray(data, dtype=float)
    v, d = data.shape
    if not 1 <= k <= min(v, d):
        raise VolumeError(f"k={k} must be in [1, min(V, D)] = [1, {min(v, d)}]")
    mean = data.mean(axis=0)
    _, s, vt = np.linalg.svd(data - mean, full_matrices=False)
    comps = vt[:k]
    pivot = np.argmax(np.abs(comps), axis=1)
    comps = comps * np.sign(comps[np.arange(k), pivot])[:, None]
    var = s**2 / max(v - 1, 1)
    total = var.sum()
    ratio = var[:k] / total if total > 0 else np.zeros(k)
    return PCAResult(mean, comps, var[:k], ratio)


def pca_reduce(embeddings, k):
    return fit_pca(embeddings, k).transform(embeddings)


def load_embedding_table(path):
    """Read ``name v1 ... vD`` lines into an ordered dict of float vectors."""
    table = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            name, values = parts[0], np.array([float(x) for x in parts[1:]])
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise VolumeError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            table[name] = values
    if not table:
        raise VolumeError(f"{path}: empty embedding table")
    return table


def reduce_embedding_table(table, k):
    names = list(table)
    reduced = pca_reduce(np.stack([table[n] for n in names]), k)
    return dict(zip(names, reduced))


def _find(table, name):
    for key in (name, name.replace(" ", "_"), name.replace("_", " ")):
        if key in table:
            return table[key]
    return None


def set_words(category):
    """The 18 words paired with the volume's sets, in label order."""
    return list(PART_WORDS) + [category]


def pair_semantics(volume, embedding_table, k):
    """Attach the PCA-reduced embedding of each set's word to the volume."""
    words = set_words(volume.category)
    missing = [w for w in dict.fromkeys(words) if _find(embedding_table, w) is None]
    if missing:
        raise VolumeError(f"embedding table is missing: {', '.join(missing)}")
    reduced = reduce_embedding_table(embedding_table, k)
    semantics = np.stack([_find(reduced, w) for w in words])
    return replace(volume, semantics=semantics)
