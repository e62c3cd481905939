"""Independent oracles and synthetic fixtures for the test suite."""

import numpy as np

from hoivolume.joints import NUM_JOINTS

# Upright body in a right-handed canonical frame: x toward the person's left,
# y backward, z up (meters). This is also the normalized volume frame.
CANONICAL_JOINTS = np.array([
    [0.0, -0.1, 1.60],     # nose
    [0.0, 0.0, 1.45],      # neck
    [-0.20, 0.0, 1.45],    # right shoulder
    [-0.30, 0.0, 1.20],    # right elbow
    [-0.35, -0.05, 0.95],   # right wrist
    [0.20, 0.0, 1.45],     # left shoulder
    [0.30, 0.0, 1.20],     # left elbow
    [0.35, -0.05, 0.95],    # left wrist
    [0.0, 0.0, 0.95],      # pelvis
    [-0.10, 0.0, 0.90],    # right hip
    [-0.10, -0.02, 0.50],   # right knee
    [-0.10, 0.0, 0.08],    # right ankle
    [0.10, 0.0, 0.90],     # left hip
    [0.10, -0.02, 0.50],    # left knee
    [0.10, 0.0, 0.08],     # left ankle
    [-0.032, -0.08, 1.65],  # right eye
    [0.032, -0.08, 1.65],   # left eye
])

BONES = [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7), (1, 8), (8, 9), (9, 10), (10, 11),
         (8, 12), (12, 13), (13, 14), (0, 15), (0, 16)]

# Canonical frame -> camera frame (x right, y down, z forward), person facing the camera.
CANON_TO_CAMERA = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def canonical_body(rng, n_vertices=2000):
    """Joints plus vertices scattered around the bones, in the canonical frame."""
    per = n_vertices // len(BONES) + 1
    pts = []
    for a, b in BONES:
        t = rng.random(per)[:, None]
        seg = CANONICAL_JOINTS[a] + t * (CANONICAL_JOINTS[b] - CANONICAL_JOINTS[a])
        pts.append(seg + 0.04 * rng.standard_normal((per, 3)))
    return CANONICAL_JOINTS.copy(), np.vstack(pts)[:n_vertices]


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def yaw(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def camera_body(rng, depth=(6.0, 12.0), n_vertices=2000):
    """Synthetic body in camera coordinates with gravity along +y.

    Returns ``(joints, vertices, gravity)``.
    """
    joints, verts = canonical_body(rng, n_vertices)
    rot = CANON_TO_CAMERA @ yaw(rng.uniform(-0.6, 0.6))
    offset = np.array([rng.uniform(-1, 1), rng.uniform(-0.3, 0.3), rng.uniform(*depth)])
    pelvis = joints[8]
    return (joints - pelvis) @ rot.T + offset, (verts - pelvis) @ rot.T + offset, np.array([0.0, 1.0, 0.0])


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5**0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)


def silhouette_extremes(focal, pp, center, radius, n=40000):
    """Projected (u_min, u_max, v_min, v_max) of a densely sampled sphere."""
    p = center + radius * fibonacci_sphere(n)
    u = focal * p[:, 0] / p[:, 2] + pp[0]
    v = focal * p[:, 1] / p[:, 2] + pp[1]
    return u.min(), u.max(), v.min(), v.max()


def central_diff(fn, x, step=1e-5):
    """Central differences of scalar ``fn`` at array ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (fn(xp) - fn(xm)) / (2 * step)
    return g


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def random_pose(rng, n=NUM_JOINTS):
    return np.column_stack([rng.uniform(0, 100, n), rng.uniform(0, 200, n), np.ones(n)])


CATEGORIES = ("cup", "bottle", "horse", "sports ball", "chair", "kite", "train", "bicycle")


def make_detections(root, n, seed=0, focal=5000.0, image_size=(640, 480)):
    """Write ``n`` synthetic pairs plus body point files under ``root``.

    Returns the path of the detections JSON.
    """
    import json
    from pathlib import Path

    root = Path(root)
    (root / "bodies").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    cx, cy = image_size[0] / 2, image_size[1] / 2
    records = []
    for i in range(n):
        joints, verts, g = camera_body(rng, depth=(15.0, 30.0), n_vertices=1500)
        uv = focal * verts[:, :2] / verts[:, 2:] + [cx, cy]
        human = [*uv.min(axis=0), *uv.max(axis=0)]
        hand = focal * joints[4, :2] / joints[4, 2] + [cx, cy]
        half = rng.uniform(3, 15)
        obj = [hand[0] - half, hand[1] - half, hand[0] + half, hand[1] + half * rng.uniform(0.8, 1.5)]
        pose = focal * joints[:, :2] / joints[:, 2:] + [cx, cy]
        name = f"bodies/body_{i:03d}.npy"
        np.save(root / name, verts)
        records.append({
            "image_id": f"img{i // 2:03d}",
            "human_box": [float(x) for x in human],
            "object_box": [float(x) for x in obj],
            "object_category": CATEGORIES[i % len(CATEGORIES)],
            "pose2d": np.column_stack([pose, np.ones(17)]).tolist(),
            "body_points_path": name,
            "joints3d": joints.tolist(),
            "gravity": g.tolist(),
            "image_size": list(image_size),
        })
    path = root / "detections.json"
    path.write_text(json.dumps(records))
    return path
