"""From a posed body and an object sphere to a normalized 1228-point volume."""

import tempfile
from pathlib import Path

import numpy as np

from hoivolume import BodyPoints, SphereEstimate, build_volume, write_volume
from hoivolume.fileio import read_volume
from hoivolume.joints import JOINT_NAMES, LEFT_EYE, LEFT_SHOULDER, RIGHT_EYE, RIGHT_SHOULDER

rng = np.random.default_rng(0)

# %% A stick-figure body standing 8 m in front of the camera (y points down).
joints = np.array([
    [0.0, -1.60, 0.1], [0.0, -1.45, 0.0], [-0.2, -1.45, 0.0], [-0.3, -1.2, 0.0], [-0.35, -0.95, -0.05],
    [0.2, -1.45, 0.0], [0.3, -1.2, 0.0], [0.35, -0.95, -0.05], [0.0, -0.95, 0.0], [-0.1, -0.9, 0.0],
    [-0.1, -0.5, 0.02], [-0.1, -0.08, 0.0], [0.1, -0.9, 0.0], [0.1, -0.5, 0.02], [0.1, -0.08, 0.0],
    [-0.032, -1.65, 0.08], [0.032, -1.65, 0.08],
]) + [0.3, 0.5, 8.0]
bones = [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7), (1, 8), (8, 9), (9, 10), (10, 11),
         (8, 12), (12, 13), (13, 14)]
t = rng.random((150, 1))
vertices = np.vstack([joints[a] + t * (joints[b] - joints[a]) + 0.03 * rng.standard_normal((150, 3))
                      for a, b in bones])
print("input vertices:", vertices.shape)

# %% A ball held in the left hand.
sphere = SphereEstimate(joints[7] + [0.05, 0.05, -0.1], 0.11)

vol = build_volume(BodyPoints(vertices, joints), sphere, "sports_ball", seed=1, gravity=(0, 1, 0))
print("volume points:", vol.points.shape, "body", len(vol.body), "sphere", len(vol.sphere))

# %% The normalized frame: pelvis at the origin, shoulders along +x, up is +z,
# and one unit is the distance between the eyes.
j = vol.joints
print("pelvis:", np.round(j[8], 12))
print("shoulder direction:", np.round(j[LEFT_SHOULDER] - j[RIGHT_SHOULDER], 6))
print("eye distance:", np.linalg.norm(j[LEFT_EYE] - j[RIGHT_EYE]))

# %% Every point belongs to the set of its nearest joint, sphere points to set 18.
sizes = {i: len(idx) for i, idx in vol.sets().items()}
for i, name in enumerate(JOINT_NAMES, start=1):
    print(f"{i:2d} {name:<15} {sizes.get(i, 0):4d}")
print(f"18 object          {sizes[18]:4d}")

# %% Volumes round-trip through ASCII PLY.
with tempfile.TemporaryDirectory() as tmp:
    path = write_volume(vol, Path(tmp) / "pair.ply")
    back = read_volume(path)
    print("PLY round trip max error:", np.abs(back.points - vol.points).max())
