"""Placing an object sphere in camera space from its 2D box.

A sphere of known radius seen by a pinhole camera has exactly one center
for which its silhouette touches the top and bottom of the box and is
centered horizontally in it.
"""

import numpy as np

from hoivolume import Box2D, Camera, load_priors, solve_sphere_center
from hoivolume.geometry import BodySummary, estimate_sphere

# %% A 640x480 image, focal length 5000 px, principal point at the image center.
cam = Camera.for_image(640, 480)
box = Box2D(400, 300, 520, 420)

center = solve_sphere_center(cam, box, 0.2)
print("center for r=0.2:", center)

# %% Doubling the radius moves the sphere twice as far along the same ray.
print("center for r=0.4:", solve_sphere_center(cam, box, 0.4))

# %% Check the silhouette by projecting a dense sample of the surface.
d = np.random.default_rng(0).standard_normal((20000, 3))
surface = center + 0.2 * d / np.linalg.norm(d, axis=1, keepdims=True)
uv = cam.focal * surface[:, :2] / surface[:, 2:] + cam.principal_point
print("silhouette v range:", uv[:, 1].min(), uv[:, 1].max(), "(box 300 .. 420)")
print("silhouette u midpoint:", 0.5 * (uv[:, 0].min() + uv[:, 0].max()), "(box 460)")

# %% In the pipeline the radius comes from the prior table and the body's
# shoulder width, and the depth is clamped to the body's depth range.
priors = load_priors()
joints = np.zeros((17, 3))
joints[:, 2] = 8.0
joints[2], joints[5] = [-0.2, 0, 8.0], [0.2, 0, 8.0]
joints[0, 2] = 8.4
body = BodySummary.from_points(joints)

# A cup box about 280 px tall puts the cup near the body; the same box for a
# train would need the train far behind the person, so its depth is clamped.
cup_box = Box2D(300, 150, 580, 430)
for category, obj in (("cup", cup_box), ("train", cup_box), ("cup", box)):
    est = estimate_sphere(cam, Box2D(250, 100, 420, 460), obj, category, priors, body)
    print(f"{category:>6}: radius {est.radius:8.3f}  depth {est.center[2]:7.3f}  clamped {est.clamped}")
