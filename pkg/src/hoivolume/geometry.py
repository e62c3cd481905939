"""Pinhole camera, tangent-plane sphere placement and depth regularization.

Camera frame: x right, y down, z forward, optical center at the origin.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .joints import LEFT_SHOULDER, RIGHT_SHOULDER

DEFAULT_FOCAL = 5000.0

CLAMP_NONE = "none"
CLAMP_MIN = "to_min"
CLAMP_MAX = "to_max"


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Camera:
    focal: float = DEFAULT_FOCAL
    principal_point: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.focal > 0:
            raise GeometryError(f"focal length must be positive, got {self.focal}")

    @classmethod
    def for_image(cls, width, height, focal=DEFAULT_FOCAL):
        """Camera with the principal point at the image center."""
        return cls(focal, (width / 2.0, height / 2.0))


@dataclass(frozen=True)
class Box2D:
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise GeometryError(f"degenerate box {self.as_tuple()}")

    @classmethod
    def from_seq(cls, seq):
        return cls(*(float(x) for x in seq))

    def as_tuple(self):
        return (self.u_min, self.v_min, self.u_max, self.v_max)

    @property
    def width(self):
        return self.u_max - self.u_min

    @property
    def height(self):
        return self.v_max - self.v_min

    @property
    def diagonal(self):
        return float(np.hypot(self.width, self.height))

    def union(self, other):
        return Box2D(min(self.u_min, other.u_min), min(self.v_min, other.v_min),
                     max(self.u_max, other.u_max), max(self.v_max, other.v_max))


@dataclass(frozen=True)
class BodySummary:
    joints3d: np.ndarray = field(repr=False)
    z_min: float
    z_max: float
    shoulder_width: float

    def __post_init__(self):
        if self.z_min > self.z_max:
            raise GeometryError(f"z_min {self.z_min} > z_max {self.z_max}")
        if not self.shoulder_width > 0:
            raise GeometryError("shoulder width must be positive")

    @classmethod
    def from_points(cls, joints3d, vertices=None):
        """Summarize a recovered body; depth extremes come from the vertices if given."""
        joints3d = np.asarray(joints3d, dtype=float)
        pts = joints3d if vertices is None else np.asarray(vertices, dtype=float)
        width = float(np.linalg.norm(joints3d[RIGHT_SHOULDER] - joints3d[LEFT_SHOULDER]))
        return cls(joints3d, float(pts[:, 2].min()), float(pts[:, 2].max()), width)


@dataclass(frozen=True)
class SphereEstimate:
    center: np.ndarray
    radius: float
    clamped: str = CLAMP_NONE

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


def project_point(cam, p):
    p = np.asarray(p, dtype=float)
    if not p[..., 2].min() > 0:
        raise GeometryError("cannot project a point with non-positive depth")
    cx, cy = cam.principal_point
    u = cam.focal * p[..., 0] / p[..., 2] + cx
    v = cam.focal * p[..., 1] / p[..., 2] + cy
    return np.stack([u, v], axis=-1)


def _plane_normals(cam, box):
    f = cam.focal
    cx, cy = cam.principal_point
    u_mid = 0.5 * (box.u_min + box.u_max)
    n_mid = np.array([f, 0.0, -(u_mid - cx)])
    n_top = np.array([0.0, f, -(box.v_min - cy)])
    n_bot = np.array([0.0, f, -(box.v_max - cy)])
    return n_mid, n_top, n_bot


def solve_sphere_center(cam, box, r):
    """Center of the radius-``r`` sphere whose image spans the box vertically.

    Three planes through the optical center constrain the center: the plane
    through the vertical midline of the box, and the two back-projected
    planes of the top and bottom box edges, which must both be tangent to
    the sphere. A point projects below the top edge exactly when its dot
    product with ``n_top`` is positive, and above the bottom edge when its
    dot product with ``n_bot`` is negative, which fixes the signs of the two
    tangency equations.
    """
    if not r > 0:
        raise GeometryError(f"radius must be positive, got {r}")
    if not box.v_min < box.v_max:
        raise GeometryError("degenerate box: v_min == v_max")
    n_mid, n_top, n_bot = _plane_normals(cam, box)
    a = np.stack([n_mid, n_top / np.linalg.norm(n_top), n_bot / np.linalg.norm(n_bot)])
    b = np.array([0.0, r, -r])
    try:
        center = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise GeometryError("singular tangent-plane system") from None
    if not center[2] > 0:
        raise GeometryError(f"sphere center behind the camera (z={center[2]:.6g})")
    if np.linalg.norm(center) <= r:
        raise GeometryError("sphere contains the optical center")
    return center


def estimate_radius(prior, body, b_h, b_o):
    if not body.shoulder_width > 0:
        raise GeometryError("shoulder width must be positive")
    r = prior.ratio * body.shoulder_width
    if prior.box_ratio_mode:
        dh, do = b_h.diagonal, b_o.diagonal
        if dh == 0 or do == 0:
            raise GeometryError("zero-diagonal box in box-ratio mode")
        r *= do / dh
    return r


def depth_interval(prior, body):
    lo = prior.gamma_min * body.z_min
    hi = prior.gamma_max * body.z_max
    if lo > hi:
        raise GeometryError(f"empty depth interval [{lo:.6g}, {hi:.6g}] for {prior.category!r}")
    return lo, hi


def regularize_depth(est, prior, body):
    """Clamp the sphere depth into the category's interval around the body.

    Only z changes; x and y keep their estimated values. An estimate already
    inside the interval is returned as is, so the operation is idempotent.
    """
    lo, hi = depth_interval(prior, body)
    z = est.center[2]
    if z < lo:
        return replace(est, center=np.array([est.center[0], est.center[1], lo]), clamped=CLAMP_MIN)
    if z > hi:
        return replace(est, center=np.array([est.center[0], est.center[1], hi]), clamped=CLAMP_MAX)
    return est


def estimate_sphere(cam, box_h, box_o, category, priors, body):
    prior = priors.lookup(category)
    r = estimate_radius(prior, body, box_h, box_o)
    center = solve_sphere_center(cam, box_o, r)
    return regularize_depth(SphereEstimate(center, r), prior, body)
