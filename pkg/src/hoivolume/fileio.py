"""Volume files (ascii PLY, JSON), body point files and tensor dumps."""

import json
from pathlib import Path

import numpy as np

from .volume import ConfigurationVolume, VolumeError


def _fmt(x):
    # 17 significant digits round-trip any float64 exactly.
    return format(float(x), ".17g")


def ply_text(volume):
    lines = [
        "ply",
        "format ascii 1.0",
        f"comment category {volume.category}",
        f"element vertex {len(volume.points)}",
        "property double x",
        "property double y",
        "property double z",
        "property int part",
        "end_header",
    ]
    for (x, y, z), lab in zip(volume.points, volume.labels):
        lines.append(f"{_fmt(x)} {_fmt(y)} {_fmt(z)} {int(lab)}")
    return "\n".join(lines) + "\n"


def volume_to_dict(volume):
    return {
        "category": volume.category,
        "points": volume.points.tolist(),
        "labels": volume.labels.tolist(),
        "joints": volume.joints.tolist(),
        "sphere_center": None if volume.sphere_center is None else np.asarray(volume.sphere_center).tolist(),
        "sphere_radius": None if volume.sphere_radius is None else float(volume.sphere_radius),
        "semantics": None if volume.semantics is None else volume.semantics.tolist(),
    }


def volume_from_dict(d):
    return ConfigurationVolume(
        points=np.asarray(d["points"], dtype=float),
        labels=np.asarray(d["labels"], dtype=np.int64),
        joints=np.asarray(d["joints"], dtype=float),
        category=d["category"],
        sphere_center=None if d.get("sphere_center") is None else np.asarray(d["sphere_center"], dtype=float),
        sphere_radius=d.get("sphere_radius"),
        semantics=None if d.get("semantics") is None else np.asarray(d["semantics"], dtype=float),
    )


def write_volume(volume, path, fmt=None):
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "ply":
        path.write_text(ply_text(volume), encoding="utf-8")
    elif fmt == "json":
        path.write_text(json.dumps(volume_to_dict(volume), indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown volume format {fmt!r}; use 'ply' or 'json'")
    return path


def read_ply(path):
    """Parse an ascii PLY file.

    Returns ``(vertex_columns, comments)`` where ``vertex_columns`` maps each
    vertex property name to a 1-D array. Other elements are skipped.
    """
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "ply":
            raise VolumeError(f"{path}: not a PLY file")
        elements = []
        comments = []
        while True:
            line = fh.readline()
            if not line:
                raise VolumeError(f"{path}: missing end_header")
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "format":
                if tok[1] != "ascii":
                    raise VolumeError(f"{path}: only ascii PLY is supported, got {tok[1]}")
            elif tok[0] == "comment":
                comments.append(line.strip()[len("comment "):])
            elif tok[0] == "element":
                elements.append((tok[1], int(tok[2]), []))
            elif tok[0] == "property":
                if tok[1] == "list":
                    elements[-1][2].append(None)
                else:
                    elements[-1][2].append(tok[-1])
            elif tok[0] == "end_header":
                break
        vertex = None
        for name, count, props in elements:
            rows = [fh.readline().split() for _ in range(count)]
            if name != "vertex":
                continue
            if None in props:
                raise VolumeError(f"{path}: list properties on vertices are not supported")
            if any(len(r) != len(props) for r in rows):
                raise VolumeError(f"{path}: malformed vertex row")
            data = np.array(rows, dtype=float).reshape(count, len(props))
            vertex = {p: data[:, i] for i, p in enumerate(props)}
    if vertex is None:
        raise VolumeError(f"{path}: no vertex element")
    return vertex, comments


def read_volume(path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        return volume_from_dict(json.loads(path.read_text(encoding="utf-8")))
    cols, comments = read_ply(path)
    category = next((c.split(None, 1)[1] for c in comments if c.startswith("category ")), "")
    points = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    return ConfigurationVolume(points, cols["part"].astype(np.int64), np.zeros((0, 3)), category)


def load_points(path):
    """Load an N x 3 point array from .npy, ascii .ply, or whitespace text."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        pts = np.load(path)
    elif suffix == ".ply":
        cols, _ = read_ply(path)
        pts = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    else:
        pts = np.loadtxt(path, ndmin=2)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise VolumeError(f"{path}: expected N x 3 points, got shape {pts.shape}")
    return pts


# Tensor dumps: {"name": {"shape": [...], "data": [row-major floats]}, ...}

def encode_tensor(a):
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def decode_tensor(obj, name="tensor"):
    if isinstance(obj, dict) and "shape" in obj and "data" in obj:
        shape = tuple(int(s) for s in obj["shape"])
        data = np.asarray(obj["data"], dtype=float)
        if data.size != int(np.prod(shape)):
            raise ValueError(f"{name}: shape {list(shape)} needs {int(np.prod(shape))} values, got {data.size}")
        return data.reshape(shape)
    return np.asarray(obj, dtype=float)


def save_tensors(path, tensors):
    payload = {k: encode_tensor(v) for k, v in tensors.items()}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_tensors(path):
    path = Path(path)
    if path.suffix.lower() == ".npz":
        with np.load(path) as z:
            return {k: np.asarray(z[k], dtype=float) for k in z.files}
    raw = json.loads(path.read_text(encoding="utf-8"))
    return {k: decode_tensor(v, k) for k, v in raw.items()}
