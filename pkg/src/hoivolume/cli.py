"""Command-line entry point.

Exit codes: 0 success, 1 partial per-item failures (or a failed gradient
check), 2 configuration or parse errors.
"""

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import ambiguity, losses
from .fileio import load_points, load_tensors, write_volume
from .geometry import Box2D, BodySummary, Camera, DEFAULT_FOCAL, estimate_sphere
from .gradcheck import CHECKS, run_grad_check
from .maps2d import make_pose_map, make_spatial_map
from .priors import PriorError, load_priors
from .volume import (
    DEFAULT_GRAVITY,
    BodyPoints,
    build_volume,
    load_embedding_table,
    pair_semantics,
)

log = logging.getLogger("hoivolume")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
GRAD_TOLERANCE = 1e-3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    priors: str = None
    embeddings: str = None
    seed: int = 0
    weights: dict = field(default_factory=lambda: {"tri": 0.001, "att": 0.01, "sem": 0.01, "cls": 1.0})
    alpha: float = 0.5
    d_e: int = 64
    out: str = "out"
    focal: float = DEFAULT_FOCAL
    k: int = 3
    probe_weight: float = 0.5
    sem_mode: str = "abs"

    @classmethod
    def load(cls, path=None):
        if path is None:
            return cls()
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**raw)
        for key in ("priors", "embeddings"):
            value = getattr(cfg, key)
            if value is not None and not Path(value).is_absolute():
                setattr(cfg, key, str(path.parent / value))
        return cfg

    def loss_weights(self):
        try:
            return losses.LossWeights(**self.weights)
        except (TypeError, losses.LossError) as exc:
            raise ConfigError(f"bad loss weights: {exc}") from None


def item_seed(seed, item_id):
    """Per-item seed from a stable hash of the run seed and the item id."""
    digest = hashlib.sha256(f"{seed}:{item_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _fmt(x):
    return format(float(x), ".17g")


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from None


def _read_jsonl(path, what):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from None
    stripped = text.lstrip()
    try:
        if stripped.startswith("["):
            return json.loads(text)
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {what} {path}: {exc}") from None


def _camera(rec, cfg):
    cam = rec.get("camera") or {}
    focal = float(cam.get("focal", cfg.focal))
    if "principal_point" in cam:
        return Camera(focal, tuple(float(x) for x in cam["principal_point"]))
    if "image_size" in rec:
        w, h = rec["image_size"]
        return Camera.for_image(float(w), float(h), focal)
    return Camera(focal, (0.0, 0.0))


def _pair_id(rec, index):
    return str(rec.get("pair_id", f"{rec.get('image_id', 'pair')}-{index}"))


def _build_one(rec, base, priors, reduced_table, cfg):
    pid = rec["_pair_id"]
    box_h = Box2D.from_seq(rec["human_box"])
    box_o = Box2D.from_seq(rec["object_box"])
    category = rec["object_category"]
    joints = np.asarray(rec["joints3d"], dtype=float)
    if "body_points_path" not in rec:
        raise ValueError("record has no body_points_path")
    bpath = Path(rec["body_points_path"])
    vertices = load_points(bpath if bpath.is_absolute() else base / bpath)
    body = BodyPoints(vertices, joints)
    summary = BodySummary.from_points(joints, vertices)
    sphere = estimate_sphere(_camera(rec, cfg), box_h, box_o, category, priors, summary)
    vol = build_volume(body, sphere, priors.lookup(category).category,
                       seed=item_seed(cfg.seed, pid), gravity=rec.get("gravity") or DEFAULT_GRAVITY)
    if reduced_table is not None:
        vol = pair_semantics(vol, *reduced_table)
    return vol, sphere


def cmd_build_volume(args, cfg):
    det_path = Path(args.detections)
    records = _read_json(det_path, "detections")
    if not isinstance(records, list):
        raise ConfigError("detections file must hold a JSON array")
    try:
        priors = load_priors(cfg.priors)
    except (OSError, PriorError) as exc:
        raise ConfigError(f"cannot load priors: {exc}") from None
    table = None
    if cfg.embeddings:
        try:
            table = (load_embedding_table(cfg.embeddings), cfg.d_e)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load embeddings: {exc}") from None
    out = Path(args.out or cfg.out)
    (out / "volumes").mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(records):
        rec["_pair_id"] = _pair_id(rec, i)
    ids = [r["_pair_id"] for r in records]
    if len(set(ids)) != len(ids):
        raise ConfigError("pair ids are not unique")

    rows, failures = [], 0
    for rec in sorted(records, key=lambda r: r["_pair_id"]):
        pid = rec["_pair_id"]
        try:
            vol, sphere = _build_one(rec, det_path.parent, priors, table, cfg)
        except (ValueError, KeyError, TypeError, OSError) as exc:
            failures += 1
            log.error("pair %s failed: %s", pid, exc)
            rows.append([pid, rec.get("image_id", ""), rec.get("object_category", ""), "", "", "", "", "",
                         "failed", str(exc)])
            continue
        write_volume(vol, out / "volumes" / f"{pid}.ply")
        write_volume(vol, out / "volumes" / f"{pid}.json")
        rows.append([pid, rec.get("image_id", ""), vol.category, *(_fmt(c) for c in sphere.center),
                     _fmt(sphere.radius), sphere.clamped, "ok", ""])
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", "image_id", "category", "center_x", "center_y", "center_z", "radius",
                    "clamped", "status", "error"])
        w.writerows(rows)
    print(f"built {len(records) - failures}/{len(records)} volumes into {out}")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_losses(args, cfg):
    if len(args.features) != len(args.scores):
        raise ConfigError("--features and --scores must be given the same number of files")
    weights = cfg.loss_weights()
    reports = []
    for i, (fpath, spath) in enumerate(zip(args.features, args.scores)):
        try:
            feats, scores = load_tensors(fpath), load_tensors(spath)
            breakdown, mined = losses.batch_breakdown(feats, scores, weights, cfg.alpha, cfg.sem_mode)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"batch {i} ({fpath}, {spath}): {exc}") from None
        report = {"batch": i, "features": str(fpath), "scores": str(spath),
                  "triplets": [list(t) for t in mined.triplets], "skipped": mined.skipped}
        report.update(breakdown.to_dict(gradients=args.gradients))
        reports.append(report)
    text = json.dumps(reports, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_grad_check(args, cfg):
    try:
        worst = run_grad_check(range(cfg.seed, cfg.seed + args.seeds), dim=args.dim, m=args.m,
                               weights=cfg.loss_weights(), corrupt=args.corrupt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    failed = False
    print(f"{'loss':<10} {'max rel err':>12}  status")
    for name, err in worst.items():
        ok = err <= GRAD_TOLERANCE
        failed |= not ok
        print(f"{name:<10} {err:12.3e}  {'ok' if ok else 'FAIL'}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _pose_of(rec, what):
    try:
        return ambiguity.Pose2D.from_array(rec["pose"])
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad {what} record {rec.get('sample_id', rec.get('template_id', '?'))}: {exc}") from None


def cmd_ambiguity(args, cfg):
    samples = []
    for rec in _read_jsonl(args.poses, "pose file"):
        if args.hoi is not None and args.hoi not in [str(h) for h in rec.get("hoi_ids", [])]:
            continue
        samples.append((str(rec["sample_id"]), _pose_of(rec, "pose")))
    templates = [_pose_of(rec, "template") for rec in _read_jsonl(args.templates, "template file")]
    probes = {}
    if args.probe:
        try:
            with open(args.probe, newline="", encoding="utf-8") as fh:
                probes = {row["sample_id"]: float(row["probe"]) for row in csv.DictReader(fh)}
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read probe file {args.probe}: {exc}") from None
    k = args.k if args.k is not None else cfg.k
    try:
        records = ambiguity.cluster_and_rank(samples, templates, k, seed=cfg.seed)
    except ambiguity.AmbiguityError as exc:
        raise ConfigError(str(exc)) from None
    weight = args.probe_weight if args.probe_weight is not None else cfg.probe_weight
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["sample_id", "mean_distance", "rank"] + (["probe", "combined"] if probes else []))
        for rec, rank, probe, combined in ambiguity.combine_with_probe(records, probes, weight):
            row = [rec.sample_id, _fmt(rec.mean_distance), rank]
            if probes:
                row += ["" if probe is None else _fmt(probe), "" if combined is None else _fmt(combined)]
            w.writerow(row)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_monster_filter(args, cfg):
    path = Path(args.embeddings)
    if path.suffix.lower() == ".npy":
        try:
            emb = np.load(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        ids = [str(i) for i in range(len(emb))]
    else:
        recs = _read_jsonl(path, "embedding file")
        ids = [str(r["sample_id"]) for r in recs]
        emb = np.array([r["embedding"] for r in recs], dtype=float)
    try:
        flags = ambiguity.monster_filter(emb, args.fraction)
    except ambiguity.AmbiguityError as exc:
        raise ConfigError(str(exc)) from None
    dist = ambiguity.distances_to_mean(emb)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["sample_id", "distance", "monster"])
        for sid, d, f in zip(ids, dist, flags):
            w.writerow([sid, _fmt(d), int(f)])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_priors_validate(args, cfg):
    path = args.path or cfg.priors
    try:
        table = load_priors(path)
    except (OSError, PriorError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {len(table)} categories in {path or 'bundled table'}")
    return EXIT_OK


def cmd_maps(args, cfg):
    records = _read_json(args.detections, "detections")
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for i, rec in enumerate(records):
        pid = _pair_id(rec, i)
        try:
            b_h, b_o = Box2D.from_seq(rec["human_box"]), Box2D.from_seq(rec["object_box"])
            channels = list(make_spatial_map(b_h, b_o))
            if "pose2d" in rec:
                channels += list(make_pose_map(np.asarray(rec["pose2d"], dtype=float)[:17], b_h.union(b_o),
                                               args.sigma))
        except (ValueError, KeyError) as exc:
            failures += 1
            log.error("pair %s failed: %s", pid, exc)
            continue
        for c, grid in enumerate(channels):
            np.savetxt(out / f"{pid}_ch{c:02d}.csv", grid, delimiter=",", fmt="%.6g")
    return EXIT_PARTIAL if failures else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output path")

    p = argparse.ArgumentParser(prog="hoivolume", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-volume", parents=[common], help="build normalized volumes from detections")
    b.add_argument("--detections", required=True)
    b.set_defaults(func=cmd_build_volume)

    lo = sub.add_parser("losses", parents=[common], help="evaluate all losses on dumped batches")
    lo.add_argument("--features", nargs="+", required=True)
    lo.add_argument("--scores", nargs="+", required=True)
    lo.add_argument("--gradients", action="store_true")
    lo.set_defaults(func=cmd_losses)

    g = sub.add_parser("grad-check", parents=[common], help="finite-difference check of loss gradients")
    g.add_argument("--seeds", type=int, default=100, help="number of seeded cases per loss")
    g.add_argument("--dim", type=int, default=16)
    g.add_argument("--m", type=int, default=24)
    g.add_argument("--corrupt", choices=CHECKS, help=argparse.SUPPRESS)
    g.set_defaults(func=cmd_grad_check)

    a = sub.add_parser("ambiguity", parents=[common], help="rank samples by pose ambiguity")
    a.add_argument("--poses", required=True)
    a.add_argument("--templates", required=True)
    a.add_argument("--probe", help="CSV with sample_id,probe columns")
    a.add_argument("--probe-weight", type=float)
    a.add_argument("--k", type=int)
    a.add_argument("--hoi", help="only rank samples carrying this HOI id")
    a.set_defaults(func=cmd_ambiguity)

    m = sub.add_parser("monster-filter", parents=[common], help="flag latent-embedding outliers")
    m.add_argument("--embeddings", required=True)
    m.add_argument("--fraction", type=float, default=0.10)
    m.set_defaults(func=cmd_monster_filter)

    pr = sub.add_parser("priors", help="prior table utilities")
    prsub = pr.add_subparsers(dest="priors_command", required=True)
    v = prsub.add_parser("validate", parents=[common])
    v.add_argument("path", nargs="?")
    v.set_defaults(func=cmd_priors_validate)

    mp = sub.add_parser("maps", parents=[common], help="dump spatial and pose map channels as CSV")
    mp.add_argument("--detections", required=True)
    mp.add_argument("--sigma", type=float, default=1.5)
    mp.set_defaults(func=cmd_maps)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
