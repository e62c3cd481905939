"""Per-category object size ratios and depth regularization factors."""

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

FIELDS = ("category", "ratio", "gamma_min", "gamma_max", "box_ratio_mode")


class PriorError(ValueError):
    """Raised for malformed prior tables and unknown categories."""


@dataclass(frozen=True)
class ObjectPrior:
    category: str
    ratio: float
    gamma_min: float
    gamma_max: float
    box_ratio_mode: bool = False


def normalize_category(name):
    """Canonical lookup key: lower case, spaces and hyphens become underscores."""
    return "_".join(name.strip().lower().replace("-", " ").replace("_", " ").split())


class PriorTable:
    """Immutable mapping from normalized category name to ObjectPrior."""

    def __init__(self, entries):
        self._entries = {}
        for prior in entries:
            key = normalize_category(prior.category)
            if key in self._entries:
                raise PriorError(f"duplicate category {prior.category!r}")
            self._entries[key] = prior

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def __contains__(self, category):
        return normalize_category(category) in self._entries

    def __eq__(self, other):
        if not isinstance(other, PriorTable):
            return NotImplemented
        return self._entries == other._entries

    @property
    def categories(self):
        return tuple(self._entries)

    def lookup(self, category):
        try:
            return self._entries[normalize_category(category)]
        except KeyError:
            raise PriorError(f"unknown object category {category!r}") from None


def _parse_bool(text, row):
    value = text.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no", ""):
        return False
    raise PriorError(f"row {row}: box_ratio_mode must be true/false, got {text!r}")


def _parse_float(text, field, row):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise PriorError(f"row {row}: {field} is not a number: {text!r}") from None


def parse_priors(text):
    """Parse CSV text into a validated PriorTable.

    Row numbers in error messages count the header as row 1, so they match
    the line number in a spreadsheet or text editor.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != FIELDS:
        raise PriorError(f"header must be {','.join(FIELDS)}, got {reader.fieldnames}")
    entries = []
    seen = {}
    for row, rec in enumerate(reader, start=2):
        if None in rec or any(rec[f] is None for f in FIELDS):
            raise PriorError(f"row {row}: expected {len(FIELDS)} columns")
        category = rec["category"].strip()
        if not category:
            raise PriorError(f"row {row}: empty category")
        key = normalize_category(category)
        if key in seen:
            raise PriorError(f"row {row}: duplicate category {category!r} (first seen row {seen[key]})")
        seen[key] = row
        ratio = _parse_float(rec["ratio"], "ratio", row)
        gmin = _parse_float(rec["gamma_min"], "gamma_min", row)
        gmax = _parse_float(rec["gamma_max"], "gamma_max", row)
        if not ratio > 0:
            raise PriorError(f"row {row}: ratio must be positive, got {ratio}")
        if not gmin > 0 or not gmax > 0:
            raise PriorError(f"row {row}: gamma bounds must be positive, got [{gmin}, {gmax}]")
        if gmin > gmax:
            raise PriorError(f"row {row}: gamma_min {gmin} > gamma_max {gmax}")
        entries.append(ObjectPrior(category, ratio, gmin, gmax, _parse_bool(rec["box_ratio_mode"], row)))
    return PriorTable(entries)


def load_priors(path=None):
    """Load a prior table from ``path``, or the bundled COCO-80 table if None."""
    if path is None:
        text = (resources.files("hoivolume") / "data" / "coco_priors.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_priors(text)


def serialize_priors(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for p in table:
        writer.writerow([p.category, repr(p.ratio), repr(p.gamma_min), repr(p.gamma_max),
                         "true" if p.box_ratio_mode else "false"])
    return buf.getvalue()


def lookup(table, category):
    return table.lookup(category)
