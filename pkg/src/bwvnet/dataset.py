"""Dataset manifests: ingestion, seeded splitting and batch loading."""

import csv
import json
import logging
import os
from collections import defaultdict
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ._validation import LABELS, encode_labels
from .errors import DataError, InvalidInputError
from .images import IMAGE_SUFFIXES, read_image, resize_bilinear, to_tensor
from .network import INPUT_SIZE

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    label: str
    origin: str = "original"
    source_id: str = None
    transform: str = None
    split: str = "unassigned"

    @property
    def group(self):
        """Id of the original image this entry derives from."""
        return self.source_id or self.id


_FIELDS = tuple(f.name for f in fields(ManifestEntry))


class DatasetManifest:
    def __init__(self, entries=()):
        self.entries = list(entries)
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError("duplicate manifest ids", dup)
        bad = [f"{e.id}: label {e.label!r}" for e in self.entries if e.label not in LABELS]
        if bad:
            raise DataError("labels must be 'bwv' or 'nonbwv'", bad)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def labels(self):
        return encode_labels([e.label for e in self.entries])

    def subset(self, split):
        return DatasetManifest([e for e in self.entries if e.split == split])

    def class_counts(self):
        counts = {k: 0 for k in LABELS}
        for e in self.entries:
            counts[e.label] += 1
        return counts

    def validate_paths(self):
        missing = [e.path for e in self.entries if not os.path.exists(e.path)]
        if missing:
            raise DataError("manifest references missing files", missing)

    def to_jsonl(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for e in self.entries:
                fh.write(json.dumps(asdict(e), sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path):
        entries = []
        try:
            with open(path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if line.strip():
                        record = json.loads(line)
                        entries.append(ManifestEntry(**{k: record[k] for k in _FIELDS if k in record}))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"cannot read manifest {path}: {exc}") from exc
        return cls(entries)


def read_labels(labels_file):
    """Parse a ``stem,label`` CSV. Returns ``({stem: label}, problems)``."""
    labels, problems = {}, []
    with open(labels_file, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip().lower() for f in reader.fieldnames[:2]] != ["stem", "label"]:
            raise DataError(f"{labels_file}: expected header 'stem,label'")
        for n, row in enumerate(reader, 2):
            stem, token = (row.get("stem") or "").strip(), (row.get("label") or "").strip().lower()
            if token not in LABELS:
                problems.append(f"line {n}: unknown label token {row.get('label')!r}")
            elif stem in labels:
                problems.append(f"line {n}: duplicate stem {stem!r}")
            else:
                labels[stem] = token
    return labels, problems


def ingest(image_dir, labels_file):
    """Build a manifest from an image folder and a labels CSV.

    Returns ``(manifest, warnings)``. Images without a label and labels
    without an image become warnings; unreadable images, duplicate stems and
    unknown label tokens raise :class:`DataError` listing every problem.
    """
    labels, problems = read_labels(labels_file)
    files = sorted(f for f in os.listdir(image_dir) if f.lower().endswith(IMAGE_SUFFIXES))
    seen, entries, warnings = {}, [], []
    for name in files:
        stem = os.path.splitext(name)[0]
        path = os.path.join(image_dir, name)
        if stem in seen:
            problems.append(f"duplicate stem {stem!r}: {seen[stem]} and {name}")
            continue
        seen[stem] = name
        if stem not in labels:
            warnings.append(f"unlabeled image {name}")
            continue
        try:
            read_image(path)
        except DataError as exc:
            problems.append(str(exc))
            continue
        entries.append(ManifestEntry(id=stem, path=path, label=labels[stem]))
    for stem in sorted(set(labels) - set(seen)):
        warnings.append(f"label for {stem!r} has no image")
    if problems:
        raise DataError(f"ingest of {image_dir} failed", problems)
    for w in warnings:
        log.warning(w)
    return DatasetManifest(entries), warnings


@dataclass(frozen=True)
class SplitPlan:
    train: float = 0.8
    val: float = 0.2
    test: float = 0.0
    seed: int = 0
    stratified: bool = True
    keep_groups: bool = True

    def __post_init__(self):
        fr = self.fractions
        if any(f < 0 for f in fr):
            raise InvalidInputError(f"split fractions must be non-negative, got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise InvalidInputError(f"split fractions must sum to 1, got {sum(fr)}")

    @property
    def fractions(self):
        return (self.train, self.val, self.test)


def _allocate(n, fractions):
    """Largest-remainder apportionment of ``n`` items over ``fractions``."""
    exact = [n * f for f in fractions]
    counts = [int(np.floor(x)) for x in exact]
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:n - sum(counts)]:
        counts[i] += 1
    return counts


def split(manifest, plan):
    """Assign every entry to train/val/test.

    Entries sharing an original source (augmented copies) move together when
    ``plan.keep_groups`` is set, so counts are apportioned over source groups.
    """
    if len(manifest) == 0:
        return DatasetManifest([])
    groups = defaultdict(list)
    for i, e in enumerate(manifest.entries):
        groups[e.group if plan.keep_groups else e.id].append(i)
    keys = sorted(groups)
    strata = defaultdict(list)
    for k in keys:
        label = manifest.entries[groups[k][0]].label
        strata[label if plan.stratified else "all"].append(k)

    rng = np.random.default_rng(plan.seed)
    assignment = {}
    for stratum in sorted(strata):
        members = strata[stratum]
        perm = rng.permutation(len(members))
        counts = _allocate(len(members), plan.fractions)
        for name, frac, cnt in zip(SPLITS, plan.fractions, counts):
            if frac > 0 and cnt == 0:
                raise DataError(
                    f"infeasible split: {frac:.0%} {name} of {len(members)} "
                    f"{'groups of class ' + stratum if plan.stratified else 'groups'} rounds to zero")
        bounds = np.cumsum([0] + counts)
        for s, name in enumerate(SPLITS):
            for j in perm[bounds[s]:bounds[s + 1]]:
                assignment[members[j]] = name
    out = []
    for k in keys:
        for i in groups[k]:
            out.append((i, assignment[k]))
    out.sort()
    return DatasetManifest([replace(manifest.entries[i], split=s) for i, s in out])


def load_image(path, size=INPUT_SIZE):
    return resize_bilinear(read_image(path), (size, size))


def load_batch(entries, size=INPUT_SIZE):
    """Decode, resize to ``size``x``size`` and scale to a float32 NCHW batch."""
    return to_tensor([load_image(e.path, size) for e in entries])


class ManifestImages:
    """Lazy, index-addressable view of a manifest as network input.

    ``images[idx]`` decodes only the requested entries, so training on large
    manifests does not need the whole dataset in memory.
    """

    def __init__(self, entries, size=INPUT_SIZE, cache=True):
        self.entries = list(entries)
        self.size = size
        self._cache = {} if cache else None

    def __len__(self):
        return len(self.entries)

    def _one(self, i):
        if self._cache is None:
            return load_image(self.entries[i].path, self.size)
        if i not in self._cache:
            self._cache[i] = load_image(self.entries[i].path, self.size)
        return self._cache[i]

    def __getitem__(self, idx):
        idx = np.atleast_1d(np.asarray(idx))
        return to_tensor([self._one(int(i)) for i in idx])
