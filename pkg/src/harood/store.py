"""On-disk sample store and deterministic batch samplers.

Layout: one JSON manifest per dataset plus one binary blob per split. Each
record in a blob is a 16-byte header (record id, label code, rows, cols; all
little-endian uint32) followed by the macro then the micro image as
row-major little-endian float32. The manifest carries per-record offsets,
blob byte lengths and SHA-256 digests, so a round trip is verifiable and
bit-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labels import ID_CODES, KIND_TO_CODE, OE_OOD_KINDS, SPLITS

FORMAT_VERSION = 1
_HEADER_DTYPE = np.dtype("<u4")
_HEADER_FIELDS = 4
_OE_ALLOWED_CODES = ID_CODES | {KIND_TO_CODE[k] for k in OE_OOD_KINDS}


class DatasetFormatError(Exception):
    """Raised when a stored dataset fails structural or checksum validation."""


@dataclass
class SampleRecord:
    """One preprocessed sample: macro + micro RDI and a label."""

    id: int
    macro: np.ndarray
    micro: np.ndarray
    label: int
    split: str

    def __post_init__(self):
        self.macro = np.ascontiguousarray(self.macro, dtype=np.float32)
        self.micro = np.ascontiguousarray(self.micro, dtype=np.float32)
        if self.macro.ndim != 2 or self.macro.shape != self.micro.shape:
            raise ValueError(
                f"macro/micro must be equal-shape 2-D images, got "
                f"{self.macro.shape} vs {self.micro.shape}"
            )
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        if self.split == "train" and self.label not in ID_CODES:
            raise ValueError("train split may only contain ID labels")
        if self.split == "oe" and self.label not in _OE_ALLOWED_CODES:
            raise ValueError("oe split OOD labels are limited to fan/toy_car")

    @property
    def is_id(self) -> bool:
        return self.label in ID_CODES


@dataclass
class DatasetManifest:
    """Index of a stored dataset: split files, per-record labels and offsets."""

    format_version: int
    seed: int
    config: dict
    splits: dict = field(default_factory=dict)
    root: Path | None = None

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "seed": self.seed,
            "config": self.config,
            "splits": self.splits,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        with open(path) as fh:
            data = json.load(fh)
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise DatasetFormatError(
                f"unsupported dataset format version {version!r} "
                f"(expected {FORMAT_VERSION})"
            )
        return cls(
            format_version=version,
            seed=data["seed"],
            config=data.get("config", {}),
            splits=data["splits"],
            root=path.parent,
        )

    def split_counts(self) -> dict:
        return {name: info["n_records"] for name, info in self.splits.items()}


def _record_bytes(rec: SampleRecord) -> bytes:
    rows, cols = rec.macro.shape
    header = np.array([rec.id, rec.label, rows, cols], dtype=_HEADER_DTYPE)
    return (
        header.tobytes()
        + rec.macro.astype("<f4", copy=False).tobytes()
        + rec.micro.astype("<f4", copy=False).tobytes()
    )


def write_samples(records, path: str | Path, config: dict | None = None, seed: int = 0) -> DatasetManifest:
    """Write records grouped by split; returns the saved manifest.

    All records must share one image shape. The directory is created if
    needed; existing split files are overwritten.
    """
    records = list(records)
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    shapes = {rec.macro.shape for rec in records}
    if len(shapes) > 1:
        raise ValueError(f"records disagree on image shape: {sorted(shapes)}")

    manifest = DatasetManifest(
        format_version=FORMAT_VERSION, seed=seed, config=config or {}, root=path
    )
    by_split: dict[str, list[SampleRecord]] = {}
    for rec in records:
        by_split.setdefault(rec.split, []).append(rec)

    for split, recs in sorted(by_split.items()):
        blob = bytearray()
        index = []
        for rec in recs:
            index.append({"id": rec.id, "label": rec.label, "offset": len(blob)})
            blob += _record_bytes(rec)
        fname = f"split_{split}.bin"
        with open(path / fname, "wb") as fh:
            fh.write(blob)
        manifest.splits[split] = {
            "file": fname,
            "n_records": len(recs),
            "byte_length": len(blob),
            "sha256": hashlib.sha256(bytes(blob)).hexdigest(),
            "records": index,
        }
    manifest.save(path / "manifest.json")
    return manifest


def read_samples(manifest: DatasetManifest | str | Path, split: str) -> list[SampleRecord]:
    """Load every record of one split; an absent split yields an empty list.

    Verifies the blob's byte length and SHA-256 digest against the manifest
    before parsing.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.load(manifest)
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    info = manifest.splits.get(split)
    if info is None or info["n_records"] == 0:
        return []
    if manifest.root is None:
        raise ValueError("manifest has no root directory; load it from disk")

    blob_path = manifest.root / info["file"]
    if not blob_path.exists():
        raise DatasetFormatError(f"split file missing: {blob_path}")
    blob = blob_path.read_bytes()
    if len(blob) != info["byte_length"]:
        raise DatasetFormatError(
            f"{blob_path.name}: byte length {len(blob)} does not match "
            f"manifest value {info['byte_length']}"
        )
    digest = hashlib.sha256(blob).hexdigest()
    if digest != info["sha256"]:
        raise DatasetFormatError(f"{blob_path.name}: checksum mismatch")

    records = []
    for entry in info["records"]:
        offset = entry["offset"]
        header = np.frombuffer(blob, dtype=_HEADER_DTYPE, count=_HEADER_FIELDS, offset=offset)
        rec_id, label, rows, cols = (int(v) for v in header)
        if rec_id != entry["id"] or label != entry["label"]:
            raise DatasetFormatError(
                f"{blob_path.name}: record at offset {offset} does not match manifest"
            )
        img_bytes = rows * cols * 4
        start = offset + _HEADER_FIELDS * 4
        if start + 2 * img_bytes > len(blob):
            raise DatasetFormatError(f"{blob_path.name}: truncated record at offset {offset}")
        macro = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=start)
        micro = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=start + img_bytes)
        records.append(
            SampleRecord(
                id=rec_id,
                macro=macro.reshape(rows, cols).copy(),
                micro=micro.reshape(rows, cols).copy(),
                label=label,
                split=split,
            )
        )
    return records


# ---------------------------------------------------------------------------
# Batch samplers


@dataclass(frozen=True)
class TripletBatch:
    """Index triplets into a record list: same-class (anchor, positive), other-class negative."""

    anchors: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray

    def __len__(self) -> int:
        return len(self.anchors)


@dataclass(frozen=True)
class ContrastivePairBatch:
    """Index pairs plus dissimilarity labels: y=0 same side (ID/ID or OOD/OOD), y=1 mixed."""

    first: np.ndarray
    second: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.first)


def sample_triplets(labels, batch_size: int, seed) -> TripletBatch:
    """Uniform triplet sampling over class labels, deterministic per seed.

    labels: one integer class per training record (ID classes only). Anchors
    are uniform over all records, positives uniform within the anchor's
    class (excluding the anchor), negatives uniform over the other classes.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    by_class = {c: np.flatnonzero(labels == c) for c in classes}
    for c, idx in by_class.items():
        if len(idx) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples; cannot form triplets")
    if len(classes) < 2:
        raise ValueError("triplet sampling needs at least 2 classes")
    others = {c: np.flatnonzero(labels != c) for c in classes}

    rng = np.random.default_rng(seed)
    anchors = rng.integers(0, len(labels), size=batch_size)
    positives = np.empty(batch_size, dtype=np.int64)
    negatives = np.empty(batch_size, dtype=np.int64)
    for i, a in enumerate(anchors):
        same = by_class[labels[a]]
        while True:
            p = same[rng.integers(0, len(same))]
            if p != a:
                break
        other = others[labels[a]]
        negatives[i] = other[rng.integers(0, len(other))]
        positives[i] = p
    return TripletBatch(anchors=anchors.astype(np.int64), positives=positives, negatives=negatives)


def sample_contrastive_pairs(is_id, batch_size: int, seed) -> ContrastivePairBatch:
    """Pairs from an ID+OOD pool with a ~50/50 similar/dissimilar mix.

    is_id: boolean flag per pool record (all ID classes count as one side,
    all OOD kinds as the other). The pool is typically train + oe records
    and must contain at least two records of each side.
    """
    is_id = np.asarray(is_id, dtype=bool)
    id_idx = np.flatnonzero(is_id)
    ood_idx = np.flatnonzero(~is_id)
    if len(ood_idx) < 2:
        raise ValueError("contrastive sampling needs OOD records in the oe split")
    if len(id_idx) < 2:
        raise ValueError("contrastive sampling needs ID records in the pool")

    rng = np.random.default_rng(seed)
    first = np.empty(batch_size, dtype=np.int64)
    second = np.empty(batch_size, dtype=np.int64)
    y = np.empty(batch_size, dtype=np.int64)
    for i in range(batch_size):
        dissimilar = rng.random() < 0.5
        if dissimilar:
            a = id_idx[rng.integers(0, len(id_idx))]
            b = ood_idx[rng.integers(0, len(ood_idx))]
            if rng.random() < 0.5:
                a, b = b, a
        else:
            side = id_idx if rng.random() < 0.5 else ood_idx
            a = side[rng.integers(0, len(side))]
            while True:
                b = side[rng.integers(0, len(side))]
                if b != a:
                    break
        first[i], second[i], y[i] = a, b, int(dissimilar)
    return ContrastivePairBatch(first=first, second=second, y=y)


def records_to_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into (n, 2, rows, cols) float32 images and an int label vector."""
    if not records:
        raise ValueError("no records to stack")
    X = np.stack([np.stack([rec.macro, rec.micro]) for rec in records]).astype(np.float32)
    y = np.array([rec.label for rec in records], dtype=np.int64)
    return X, y
