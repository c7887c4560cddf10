"""Dataset ingestion, manifests, and synthetic data.

A dataset on disk is described by a small key-value manifest (``key =
value`` lines, ``#`` comments) declaring its name, storage format, and
dimensions, so transposed or truncated files fail loudly instead of
being silently mis-read.  Two storage formats are supported:

* ``csv``  - headerless text, d+1 rows by n columns: d feature rows
  followed by one label row.
* ``bin``  - raw little-endian float64, feature-major, no header; labels
  in a sidecar file of little-endian int64.

Samples are always columns (the matrix is d features by n samples).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

logger = logging.getLogger(__name__)

#: Benchmark defaults (target embedding dimension and the usual
#: training-set sizes per class) for datasets commonly used with this
#: method.  The 15-Scene manifest also pins its preliminary PCA width.
KNOWN_DATASET_DEFAULTS = {
    "eyaleb": {"reduced_dim": 140, "trainers": (10, 15, 20, 25)},
    "ytc": {"reduced_dim": 150, "trainers": (10, 15, 20, 25)},
    "binalpha": {"reduced_dim": 200, "trainers": (10, 15, 20)},
    "usps": {"reduced_dim": 40, "trainers": (10, 20, 30, 40)},
    "eth80": {"reduced_dim": 70, "trainers": (10, 20, 30, 40)},
    "15scene": {"reduced_dim": 140, "trainers": (10, 20, 30, 40), "pca_dim": 198},
}

_REQUIRED_KEYS = ("name", "format", "d", "n", "c", "data")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    fmt: str
    d: int
    n: int
    c: int
    data_path: Path
    labels_path: Path | None = None
    reduced_dim: int | None = None
    trainers: tuple[int, ...] | None = None

    @property
    def defaults(self) -> dict:
        return KNOWN_DATASET_DEFAULTS.get(self.name.lower(), {})


@dataclass(frozen=True)
class SyntheticSpec:
    """Low-rank Gaussian blob generator settings."""

    classes: int
    dim: int
    intrinsic_dim: int
    per_class: int
    noise: float
    seed: int

    def __post_init__(self):
        if self.classes < 1 or self.per_class < 1:
            raise ValueError("need at least one class and one sample per class")
        if not 1 <= self.intrinsic_dim <= self.dim:
            raise ValueError(
                f"intrinsic dimension must lie in [1, {self.dim}], got {self.intrinsic_dim}"
            )
        if self.noise < 0:
            raise ValueError("noise level must be nonnegative")


def parse_manifest(path: str | Path) -> DatasetManifest:
    """Read and validate a manifest file."""
    path = Path(path)
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path} line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            entries[key.lower()] = value

    missing = [key for key in _REQUIRED_KEYS if key not in entries]
    if missing:
        raise FormatError(f"{path}: missing manifest keys: {', '.join(missing)}")
    fmt = entries["format"].lower()
    if fmt not in ("csv", "bin"):
        raise FormatError(f"{path}: unknown format '{entries['format']}' (want csv or bin)")
    try:
        d, n, c = (int(entries[key]) for key in ("d", "n", "c"))
    except ValueError as err:
        raise FormatError(f"{path}: d, n, c must be integers ({err})") from None
    if min(d, n, c) < 1:
        raise FormatError(f"{path}: d, n, c must be positive")
    if fmt == "bin" and "labels" not in entries:
        raise FormatError(f"{path}: binary format requires a labels path")

    base = path.parent
    return DatasetManifest(
        name=entries["name"],
        fmt=fmt,
        d=d,
        n=n,
        c=c,
        data_path=base / entries["data"],
        labels_path=(base / entries["labels"]) if "labels" in entries else None,
        reduced_dim=int(entries["reduced_dim"]) if "reduced_dim" in entries else None,
        trainers=tuple(int(t) for t in entries["trainers"].split(",")) if "trainers" in entries else None,
    )


def _validate_labels(labels: np.ndarray, manifest: DatasetManifest) -> np.ndarray:
    if labels.size != manifest.n:
        raise FormatError(
            f"field n: manifest declares {manifest.n} samples, labels hold {labels.size}"
        )
    if not np.all(labels == np.round(labels)):
        raise FormatError("labels must be integers")
    labels = labels.astype(np.int64)
    present = np.unique(labels)
    if labels.min() < 0 or labels.max() >= manifest.c or present.size != manifest.c:
        raise FormatError(
            f"field c: manifest declares {manifest.c} contiguous classes, "
            f"labels contain {present.size} distinct values in "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels


def load_from_manifest(manifest: DatasetManifest) -> tuple[np.ndarray, np.ndarray]:
    if manifest.fmt == "csv":
        table = np.loadtxt(manifest.data_path, delimiter=",", ndmin=2, dtype=np.float64)
        if table.shape != (manifest.d + 1, manifest.n):
            raise FormatError(
                f"field d/n: expected {manifest.d + 1} rows x {manifest.n} columns "
                f"(features plus label row), file has {table.shape[0]} x {table.shape[1]}"
            )
        x, labels = table[:-1], table[-1]
    else:
        expected = manifest.d * manifest.n * 8
        actual = os.path.getsize(manifest.data_path)
        if actual != expected:
            raise FormatError(
                f"{manifest.data_path}: expected {expected} bytes "
                f"({manifest.d}x{manifest.n} float64), found {actual}"
            )
        x = np.fromfile(manifest.data_path, dtype="<f8").reshape(manifest.d, manifest.n)
        expected_l = manifest.n * 8
        actual_l = os.path.getsize(manifest.labels_path)
        if actual_l != expected_l:
            raise FormatError(
                f"{manifest.labels_path}: expected {expected_l} bytes "
                f"({manifest.n} int64 labels), found {actual_l}"
            )
        labels = np.fromfile(manifest.labels_path, dtype="<i8").astype(np.float64)
    return x, _validate_labels(labels, manifest)


def load_dataset(manifest_path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Load (features-by-samples matrix, integer labels) from a manifest."""
    return load_from_manifest(parse_manifest(manifest_path))


def save_dataset(
    directory: str | Path,
    name: str,
    x: np.ndarray,
    labels: np.ndarray,
    fmt: str = "csv",
) -> Path:
    """Write a dataset plus manifest; returns the manifest path.

    Round-trips bit-exactly through :func:`load_dataset` for both
    formats (CSV uses 17 significant digits).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    d, n = x.shape
    c = int(np.unique(labels).size)

    lines = [f"name = {name}", f"format = {fmt}", f"d = {d}", f"n = {n}", f"c = {c}"]
    if fmt == "csv":
        data_file = directory / f"{name}.csv"
        table = np.vstack([x, labels.astype(np.float64)[None, :]])
        np.savetxt(data_file, table, delimiter=",", fmt="%.17g")
        lines.append(f"data = {data_file.name}")
    elif fmt == "bin":
        data_file = directory / f"{name}.f64"
        labels_file = directory / f"{name}.labels.i64"
        x.astype("<f8").tofile(data_file)
        labels.astype("<i8").tofile(labels_file)
        lines.append(f"data = {data_file.name}")
        lines.append(f"labels = {labels_file.name}")
    else:
        raise ValueError(f"unknown format '{fmt}' (want csv or bin)")

    manifest_path = directory / f"{name}.manifest"
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path


def make_blobs(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic low-rank Gaussian blobs.

    Class means live in an ``intrinsic_dim``-dimensional latent space,
    are pushed into ambient space by a random orthonormal map, and each
    sample is its class mean plus isotropic ambient noise.
    """
    rng = np.random.default_rng(spec.seed)
    means = rng.normal(size=(spec.intrinsic_dim, spec.classes))
    embed = np.linalg.qr(rng.normal(size=(spec.dim, spec.intrinsic_dim)))[0]
    labels = np.repeat(np.arange(spec.classes), spec.per_class)
    x = embed @ means[:, labels]
    if spec.noise > 0:
        x = x + spec.noise * rng.normal(size=x.shape)
    return x, labels
