"""Embedding matrices, dataset manifests, and their on-disk formats.

An embedding dump is a 2-D NPY file (``<f4`` or ``<f8``, little-endian,
C order); class labels, when present, live in a 1-D integer NPY sidecar
named by the manifest rather than inside the matrix. Everything is widened
to float64 on load because downstream eigenvalues span many orders of
magnitude and 32-bit accumulation is unsafe.

Loaded matrices are immutable (read-only buffers) and safe to share across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from spectrune.errors import (
    DataError,
    FormatError,
    IoError,
    MissingLabelsError,
    PreconditionError,
    ShapeError,
    SpectruneError,
)
from spectrune.npy import FLOAT_DESCRS, INT_DESCRS, read_npy, write_npy

MODALITIES = ("image", "text")


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr or out.base is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class EmbeddingMatrix:
    """An n-by-d block of embedding vectors with a modality tag.

    Attributes:
        data: float64 matrix, one embedding per row. Read-only.
        modality: ``"image"`` or ``"text"``.
        labels: optional int64 class ids, one per row, all >= 0.
        source: free-form provenance string (file path, generator, ...).
    """

    data: np.ndarray
    modality: str
    labels: np.ndarray | None = None
    source: str = ""

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"embedding matrix must be 2-D, got shape {data.shape}")
        n, d = data.shape
        if n < 1 or d < 1:
            raise ShapeError(f"embedding matrix needs n >= 1 and d >= 1, got {data.shape}")
        finite_rows = np.isfinite(data).all(axis=1)
        if not finite_rows.all():
            bad = int(np.flatnonzero(~finite_rows)[0])
            raise DataError(f"non-finite entry in row {bad}")
        if self.modality not in MODALITIES:
            raise PreconditionError(
                f"modality must be one of {MODALITIES}, got {self.modality!r}"
            )
        object.__setattr__(self, "data", _frozen(data))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.ndim != 1 or labels.shape[0] != n:
                raise ShapeError(
                    f"labels must be a length-{n} vector, got shape {labels.shape}"
                )
            if (labels < 0).any():
                bad = int(np.flatnonzero(labels < 0)[0])
                raise DataError(f"negative label id at row {bad}")
            object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, source_suffix: str = "") -> "EmbeddingMatrix":
        """Same metadata, new values (used by projections)."""
        return EmbeddingMatrix(
            data=data,
            modality=self.modality,
            labels=self.labels,
            source=self.source + source_suffix,
        )


def load_array_file(
    path: Path | str,
    modality: str = "image",
    labels: np.ndarray | None = None,
    source: str | None = None,
) -> EmbeddingMatrix:
    """Load a 2-D float NPY file as an EmbeddingMatrix.

    Accepts ``<f4``/``<f8`` and widens to float64; any other dtype is a
    FormatError. Non-2-D or empty shapes raise ShapeError, non-finite
    entries raise DataError naming the first offending row.
    """
    arr = read_npy(path, FLOAT_DESCRS, ndim=2)
    try:
        return EmbeddingMatrix(
            data=arr.astype(np.float64),
            modality=modality,
            labels=labels,
            source=source if source is not None else str(path),
        )
    except SpectruneError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def save_array_file(m: EmbeddingMatrix, path: Path | str) -> None:
    """Write the matrix as 64-bit NPY; load_array_file round-trips it bit-exactly."""
    write_npy(path, m.data)


def load_label_file(path: Path | str) -> np.ndarray:
    """Load a 1-D integer NPY sidecar of class ids (all >= 0)."""
    arr = read_npy(path, INT_DESCRS, ndim=1)
    if (arr < 0).any():
        bad = int(np.flatnonzero(arr < 0)[0])
        raise DataError(f"{path}: negative label id at row {bad}")
    return arr.astype(np.int64)


def save_label_file(labels: np.ndarray, path: Path | str) -> None:
    write_npy(path, np.asarray(labels, dtype=np.int64))


def split_by_label(m: EmbeddingMatrix) -> dict[int, EmbeddingMatrix]:
    """Partition rows by class id.

    The parts are disjoint, exhaustive, and keep the parent's modality.

    Raises:
        MissingLabelsError: the matrix carries no labels.
    """
    if m.labels is None:
        raise MissingLabelsError(f"matrix {m.source!r} has no labels")
    parts: dict[int, EmbeddingMatrix] = {}
    for label in np.unique(m.labels):
        mask = m.labels == label
        parts[int(label)] = EmbeddingMatrix(
            data=m.data[mask],
            modality=m.modality,
            labels=m.labels[mask],
            source=f"{m.source}[label={int(label)}]",
        )
    return parts


# --- dataset manifests ---


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    modality: str
    labels: Path | None = None


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entries: tuple[ManifestEntry, ...] = field(default_factory=tuple)


def load_manifest(path: Path | str) -> DatasetManifest:
    """Parse and validate a manifest JSON file.

    Schema: ``{"name": str, "entries": [{"path": str, "modality":
    "image"|"text", "labels": str|null}]}``. Entry paths are resolved
    relative to the manifest's directory and must exist.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: manifest is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict) or not isinstance(doc.get("name"), str):
        raise FormatError(f"{path}: manifest must be an object with a 'name' string")
    raw_entries = doc.get("entries")
    if not isinstance(raw_entries, list):
        raise FormatError(f"{path}: manifest 'entries' must be a list")

    base = path.parent
    entries = []
    for i, raw in enumerate(raw_entries):
        if not isinstance(raw, dict) or not isinstance(raw.get("path"), str):
            raise FormatError(f"{path}: entry {i} must be an object with a 'path'")
        modality = raw.get("modality")
        if modality not in MODALITIES:
            raise FormatError(
                f"{path}: entry {i} modality must be one of {MODALITIES}, "
                f"got {modality!r}"
            )
        labels_raw = raw.get("labels")
        if labels_raw is not None and not isinstance(labels_raw, str):
            raise FormatError(f"{path}: entry {i} 'labels' must be a string or null")
        entry_path = (base / raw["path"]).resolve()
        if not entry_path.is_file():
            raise IoError(f"{path}: entry {i} file does not exist: {entry_path}")
        labels_path = None
        if labels_raw is not None:
            labels_path = (base / labels_raw).resolve()
            if not labels_path.is_file():
                raise IoError(
                    f"{path}: entry {i} labels file does not exist: {labels_path}"
                )
        entries.append(ManifestEntry(entry_path, modality, labels_path))
    return DatasetManifest(name=doc["name"], entries=tuple(entries))


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Write a manifest with entry paths relative to the manifest directory."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path) -> str:
        try:
            return str(p.resolve().relative_to(base))
        except ValueError:
            return str(p.resolve())

    doc = {
        "name": manifest.name,
        "entries": [
            {
                "path": rel(e.path),
                "modality": e.modality,
                "labels": rel(e.labels) if e.labels is not None else None,
            }
            for e in manifest.entries
        ],
    }
    try:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def load_entry(entry: ManifestEntry) -> EmbeddingMatrix:
    labels = load_label_file(entry.labels) if entry.labels is not None else None
    return load_array_file(entry.path, modality=entry.modality, labels=labels)


def iter_entries(
    manifest: DatasetManifest, modality: str | None = None
) -> Iterator[EmbeddingMatrix]:
    """Yield loaded matrices, enforcing a consistent width across entries."""
    width: int | None = None
    for entry in manifest.entries:
        if modality is not None and entry.modality != modality:
            continue
        m = load_entry(entry)
        if width is None:
            width = m.d
        elif m.d != width:
            raise ShapeError(
                f"{entry.path}: width {m.d} differs from manifest width {width}"
            )
        yield m
