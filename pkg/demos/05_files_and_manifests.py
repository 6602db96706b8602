"""On-disk formats: array files, label sidecars, manifests, interop.

Embedding dumps are plain NPY v1.0 files (little-endian float32/float64,
C order) written and parsed by this package's own byte-level codec, so
they interoperate with any standard tooling. Labels live in 1-D integer
sidecar files; a JSON manifest ties files, modalities, and labels
together and is the input to the accumulation pipeline.

Run:  python3 demos/05_files_and_manifests.py
"""

import tempfile
from pathlib import Path

import numpy as np

from spectrune import (
    DatasetManifest,
    EmbeddingMatrix,
    ManifestEntry,
    iter_entries,
    load_array_file,
    load_label_file,
    load_manifest,
    save_array_file,
    save_label_file,
    save_manifest,
    split_by_label,
)

workdir = Path(tempfile.mkdtemp(prefix="spectrune-demo-"))
rng = np.random.default_rng(3)

# Write two shards of image embeddings plus labels for the first.
img_a = EmbeddingMatrix(
    rng.standard_normal((100, 32)), modality="image", labels=rng.integers(0, 4, 100)
)
img_b = EmbeddingMatrix(rng.standard_normal((80, 32)), modality="image")
txt = EmbeddingMatrix(rng.standard_normal((120, 32)), modality="text")

save_array_file(img_a, workdir / "img_a.npy")
save_label_file(img_a.labels, workdir / "img_a_labels.npy")
save_array_file(img_b, workdir / "img_b.npy")
save_array_file(txt, workdir / "txt.npy")

# The round trip is bit-exact for float64 payloads.
back = load_array_file(
    workdir / "img_a.npy", labels=load_label_file(workdir / "img_a_labels.npy")
)
print(f"bit-exact round trip: {back.data.tobytes() == img_a.data.tobytes()}")

# Interop: the files are ordinary NPY, numpy reads them directly.
print(f"numpy agrees with our writer: {np.array_equal(np.load(workdir / 'txt.npy'), txt.data)}")

# A manifest names every shard, its modality, and its optional labels.
manifest = DatasetManifest(
    name="demo",
    entries=(
        ManifestEntry(workdir / "img_a.npy", "image", workdir / "img_a_labels.npy"),
        ManifestEntry(workdir / "img_b.npy", "image", None),
        ManifestEntry(workdir / "txt.npy", "text", None),
    ),
)
save_manifest(manifest, workdir / "manifest.json")
print(f"\nmanifest written: {workdir / 'manifest.json'}")
print((workdir / "manifest.json").read_text())

# Loading resolves and validates paths, then streams matrices on demand.
loaded = load_manifest(workdir / "manifest.json")
for m in iter_entries(loaded, modality="image"):
    tagged = "labeled" if m.labels is not None else "unlabeled"
    print(f"  image shard: {m.n} rows x {m.d} cols, {tagged}")

# Labeled shards split cleanly into per-class parts.
parts = split_by_label(back)
print(f"\nclass parts of the labeled shard: { {k: v.n for k, v in sorted(parts.items())} }")
