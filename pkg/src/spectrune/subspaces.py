"""Noise subspaces, overlap metrics, and noise-removing projections.

Overlap between two subspaces is measured by the mean squared cosine of
their principal angles: the singular values of B1^T B2 are exactly those
cosines, so the metric is the mean of their squares. It is 1.0 for
identical spans, 0.0 for orthogonal ones, and invariant to the choice of
orthonormal basis inside each span.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spectrune.covariance import per_class_covariances
from spectrune.errors import (
    DimError,
    EmptySubspaceError,
    FormatError,
    IoError,
    MissingLabelsError,
    NumericalError,
    PreconditionError,
)
from spectrune.npy import FLOAT_DESCRS, read_npy, write_npy
from spectrune.spectral import (
    LOG_FLOOR,
    NoiseThreshold,
    Spectrum,
    clamp_psd_eigenvalues,
    count_noise,
    decompose,
)
from spectrune.store import EmbeddingMatrix

_ORTHO_TOL = 1e-8
_COSINE_SLACK = 1e-8


@dataclass(frozen=True)
class Subspace:
    """A d-by-p column-orthonormal basis with provenance."""

    basis: np.ndarray
    origin: str = ""

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2:
            raise PreconditionError(f"basis must be 2-D, got shape {basis.shape}")
        d, p = basis.shape
        if not 1 <= p <= d:
            raise PreconditionError(f"need 1 <= p <= d, got basis shape {basis.shape}")
        gram_err = float(np.abs(basis.T @ basis - np.eye(p)).max())
        if gram_err > _ORTHO_TOL:
            raise NumericalError(f"basis not orthonormal: max |B'B - I| = {gram_err:.3e}")
        if basis is self.basis:
            basis = basis.copy()
        basis.flags.writeable = False
        object.__setattr__(self, "basis", basis)

    @property
    def d(self) -> int:
        return int(self.basis.shape[0])

    @property
    def p(self) -> int:
        return int(self.basis.shape[1])


@dataclass(frozen=True)
class OverlapReport:
    """mSCSA value plus the underlying principal-angle cosines.

    ``dims_mismatch`` flags pairs with different subspace dimensions, where
    the metric averages over the min(p1, p2) available angles.
    """

    mscsa: float
    principal_cosines: np.ndarray
    dims_mismatch: bool = False

    def to_dict(self) -> dict:
        return {
            "mscsa": float(self.mscsa),
            "principal_cosines": [float(c) for c in self.principal_cosines],
            "dims_mismatch": bool(self.dims_mismatch),
        }


def noise_subspace(
    s: Spectrum, t: NoiseThreshold, floor: float = LOG_FLOOR
) -> Subspace:
    """Eigenvectors of all eigenvalues strictly below the threshold.

    Raises:
        EmptySubspaceError: nothing falls below the cutoff.
    """
    p = count_noise(s, t.log10_value, floor=floor)
    if p == 0:
        raise EmptySubspaceError(
            f"no eigenvalue of {s.source or 'spectrum'} lies below "
            f"10^{t.log10_value}"
        )
    return Subspace(
        basis=s.eigenvectors[:, :p],
        origin=f"{s.source} eigenvalues[0:{p}] below 10^{t.log10_value:.6g}",
    )


def lowest_k_subspace(s: Spectrum, k: int) -> Subspace:
    """Span of the eigenvectors paired with the k smallest eigenvalues."""
    if not 1 <= k <= s.d:
        raise PreconditionError(f"need 1 <= k <= {s.d}, got {k}")
    return Subspace(
        basis=s.eigenvectors[:, :k],
        origin=f"{s.source} eigenvalues[0:{k}]",
    )


def mscsa(a: Subspace, b: Subspace) -> OverlapReport:
    """Mean squared cosine of the principal angles between two subspaces.

    The cosines are the singular values of ``a.basis.T @ b.basis``, clamped
    to [0, 1]; with unequal dimensions the min(p_a, p_b) angles are
    averaged and the report flags the mismatch.

    Raises:
        DimError: ambient dimensions differ.
        NumericalError: a singular value exceeds 1 by more than 1e-8.
    """
    if a.d != b.d:
        raise DimError(f"ambient dimension mismatch: {a.d} vs {b.d}")
    overlap = a.basis.T @ b.basis
    cosines = np.linalg.svd(overlap, compute_uv=False)
    worst = float(cosines.max(initial=0.0))
    if worst > 1.0 + _COSINE_SLACK:
        raise NumericalError(f"principal cosine {worst!r} exceeds 1 beyond tolerance")
    cosines = np.clip(cosines, 0.0, 1.0)
    return OverlapReport(
        mscsa=float(np.mean(cosines**2)),
        principal_cosines=cosines,
        dims_mismatch=a.p != b.p,
    )


def projection_remove(v: Subspace | np.ndarray) -> np.ndarray:
    """The symmetric idempotent P = I - B B^T that zeroes the subspace.

    Accepts a raw d-by-p orthonormal array as well; a d-by-0 array is the
    conceptual p = 0 case and yields the identity.
    """
    basis = v.basis if isinstance(v, Subspace) else np.asarray(v, dtype=np.float64)
    if basis.ndim != 2:
        raise PreconditionError(f"basis must be 2-D, got shape {basis.shape}")
    d = basis.shape[0]
    p = np.eye(d) - basis @ basis.T
    return (p + p.T) * 0.5


def remove_component(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Rows of x minus their components inside the basis span (factored
    form of the removal projection; never materializes a d-by-d matrix)."""
    return x - (x @ basis) @ basis.T


def apply_projection(p: np.ndarray, m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Map every row through an explicit d-by-d projection matrix."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimError(f"projection must be square, got shape {p.shape}")
    if p.shape[0] != m.d:
        raise DimError(f"projection width {p.shape[0]} != embedding width {m.d}")
    return m.with_data(m.data @ p.T, source_suffix="|projected")


def apply_removal(v: Subspace, m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Factored application of the removal projection; agrees with
    apply_projection(projection_remove(v), m) to within 1e-12."""
    if v.d != m.d:
        raise DimError(f"subspace width {v.d} != embedding width {m.d}")
    return m.with_data(remove_component(m.data, v.basis), source_suffix="|projected")


def per_class_overlap(
    m: EmbeddingMatrix, global_noise: Subspace, threads: int = 1
) -> dict[int, float]:
    """mSCSA between the global noise span and each class's own
    lowest-variance span of the same dimension.

    Per-class covariances are trace-normalized before decomposition, the
    same convention as the global pipeline. Classes with fewer than two
    rows were already skipped (with a warning) upstream. Decompositions
    are independent per class, so ``threads`` only changes wall time, not
    values or ordering.

    Raises:
        MissingLabelsError: matrix carries no labels.
        DimError: embedding width differs from the subspace's.
    """
    if m.labels is None:
        raise MissingLabelsError(f"matrix {m.source!r} has no labels")
    if m.d != global_noise.d:
        raise DimError(f"embedding width {m.d} != subspace width {global_noise.d}")
    k = global_noise.p
    covs = per_class_covariances(m, trace_normalize_each=True)

    def one(cov) -> float:
        class_low = lowest_k_subspace(decompose(cov), k)
        return mscsa(class_low, global_noise).mscsa

    labels = sorted(covs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, (covs[label] for label in labels)))
    else:
        values = [one(covs[label]) for label in labels]
    return dict(zip(labels, values))


@dataclass(frozen=True)
class ClassSpectrumDistances:
    """Pairwise RMS distances between per-class eigenvalue curves."""

    labels: tuple[int, ...]
    distances: np.ndarray


def class_spectrum_distance(
    m: EmbeddingMatrix,
    log_scale: bool = True,
    floor: float = LOG_FLOOR,
) -> ClassSpectrumDistances:
    """RMS distance between mean-centered per-class eigenvalue vectors.

    Default scale is log10 (mean-centering then cancels constant
    log-shifts, i.e. global rescalings of a class); ``log_scale=False``
    compares raw eigenvalues instead. Covariances are trace-normalized
    first, matching the global pipeline.
    """
    if m.labels is None:
        raise MissingLabelsError(f"matrix {m.source!r} has no labels")
    labels: list[int] = []
    curves: list[np.ndarray] = []
    for label, cov in per_class_covariances(m, trace_normalize_each=True).items():
        w = np.linalg.eigvalsh(cov.sigma)
        w = clamp_psd_eigenvalues(w, float(np.trace(cov.sigma)))
        vec = np.log10(np.maximum(w, floor)) if log_scale else w
        labels.append(label)
        curves.append(vec - vec.mean())
    stack = np.asarray(curves)
    diff = stack[:, None, :] - stack[None, :, :]
    dist = np.sqrt(np.mean(diff**2, axis=2))
    dist = (dist + dist.T) * 0.5
    np.fill_diagonal(dist, 0.0)
    return ClassSpectrumDistances(labels=tuple(labels), distances=dist)


# --- persistence: NPY basis + JSON sidecar ---


def save_subspace(v: Subspace, npy_path: Path | str) -> None:
    write_npy(npy_path, v.basis)
    meta = {"origin": v.origin, "d": v.d, "p": v.p}
    try:
        Path(npy_path).with_suffix(".json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write sidecar for {npy_path}: {exc}") from exc


def load_subspace(npy_path: Path | str) -> Subspace:
    basis = read_npy(npy_path, FLOAT_DESCRS, ndim=2).astype(np.float64)
    side = Path(npy_path).with_suffix(".json")
    origin = ""
    if side.is_file():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{side}: invalid JSON: {exc}") from exc
        origin = str(meta.get("origin", ""))
    return Subspace(basis=basis, origin=origin)
