"""Streaming covariance estimation with mergeable accumulators.

The running state is (count, mean, m2) where m2 is the sum of centered
outer products. Batches fold in through the pairwise-combine update (batch
statistics merged into the running state), so a dataset never needs a
centered copy in memory; the textbook two-pass formula exists only in the
test suite as the oracle. Merging two accumulators is the same combine
step, which is what makes per-chunk parallel accumulation order-stable to
within floating-point tolerance.

Finalized matrices use the unbiased 1/(n-1) divisor and are explicitly
symmetrized, since update order can leave ~1e-15 asymmetry that breaks
symmetric-eigensolver preconditions downstream.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spectrune.errors import (
    DataError,
    DegenerateCovarianceError,
    DimError,
    FormatError,
    InsufficientSamplesError,
    IoError,
    NumericalError,
    PreconditionError,
)
from spectrune.npy import FLOAT_DESCRS, read_npy, write_npy
from spectrune.store import EmbeddingMatrix, split_by_label

COV_MODALITIES = ("image", "text", "average", "kernel-image", "kernel-text")

# relative asymmetry allowed in stored matrices
_SYM_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CovarianceAccumulator:
    """Mergeable running state: sample count, mean vector, centered
    outer-product sum. An empty accumulator (count 0) has all-zero state
    and, when created without a dimension, adapts to the first batch."""

    count: int
    mean: np.ndarray
    m2: np.ndarray
    modality: str | None = None

    @classmethod
    def empty(cls, dim: int | None = None, modality: str | None = None) -> "CovarianceAccumulator":
        d = 0 if dim is None else int(dim)
        return cls(
            count=0,
            mean=np.zeros(d),
            m2=np.zeros((d, d)),
            modality=modality,
        )

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True)
class CovarianceMatrix:
    """A finalized d-by-d covariance with provenance.

    Attributes:
        sigma: symmetric float64 matrix (asymmetry <= 1e-12 relative).
        n_samples: rows that produced it.
        modality: one of image, text, average, kernel-image, kernel-text.
        trace_normalized: whether sigma was rescaled to unit trace.
    """

    sigma: np.ndarray
    n_samples: int
    modality: str
    trace_normalized: bool = False

    def __post_init__(self) -> None:
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] < 1:
            raise DimError(f"covariance must be square with d >= 1, got shape {sigma.shape}")
        scale = float(np.abs(sigma).max()) if sigma.size else 0.0
        asym = float(np.abs(sigma - sigma.T).max()) if sigma.size else 0.0
        if asym > _SYM_TOL * max(scale, 1e-300):
            raise NumericalError(
                f"covariance asymmetry {asym:.3e} exceeds {_SYM_TOL} relative"
            )
        if self.modality not in COV_MODALITIES:
            raise PreconditionError(
                f"modality must be one of {COV_MODALITIES}, got {self.modality!r}"
            )
        if self.trace_normalized:
            trace = float(np.trace(sigma))
            if abs(trace - 1.0) > 1e-12:
                raise NumericalError(
                    f"trace_normalized matrix has trace {trace!r}, not 1.0"
                )
        object.__setattr__(self, "sigma", _freeze(sigma))

    @property
    def d(self) -> int:
        return int(self.sigma.shape[0])


def _combine(
    count_a: int,
    mean_a: np.ndarray,
    m2_a: np.ndarray,
    count_b: int,
    mean_b: np.ndarray,
    m2_b: np.ndarray,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Pairwise combine of two (count, mean, m2) states."""
    n = count_a + count_b
    mean = (mean_a * count_a + mean_b * count_b) / n
    delta = mean_b - mean_a
    m2 = m2_a + m2_b + np.outer(delta, delta) * (count_a * count_b / n)
    # keep the stored state symmetric despite fp update noise
    m2 = (m2 + m2.T) * 0.5
    return n, mean, m2


def _coalesce_modality(a: str | None, b: str | None) -> str | None:
    if a is None:
        return b
    if b is not None and b != a:
        raise PreconditionError(f"cannot mix modalities {a!r} and {b!r}")
    return a


def accumulate(acc: CovarianceAccumulator, batch: EmbeddingMatrix) -> CovarianceAccumulator:
    """Fold a batch of rows into the running state.

    Raises:
        DimError: batch width differs from a non-empty accumulator's.
    """
    if acc.count > 0 and batch.d != acc.dim:
        raise DimError(f"batch width {batch.d} != accumulator width {acc.dim}")
    modality = _coalesce_modality(acc.modality, batch.modality)

    mean_b = batch.data.mean(axis=0)
    centered = batch.data - mean_b
    m2_b = centered.T @ centered
    m2_b = (m2_b + m2_b.T) * 0.5

    if acc.count == 0:
        return CovarianceAccumulator(batch.n, mean_b, m2_b, modality)
    n, mean, m2 = _combine(acc.count, acc.mean, acc.m2, batch.n, mean_b, m2_b)
    return CovarianceAccumulator(n, mean, m2, modality)


def merge(a: CovarianceAccumulator, b: CovarianceAccumulator) -> CovarianceAccumulator:
    """Combine two accumulators as if their streams were concatenated.

    Commutative and associative to within 1e-10 relative.

    Raises:
        DimError: accumulator widths differ.
    """
    modality = _coalesce_modality(a.modality, b.modality)
    if a.count == 0:
        return CovarianceAccumulator(b.count, b.mean, b.m2, modality)
    if b.count == 0:
        return CovarianceAccumulator(a.count, a.mean, a.m2, modality)
    if a.dim != b.dim:
        raise DimError(f"cannot merge widths {a.dim} and {b.dim}")
    n, mean, m2 = _combine(a.count, a.mean, a.m2, b.count, b.mean, b.m2)
    return CovarianceAccumulator(n, mean, m2, modality)


def finalize(acc: CovarianceAccumulator, modality: str | None = None) -> CovarianceMatrix:
    """Turn the running state into an unbiased covariance matrix.

    Raises:
        InsufficientSamplesError: fewer than 2 samples seen.
        PreconditionError: no modality known from either argument.
    """
    if acc.count < 2:
        raise InsufficientSamplesError(
            f"covariance needs at least 2 samples, accumulator has {acc.count}"
        )
    modality = modality if modality is not None else acc.modality
    if modality is None:
        raise PreconditionError("finalize needs a modality tag")
    sigma = acc.m2 / (acc.count - 1)
    sigma = (sigma + sigma.T) * 0.5
    return CovarianceMatrix(sigma=sigma, n_samples=acc.count, modality=modality)


def covariance_of(m: EmbeddingMatrix, modality: str | None = None) -> CovarianceMatrix:
    """One-shot covariance of a single matrix via the accumulator path."""
    return finalize(accumulate(CovarianceAccumulator.empty(), m), modality=modality)


def normalize_trace(c: CovarianceMatrix) -> CovarianceMatrix:
    """Rescale so the trace is exactly 1, leaving eigenvectors untouched.

    Raises:
        DegenerateCovarianceError: trace is zero, negative, or non-finite.
    """
    trace = float(np.trace(c.sigma))
    if not np.isfinite(trace) or trace <= 0.0:
        raise DegenerateCovarianceError(f"cannot normalize trace {trace!r}")
    sigma = c.sigma / trace
    # one correction pass: guard against d*eps drift past the 1e-12 contract
    sigma = sigma / float(np.trace(sigma))
    return CovarianceMatrix(
        sigma=sigma,
        n_samples=c.n_samples,
        modality=c.modality,
        trace_normalized=True,
    )


def average(img: CovarianceMatrix, txt: CovarianceMatrix) -> CovarianceMatrix:
    """Elementwise mean of two trace-normalized covariances.

    Raises:
        PreconditionError: inputs not trace-normalized or widths differ.
    """
    if not (img.trace_normalized and txt.trace_normalized):
        raise PreconditionError("average requires trace-normalized inputs")
    if img.d != txt.d:
        raise PreconditionError(f"width mismatch: {img.d} vs {txt.d}")
    return CovarianceMatrix(
        sigma=0.5 * (img.sigma + txt.sigma),
        n_samples=img.n_samples + txt.n_samples,
        modality="average",
        trace_normalized=True,
    )


def normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit norm.

    Raises:
        DataError: a row has zero norm.
    """
    norms = np.linalg.norm(m.data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"zero-norm row {int(zero[0])} cannot be normalized")
    return EmbeddingMatrix(
        m.data / norms[:, None],
        modality=m.modality,
        labels=m.labels,
        source=m.source,
    )


def kernel_covariance(m: EmbeddingMatrix) -> CovarianceMatrix:
    """Covariance of row-normalized embeddings (cosine-similarity kernel).

    Rows are scaled to unit norm first and centering happens after the
    normalization, so the result is invariant to positive per-row rescaling
    of the input.

    Raises:
        DataError: a row has zero norm.
    """
    return finalize(
        accumulate(CovarianceAccumulator.empty(), normalize_rows(m)),
        modality=f"kernel-{m.modality}",
    )


def per_class_covariances(
    m: EmbeddingMatrix, trace_normalize_each: bool = True
) -> dict[int, CovarianceMatrix]:
    """Covariance per class id; classes with fewer than 2 rows are skipped
    with a warning rather than an error."""
    out: dict[int, CovarianceMatrix] = {}
    for label, part in sorted(split_by_label(m).items()):
        if part.n < 2:
            warnings.warn(
                f"class {label} has {part.n} sample(s), skipping covariance",
                stacklevel=2,
            )
            continue
        cov = covariance_of(part)
        out[label] = normalize_trace(cov) if trace_normalize_each else cov
    return out


# --- persistence: NPY matrix + JSON sidecar ---


def sidecar_path(npy_path: Path | str) -> Path:
    return Path(npy_path).with_suffix(".json")


def save_covariance(c: CovarianceMatrix, npy_path: Path | str) -> None:
    """Persist as <path>.npy plus a JSON sidecar with the metadata."""
    write_npy(npy_path, c.sigma)
    meta = {
        "n_samples": c.n_samples,
        "modality": c.modality,
        "trace_normalized": c.trace_normalized,
    }
    try:
        sidecar_path(npy_path).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write sidecar for {npy_path}: {exc}") from exc


def load_covariance(npy_path: Path | str) -> CovarianceMatrix:
    sigma = read_npy(npy_path, FLOAT_DESCRS, ndim=2).astype(np.float64)
    side = sidecar_path(npy_path)
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read sidecar {side}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{side}: invalid JSON: {exc}") from exc
    for key in ("n_samples", "modality", "trace_normalized"):
        if key not in meta:
            raise FormatError(f"{side}: missing key {key!r}")
    return CovarianceMatrix(
        sigma=sigma,
        n_samples=int(meta["n_samples"]),
        modality=str(meta["modality"]),
        trace_normalized=bool(meta["trace_normalized"]),
    )
