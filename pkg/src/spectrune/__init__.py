"""spectrune: covariance eigenspectrum analysis for embedding spaces.

Decomposes an embedding space into a high-variance signal component and a
shared low-variance noise subspace via the eigenspectrum of (trace-
normalized) covariance matrices, measures subspace overlap with the mean
squared cosine of principal angles, and evaluates how harmless pruning the
noise span is on downstream zero-shot and alignment tasks.
"""

from spectrune.covariance import (
    CovarianceAccumulator,
    CovarianceMatrix,
    accumulate,
    average,
    covariance_of,
    finalize,
    kernel_covariance,
    load_covariance,
    merge,
    normalize_rows,
    normalize_trace,
    per_class_covariances,
    save_covariance,
)
from spectrune.errors import (
    DataError,
    DegenerateCovarianceError,
    DimError,
    EmptySubspaceError,
    FormatError,
    InsufficientSamplesError,
    IoError,
    MissingLabelsError,
    NoKneeError,
    NumericalError,
    PreconditionError,
    ShapeError,
    SpectruneError,
)
from spectrune.evaluation import (
    Activation,
    AlignmentDeltaReport,
    EvalReport,
    SyntheticBenchmark,
    SyntheticEmbeddings,
    ZeroShotTask,
    alignment_delta,
    haar_random_ablation,
    random_ablation,
    rank_activations,
    synth_benchmark,
    synth_embeddings,
    zero_shot_topk,
)
from spectrune.spectral import (
    NoiseThreshold,
    Spectrum,
    count_noise,
    decompose,
    detect_knee,
    fixed_threshold,
    log_spectrum,
    noise_threshold,
    symmetric_eigendecomposition,
)
from spectrune.store import (
    DatasetManifest,
    EmbeddingMatrix,
    ManifestEntry,
    iter_entries,
    load_array_file,
    load_entry,
    load_label_file,
    load_manifest,
    save_array_file,
    save_label_file,
    save_manifest,
    split_by_label,
)
from spectrune.subspaces import (
    ClassSpectrumDistances,
    OverlapReport,
    Subspace,
    apply_projection,
    apply_removal,
    class_spectrum_distance,
    load_subspace,
    lowest_k_subspace,
    mscsa,
    noise_subspace,
    per_class_overlap,
    projection_remove,
    remove_component,
    save_subspace,
)

__version__ = "0.1.0"
