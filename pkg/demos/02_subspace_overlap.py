"""How the subspace overlap metric behaves.

The overlap between two orthonormal bases is the mean squared cosine of
their principal angles: the singular values of B1^T B2. It is 1 for equal
spans, 0 for orthogonal spans, basis-choice invariant, and for two
independently random p-dimensional subspaces of R^d its expectation is
p/d, which is the number to beat when calling an observed overlap "high".

Run:  python3 demos/02_subspace_overlap.py
"""

import numpy as np

from spectrune import Subspace, mscsa

rng = np.random.default_rng(1)


def random_subspace(d, p):
    q, r = np.linalg.qr(rng.standard_normal((d, p)))
    return Subspace(q * np.where(np.diag(r) < 0, -1.0, 1.0))


eye = np.eye(6)

print("exact cases:")
print(f"  identical spans      -> {mscsa(Subspace(eye[:, :2]), Subspace(eye[:, :2])).mscsa:.6f}")
print(f"  orthogonal spans     -> {mscsa(Subspace(eye[:, :2]), Subspace(eye[:, 2:4])).mscsa:.6f}")
tilted = Subspace((eye[:, [0]] + eye[:, [1]]) / np.sqrt(2.0))
print(f"  45 degrees, p=1      -> {mscsa(Subspace(eye[:, :1]), tilted).mscsa:.6f}")

# The same span expressed in a different basis is still the same span.
a = random_subspace(12, 4)
mixer = np.linalg.qr(rng.standard_normal((4, 4)))[0]
print(f"  span vs re-mixed span-> {mscsa(a, Subspace(a.basis @ mixer)).mscsa:.6f}")

# Principal cosines tell you which directions agree, not just the average.
b = random_subspace(12, 4)
report = mscsa(a, b)
print(f"\nrandom pair in d=12, p=4: overlap {report.mscsa:.4f}")
print(f"  principal cosines: {np.round(report.principal_cosines, 4)}")

# Chance level: average overlap of independent random pairs approaches p/d.
for d, p in ((32, 4), (64, 8), (128, 16)):
    values = [mscsa(random_subspace(d, p), random_subspace(d, p)).mscsa for _ in range(200)]
    print(
        f"mean over 200 random pairs, d={d:4d} p={p:3d}: "
        f"{np.mean(values):.4f}   (chance level p/d = {p / d:.4f})"
    )
