"""Numpy implementations of the hot reduction kernels.

These mirror the compiled extension in ``_core.pyx``.  Per-subject
reductions accumulate in ascending sorted order so results depend only on
the multiset of summands, which makes the estimators invariant under
permutations of a subject's repeats.
"""

from __future__ import annotations

import numpy as np


def sq_dists_to_point(X: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Squared L2 distances from each row of ``X`` to ``point``."""
    diff = X - point
    return np.einsum("ij,ij->i", diff, diff)


def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    """Full squared-distance matrix by direct row differences.

    Differences are formed explicitly (no Gram-matrix shortcut) so the
    diagonal is exactly zero and tiny distances keep full relative accuracy.
    Only the upper triangle is computed; the lower is mirrored.
    """
    n = X.shape[0]
    out = np.zeros((n, n))
    for i in range(n - 1):
        diff = X[i + 1:] - X[i]
        row = np.einsum("ij,ij->i", diff, diff)
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out


def segment_sorted_sums(values: np.ndarray, starts: np.ndarray,
                        counts: np.ndarray) -> np.ndarray:
    """Per-segment sums with ascending-order accumulation."""
    out = np.empty(len(starts))
    for j, (s, c) in enumerate(zip(starts, counts)):
        seg = np.sort(values[s:s + c])
        acc = 0.0
        for v in seg:
            acc += v
        out[j] = acc
    return out


def within_pair_sums(X: np.ndarray, starts: np.ndarray,
                     counts: np.ndarray) -> np.ndarray:
    """Per-subject sums of squared distances over ordered repeat pairs.

    Each unordered pair is counted twice, matching the ``r_i (r_i - 1)``
    denominators of the within-subject estimators.
    """
    out = np.empty(len(starts))
    for j, (s, c) in enumerate(zip(starts, counts)):
        if c < 2:
            out[j] = 0.0
            continue
        block = X[s:s + c]
        ia, ib = np.triu_indices(c, k=1)
        diff = block[ia] - block[ib]
        vals = np.sort(np.einsum("ij,ij->i", diff, diff))
        acc = 0.0
        for v in vals:
            acc += v
        out[j] = 2.0 * acc
    return out
