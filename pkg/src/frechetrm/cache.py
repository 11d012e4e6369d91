"""Distance cache shared by the estimators.

Flattens a dataset into observation order (groups, then subjects, then
repeats), embeds intrinsic objects into their common L2 coordinates, and
serves the bulk reductions every estimator needs: distances to a candidate
mean, per-subject within-pair sums, and the full pairwise matrix.

For the precomputed kind there is no embedding; everything is answered from
the dataset's distance matrix, and Fréchet means are medoids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .spaces import PrecomputedPoint, embedding_matrix, unembed


@dataclass(frozen=True)
class GroupIndex:
    subj_lo: int
    subj_hi: int
    obs_lo: int
    obs_hi: int


class DistanceCache:
    def __init__(self, dataset):
        self.dataset = dataset
        self.kind = dataset.kind
        observations = []
        starts, counts = [], []
        self.group_index = []
        pos = 0
        nsub = 0
        for group in dataset.groups:
            g_subj_lo, g_obs_lo = nsub, pos
            for subject in group.subjects:
                starts.append(pos)
                counts.append(subject.n_repeats)
                observations.extend(subject.observations)
                pos += subject.n_repeats
                nsub += 1
            self.group_index.append(GroupIndex(g_subj_lo, nsub, g_obs_lo, pos))
        self.observations = observations
        self.n_obs = pos
        self.n_subjects = nsub
        self.subject_starts = np.asarray(starts, dtype=np.int64)
        self.subject_counts = np.asarray(counts, dtype=np.int64)

        if self.kind == "precomputed":
            self._X = None
            self._indices = np.array([o.index for o in observations], dtype=np.int64)
            self._sq_full = np.asarray(dataset.distances) ** 2
        else:
            self._X = embedding_matrix(observations)
            self._indices = None
            self._sq_full = None
        self._subject_col_sums = None
        self._matrix = None

    # -- distance matrix over the dataset's observations ------------------

    def matrix(self) -> np.ndarray:
        """Distances between all N observations (cached, symmetric, zero
        diagonal)."""
        if self._matrix is None:
            if self.kind == "precomputed":
                self._matrix = np.asarray(self.dataset.distances)[
                    np.ix_(self._indices, self._indices)
                ]
            else:
                self._matrix = np.sqrt(kernels.pairwise_sq_dists(self._X))
        return self._matrix

    def d2(self, u: int, v: int) -> float:
        """Squared distance between observations ``u`` and ``v``."""
        if self.kind == "precomputed":
            return float(self._sq_full[self._indices[u], self._indices[v]])
        diff = self._X[u] - self._X[v]
        return float(diff @ diff)

    # -- means -------------------------------------------------------------

    def _col_sums(self) -> np.ndarray:
        """Per-subject column sums of the embeddings, accumulated in sorted
        order per column so repeat permutations cannot change them."""
        if self._subject_col_sums is None:
            sums = np.empty((self.n_subjects, self._X.shape[1]))
            for j, (s, c) in enumerate(zip(self.subject_starts,
                                           self.subject_counts)):
                block = self._X[s:s + c]
                if c > 2:
                    block = np.sort(block, axis=0)
                sums[j] = block.sum(axis=0)
            self._subject_col_sums = sums
        return self._subject_col_sums

    def _medoid(self, obs_lo: int, obs_hi: int) -> int:
        cols = self._indices[obs_lo:obs_hi]
        costs = self._sq_full[np.ix_(cols, cols)].sum(axis=1)
        ties = costs == costs.min()
        return int(obs_lo + np.flatnonzero(ties)[np.argmin(cols[ties])])

    def mean_point(self, g: int | None):
        """Fréchet mean of group ``g`` (or pooled when ``g`` is None):
        an embedding vector for intrinsic kinds, a flat observation position
        (the medoid) for the precomputed kind."""
        if g is None:
            subj_lo, subj_hi, obs_lo, obs_hi = 0, self.n_subjects, 0, self.n_obs
        else:
            gi = self.group_index[g]
            subj_lo, subj_hi, obs_lo, obs_hi = (gi.subj_lo, gi.subj_hi,
                                                gi.obs_lo, gi.obs_hi)
        if self.kind == "precomputed":
            return self._medoid(obs_lo, obs_hi)
        total = self._col_sums()[subj_lo:subj_hi].sum(axis=0)
        return total / (obs_hi - obs_lo)

    def mean_object(self, point):
        """Decode a mean produced by :meth:`mean_point` into a metric object."""
        if self.kind == "precomputed":
            return PrecomputedPoint(self._indices[point])
        return unembed(self.observations[0], point)

    # -- bulk reductions -----------------------------------------------------

    def d2_to_point(self, point, obs_lo: int, obs_hi: int) -> np.ndarray:
        """Squared distances from observations [obs_lo, obs_hi) to a mean."""
        if self.kind == "precomputed":
            return self._sq_full[self._indices[point],
                                 self._indices[obs_lo:obs_hi]]
        return kernels.sq_dists_to_point(self._X[obs_lo:obs_hi],
                                         np.ascontiguousarray(point))

    def subject_sums(self, values: np.ndarray, subj_lo: int,
                     subj_hi: int, obs_lo: int) -> np.ndarray:
        """Per-subject sums of per-observation ``values`` (sorted
        accumulation); ``values`` is indexed relative to ``obs_lo``."""
        starts = self.subject_starts[subj_lo:subj_hi] - obs_lo
        counts = self.subject_counts[subj_lo:subj_hi]
        return kernels.segment_sorted_sums(np.ascontiguousarray(values),
                                           np.ascontiguousarray(starts),
                                           np.ascontiguousarray(counts))

    def within_sums(self, g: int) -> np.ndarray:
        """Per-subject ordered-pair sums of squared distances for group
        ``g``."""
        gi = self.group_index[g]
        starts = self.subject_starts[gi.subj_lo:gi.subj_hi]
        counts = self.subject_counts[gi.subj_lo:gi.subj_hi]
        if self.kind == "precomputed":
            out = np.empty(len(starts))
            for j, (s, c) in enumerate(zip(starts, counts)):
                if c < 2:
                    out[j] = 0.0
                    continue
                rows = self._indices[s:s + c]
                sub = self._sq_full[np.ix_(rows, rows)]
                vals = np.sort(sub[np.triu_indices(c, k=1)])
                out[j] = 2.0 * float(np.sum(vals))
            return out
        local = starts - gi.obs_lo
        X = self._X[gi.obs_lo:gi.obs_hi]
        return kernels.within_pair_sums(np.ascontiguousarray(X),
                                        np.ascontiguousarray(local),
                                        np.ascontiguousarray(counts))
