"""Metric object types, distances, and Fréchet means.

Supported spaces:

- ``quantile``: univariate distributions tabulated as quantile values on a
  common midpoint grid of (0, 1), compared with the 2-Wasserstein distance.
- ``laplacian``: graph Laplacians compared with the Frobenius distance.
- ``vector``: Euclidean vectors with the L2 distance.
- ``composite``: fixed-schema tuples of the above; squared distances add.
- ``precomputed``: opaque points identified by an index into a caller-supplied
  distance matrix, with medoid Fréchet means.

All distances here are L2 distances of a suitable flat embedding (quantile
arrays are scaled by ``1/sqrt(grid_size)`` so the squared distance is the
midpoint-rule Wasserstein integral); the shared embedding is what the
estimator kernels operate on.  Precomputed points have no embedding.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ShapeError, ValidationError

# Absolute tolerance for structural matrix invariants (symmetry, row sums).
STRUCT_TOL = 1e-10

KINDS = ("quantile", "laplacian", "vector", "composite", "precomputed")


def _as_float_array(values, name, ndim):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DomainError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class QuantileDistribution:
    """A distribution tabulated as quantile values at the grid midpoints
    ``t_m = (m - 1/2) / M`` of (0, 1)."""

    kind = "quantile"
    __slots__ = ("values",)

    def __init__(self, values):
        values = _as_float_array(values, "quantile values", 1)
        if np.any(np.diff(values) < 0):
            raise ValidationError("quantile values must be non-decreasing")
        self.values = values

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]

    def __repr__(self):
        return f"QuantileDistribution(grid_size={self.grid_size})"


class GraphLaplacian:
    """A graph Laplacian: symmetric, zero row sums, non-positive off-diagonal."""

    kind = "laplacian"
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        matrix = _as_float_array(matrix, "laplacian matrix", 2)
        p, q = matrix.shape
        if p != q:
            raise ShapeError(f"laplacian matrix must be square, got {p}x{q}")
        if np.abs(matrix - matrix.T).max() > STRUCT_TOL:
            raise ValidationError("laplacian matrix is not symmetric within 1e-10")
        if np.abs(matrix.sum(axis=1)).max() > STRUCT_TOL:
            raise ValidationError("laplacian row sums exceed 1e-10")
        off = matrix - np.diag(np.diag(matrix))
        if off.max(initial=0.0) > STRUCT_TOL:
            raise ValidationError("laplacian off-diagonal entries must be <= 0")
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"GraphLaplacian(dim={self.dim})"


def symmetrize(matrix) -> np.ndarray:
    """Average a matrix with its transpose (pre-validation repair helper)."""
    matrix = np.asarray(matrix, dtype=float)
    return 0.5 * (matrix + matrix.T)


class EuclideanVector:
    kind = "vector"
    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = _as_float_array(coords, "vector coords", 1)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def __repr__(self):
        return f"EuclideanVector(dim={self.dim})"


class CompositeObject:
    """An ordered tuple of metric objects; the squared distance is the sum of
    the parts' squared distances."""

    kind = "composite"
    __slots__ = ("parts",)

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise DomainError("composite object needs at least one part")
        for part in parts:
            if getattr(part, "kind", None) not in ("quantile", "laplacian", "vector"):
                raise ShapeError(
                    "composite parts must be quantile, laplacian, or vector objects"
                )
        self.parts = parts

    def __repr__(self):
        return f"CompositeObject(parts={[p.kind for p in self.parts]})"


class PrecomputedPoint:
    """An observation identified by its row index in a precomputed distance
    matrix held by the dataset."""

    kind = "precomputed"
    __slots__ = ("index",)

    def __init__(self, index):
        index = int(index)
        if index < 0:
            raise DomainError("precomputed index must be >= 0")
        self.index = index

    def __repr__(self):
        return f"PrecomputedPoint(index={self.index})"


class RawSampleDistribution:
    """Raw draws from an unobserved distribution, to be converted to a
    quantile grid with :func:`quantile_from_samples`."""

    __slots__ = ("samples",)

    def __init__(self, samples):
        self.samples = _as_float_array(samples, "samples", 1)

    @property
    def size(self) -> int:
        return self.samples.shape[0]


def quantile_from_samples(raw, grid_size: int) -> QuantileDistribution:
    """Empirical quantile function of the samples at the grid midpoints.

    Uses the left-continuous inverse of the empirical CDF, i.e. the order
    statistic ``X_(ceil(t*W))`` at each midpoint ``t_m = (m - 1/2)/M``.
    """
    if isinstance(raw, RawSampleDistribution):
        samples = raw.samples
    else:
        samples = _as_float_array(raw, "samples", 1)
    if grid_size < 2:
        raise DomainError("grid_size must be >= 2")
    w = samples.shape[0]
    order = np.sort(samples)
    t = (np.arange(grid_size) + 0.5) / grid_size
    ranks = np.ceil(t * w).astype(int) - 1
    return QuantileDistribution(order[np.clip(ranks, 0, w - 1)])


# ---------------------------------------------------------------------------
# Schema handling (object compatibility within one dataset)
# ---------------------------------------------------------------------------


def schema_of(obj):
    """A hashable signature describing kind and shape; objects are comparable
    only when their schemas match."""
    if obj.kind == "quantile":
        return ("quantile", obj.grid_size)
    if obj.kind == "laplacian":
        return ("laplacian", obj.dim)
    if obj.kind == "vector":
        return ("vector", obj.dim)
    if obj.kind == "composite":
        return ("composite",) + tuple(schema_of(p) for p in obj.parts)
    if obj.kind == "precomputed":
        return ("precomputed",)
    raise ShapeError(f"unknown metric object {obj!r}")


def _require_same_schema(a, b):
    sa, sb = schema_of(a), schema_of(b)
    if sa != sb:
        raise ShapeError(f"incompatible objects: {sa} vs {sb}")


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def wasserstein_distance(a: QuantileDistribution, b: QuantileDistribution) -> float:
    """2-Wasserstein distance via the midpoint rule on the common grid."""
    _require_same_schema(a, b)
    diff = a.values - b.values
    return math.sqrt(float(diff @ diff) / a.grid_size)


def frobenius_distance(a: GraphLaplacian, b: GraphLaplacian) -> float:
    _require_same_schema(a, b)
    diff = (a.matrix - b.matrix).ravel()
    return math.sqrt(float(diff @ diff))


def euclidean_distance(a: EuclideanVector, b: EuclideanVector) -> float:
    _require_same_schema(a, b)
    diff = a.coords - b.coords
    return math.sqrt(float(diff @ diff))


def composite_distance(a: CompositeObject, b: CompositeObject) -> float:
    _require_same_schema(a, b)
    return math.sqrt(
        math.fsum(object_distance(pa, pb) ** 2 for pa, pb in zip(a.parts, b.parts))
    )


_DISTANCE = {
    "quantile": wasserstein_distance,
    "laplacian": frobenius_distance,
    "vector": euclidean_distance,
    "composite": composite_distance,
}


def object_distance(a, b) -> float:
    """Kind-dispatched distance between two intrinsic metric objects."""
    if a.kind != b.kind:
        raise ShapeError(f"mixed kinds: {a.kind} vs {b.kind}")
    if a.kind == "precomputed":
        raise DomainError(
            "precomputed points need the dataset's distance matrix; "
            "use DistanceCache"
        )
    return _DISTANCE[a.kind](a, b)


# ---------------------------------------------------------------------------
# Embeddings: flat coordinates in which every intrinsic distance is plain L2
# ---------------------------------------------------------------------------


def embedding_dim(obj) -> int:
    if obj.kind == "quantile":
        return obj.grid_size
    if obj.kind == "laplacian":
        return obj.dim * obj.dim
    if obj.kind == "vector":
        return obj.dim
    if obj.kind == "composite":
        return sum(embedding_dim(p) for p in obj.parts)
    raise DomainError(f"{obj.kind} objects have no embedding")


def embed(obj) -> np.ndarray:
    if obj.kind == "quantile":
        return obj.values / math.sqrt(obj.grid_size)
    if obj.kind == "laplacian":
        return obj.matrix.ravel()
    if obj.kind == "vector":
        return obj.coords
    if obj.kind == "composite":
        return np.concatenate([embed(p) for p in obj.parts])
    raise DomainError(f"{obj.kind} objects have no embedding")


def embedding_matrix(objects) -> np.ndarray:
    """Stack object embeddings into a C-contiguous (N, m) matrix."""
    return np.ascontiguousarray(np.vstack([embed(o) for o in objects]))


def unembed(template, vec: np.ndarray):
    """Decode an embedding back into an object shaped like ``template``.

    Convex combinations of valid embeddings decode to valid objects
    (monotonicity and Laplacian structure are preserved by averaging), so no
    re-validation surprises arise for means.
    """
    if template.kind == "quantile":
        return QuantileDistribution(vec * math.sqrt(template.grid_size))
    if template.kind == "laplacian":
        p = template.dim
        return GraphLaplacian(vec.reshape(p, p))
    if template.kind == "vector":
        return EuclideanVector(vec)
    if template.kind == "composite":
        parts = []
        pos = 0
        for part in template.parts:
            d = embedding_dim(part)
            parts.append(unembed(part, vec[pos:pos + d]))
            pos += d
        return CompositeObject(parts)
    raise DomainError(f"{template.kind} objects have no embedding")


# ---------------------------------------------------------------------------
# Fréchet means
# ---------------------------------------------------------------------------


def frechet_mean(objects, weights=None, distances=None):
    """Minimizer of the (weighted) mean squared distance to ``objects``.

    Intrinsic kinds have closed-form minimizers (their embedded spaces are
    convex, so the weighted embedding average is the constrained minimizer).
    Precomputed points use the medoid over the listed objects, which needs
    the dataset-level ``distances`` matrix; ties break to the lowest index.
    """
    objects = list(objects)
    if not objects:
        raise DomainError("frechet_mean of an empty collection")
    first = objects[0]
    for obj in objects[1:]:
        _require_same_schema(first, obj)
    if weights is None:
        w = np.full(len(objects), 1.0 / len(objects))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(objects),):
            raise ShapeError("weights must match the number of objects")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise DomainError("weights must sum to a positive value")
        w = w / total

    if first.kind == "precomputed":
        if distances is None:
            raise DomainError("medoid mean needs the precomputed distance matrix")
        idx = np.array([o.index for o in objects])
        sq = np.asarray(distances, dtype=float) ** 2
        costs = sq[np.ix_(idx, idx)] @ w
        return PrecomputedPoint(int(idx[costs == costs.min()].min()))

    X = embedding_matrix(objects)
    return unembed(first, w @ X)
