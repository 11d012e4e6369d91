"""Dataset containers: groups of subjects with repeated observations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError, ValidationError
from .spaces import schema_of

# Structural tolerance for the precomputed distance matrix.
_MAT_TOL = 1e-10


@dataclass
class Subject:
    """One subject with ``r_i >= 1`` repeated observations."""

    id: str
    observations: list

    @property
    def n_repeats(self) -> int:
        return len(self.observations)


@dataclass
class Group:
    name: str
    subjects: list

    @property
    def n_observations(self) -> int:
        return sum(s.n_repeats for s in self.subjects)


@dataclass
class Dataset:
    """The test input: ``k`` groups of subjects holding metric objects.

    ``distances`` is required for (and only for) the precomputed kind;
    ``support`` optionally declares the compact support interval that
    quantile values must respect.
    """

    groups: list
    distances: np.ndarray | None = None
    support: tuple[float, float] | None = None
    _schema: tuple = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.validate()

    @property
    def kind(self) -> str:
        return self._schema[0]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_observations(self) -> int:
        return sum(g.n_observations for g in self.groups)

    def iter_observations(self):
        for group in self.groups:
            for subject in group.subjects:
                yield from subject.observations

    def validate(self):
        if not self.groups:
            raise ValidationError("dataset has no groups")
        schema = None
        for group in self.groups:
            if not group.subjects:
                raise ValidationError(f"group '{group.name}' has no subjects")
            for subject in group.subjects:
                if not subject.observations:
                    raise ValidationError(
                        f"group '{group.name}' subject '{subject.id}' "
                        "has no observations"
                    )
                for pos, obs in enumerate(subject.observations):
                    try:
                        sig = schema_of(obs)
                    except ShapeError as exc:
                        raise ValidationError(
                            f"group '{group.name}' subject '{subject.id}' "
                            f"observation {pos}: {exc}"
                        ) from exc
                    if schema is None:
                        schema = sig
                    elif sig != schema:
                        raise ValidationError(
                            f"group '{group.name}' subject '{subject.id}' "
                            f"observation {pos}: schema {sig} does not match "
                            f"the dataset schema {schema}"
                        )
        self._schema = schema
        if schema[0] == "precomputed":
            self._validate_distances()
        elif self.distances is not None:
            raise ValidationError(
                "a distance matrix is only meaningful for the precomputed kind"
            )
        if self.support is not None:
            self._validate_support()

    def _validate_distances(self):
        if self.distances is None:
            raise ValidationError("precomputed datasets need a distance matrix")
        d = np.asarray(self.distances, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError("distance matrix must be square")
        if not np.all(np.isfinite(d)):
            raise ValidationError("distance matrix contains non-finite values")
        if np.abs(d - d.T).max() > _MAT_TOL:
            raise ValidationError("distance matrix is not symmetric within 1e-10")
        if np.abs(np.diag(d)).max() > _MAT_TOL:
            raise ValidationError("distance matrix diagonal must be zero")
        if d.min() < -_MAT_TOL:
            raise ValidationError("distance matrix entries must be nonnegative")
        # Triangle inequality is the caller's responsibility (documented).
        self.distances = np.ascontiguousarray(d)
        n = d.shape[0]
        for group in self.groups:
            for subject in group.subjects:
                for pos, obs in enumerate(subject.observations):
                    if obs.index >= n:
                        raise ValidationError(
                            f"group '{group.name}' subject '{subject.id}' "
                            f"observation {pos}: index {obs.index} exceeds the "
                            f"{n}x{n} distance matrix"
                        )

    def _validate_support(self):
        lo, hi = self.support
        if not (lo < hi):
            raise DomainError("support interval must satisfy lo < hi")
        if self.kind != "quantile":
            return
        for group in self.groups:
            for subject in group.subjects:
                for pos, obs in enumerate(subject.observations):
                    v = obs.values
                    if v[0] < lo - _MAT_TOL or v[-1] > hi + _MAT_TOL:
                        raise ValidationError(
                            f"group '{group.name}' subject '{subject.id}' "
                            f"observation {pos}: quantile values leave the "
                            f"declared support [{lo}, {hi}]"
                        )
