"""Comparison procedures: subject-level averaging and balanced resampling.

``af_test`` adapts the location/scale-only Fréchet-variance test to
repeated measures by replacing each subject with the Fréchet mean of its
own observations and running the reduced (no-within) test.  Balanced
resampling subsamples every subject down to a common number of repeats so
balanced-design procedures apply; the per-replicate p-values are combined
with a Fisher-z style average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, Group, Subject
from .errors import DomainError
from .inference import TestResult, run_test
from .spaces import frechet_mean


@dataclass(frozen=True)
class ResamplePlan:
    target_r: int
    replicates: int
    seed: int

    def __post_init__(self):
        if self.target_r < 1:
            raise DomainError("target_r must be >= 1")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")


@dataclass
class AggregatedResult:
    p_values: list
    theta: float
    overall_p: float
    clipped: int = 0


def subject_collapse(dataset: Dataset) -> Dataset:
    """Replace each subject's observations with their single Fréchet mean."""
    groups = []
    for group in dataset.groups:
        subjects = []
        for subject in group.subjects:
            if subject.n_repeats == 1:
                rep = subject.observations[0]
            else:
                rep = frechet_mean(subject.observations,
                                   distances=dataset.distances)
            subjects.append(Subject(subject.id, [rep]))
        groups.append(Group(group.name, subjects))
    return Dataset(groups, distances=dataset.distances, support=dataset.support)


def af_test(dataset: Dataset, alpha: float = 0.05, **kwargs) -> TestResult:
    """Subject-averaged location/scale test (reduced mode on collapsed data)."""
    return run_test(subject_collapse(dataset), alpha=alpha, within=False,
                    **kwargs)


def balanced_resample(dataset: Dataset, plan: ResamplePlan) -> list:
    """B datasets in which every subject has exactly ``target_r`` repeats.

    Subjects with fewer repeats are dropped; the rest are subsampled
    uniformly without replacement.  Replicate ``b`` draws from a generator
    seeded by ``(seed, b)``, so plans are reproducible and replicates
    independent.
    """
    r = plan.target_r
    for group in dataset.groups:
        if not any(s.n_repeats >= r for s in group.subjects):
            raise DomainError(
                f"group '{group.name}' has no subject with at least {r} repeats"
            )
    out = []
    for b in range(plan.replicates):
        rng = np.random.default_rng([plan.seed, b])
        groups = []
        for group in dataset.groups:
            subjects = []
            for subject in group.subjects:
                if subject.n_repeats < r:
                    continue
                if subject.n_repeats == r:
                    obs = list(subject.observations)
                else:
                    pick = rng.choice(subject.n_repeats, size=r, replace=False)
                    obs = [subject.observations[i] for i in sorted(pick)]
                subjects.append(Subject(subject.id, obs))
            groups.append(Group(group.name, subjects))
        out.append(Dataset(groups, distances=dataset.distances,
                           support=dataset.support))
    return out


def aggregate_p_values(p_values) -> AggregatedResult:
    """Combine p-values via the average of their Fisher-z transforms:
    ``theta = mean(atanh(p_j))`` and ``overall = tanh(theta)``.

    A p-value of exactly 1 has an infinite transform and is clipped to
    ``1 - 1e-12`` (reported in ``clipped``)."""
    ps = [float(p) for p in p_values]
    if not ps:
        raise DomainError("aggregate_p_values needs at least one p-value")
    if any(p < 0.0 or p > 1.0 for p in ps):
        raise DomainError("p-values must lie in [0, 1]")
    clipped = sum(1 for p in ps if p == 1.0)
    zs = [math.atanh(min(p, 1.0 - 1e-12)) for p in ps]
    theta = math.fsum(zs) / len(zs)
    return AggregatedResult(ps, theta, math.tanh(theta), clipped)
