"""Per-group and pooled sample estimates.

For each group j with subjects i (holding r_i repeats) the estimators are
built from two per-subject reductions:

- ``T_i``: sum over repeats of the squared distance to the group mean,
- ``S_i``: sum of squared distances over ordered pairs of repeats,

which give the Fréchet variance, the within-subject variability, the
asymptotic variances of both, and their cross-covariance.  Group-level
reductions use ``math.fsum`` so subject order cannot perturb results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum, sqrt

from .cache import DistanceCache


@dataclass
class GroupSummary:
    name: str
    frechet_mean: object
    frechet_variance: float          # mean squared distance to the group mean
    within_variability: float | None  # mean squared distance between repeats
    variance_avar: float             # asymptotic variance of sqrt(N_j) * V-hat
    within_avar: float | None        # asymptotic variance of sqrt(N_j) * rho-hat
    cross_cov: float | None          # V-hat / rho-hat asymptotic cross-covariance
    cross_corr: float | None         # the correlation above, clamped to [-1, 1]
    n_observations: int
    n_subjects: int
    weight: float                    # N_j / N
    flags: list = field(default_factory=list)


@dataclass
class DatasetSummary:
    groups: list
    pooled_mean: object
    pooled_variance: float
    n_observations: int


def _group_reductions(cache: DistanceCache, g: int):
    gi = cache.group_index[g]
    mean_pt = cache.mean_point(g)
    d2 = cache.d2_to_point(mean_pt, gi.obs_lo, gi.obs_hi)
    T = cache.subject_sums(d2, gi.subj_lo, gi.subj_hi, gi.obs_lo)
    S = cache.within_sums(g)
    r = cache.subject_counts[gi.subj_lo:gi.subj_hi].astype(float)
    return mean_pt, T, S, r


def _variance(T, nj) -> float:
    return fsum(T) / nj


def _sigma2(T, r, nj, v) -> float:
    return fsum(T * T) / nj - fsum(r * r) / nj * v * v


def _rho(S, pairs) -> float:
    return fsum(S) / pairs


def _gamma2(S, r, nj, pairs, rho) -> float:
    return (nj * fsum(S * S)
            - nj * fsum(r * r * (r - 1.0) ** 2) * rho * rho) / (pairs * pairs)


def _cross_cov(T, S, r, v, rho, pairs) -> float:
    return (fsum(T * S) - fsum(r * r * (r - 1.0)) * v * rho) / pairs


def group_frechet_variance(cache: DistanceCache, g: int):
    """Group Fréchet mean and variance ``(mean, V_hat)``."""
    mean_pt, T, _, r = _group_reductions(cache, g)
    return cache.mean_object(mean_pt), _variance(T, r.sum())


def within_subject_variability(cache: DistanceCache, g: int):
    """Mean squared distance between ordered pairs of a subject's repeats;
    None when every subject has a single repeat."""
    _, _, S, r = _group_reductions(cache, g)
    pairs = fsum(r * (r - 1.0))
    if pairs == 0:
        return None
    return _rho(S, pairs)


def sigma2_hat(cache: DistanceCache, g: int) -> float:
    """Asymptotic variance estimate for ``sqrt(N_j) * V_hat`` (may be
    negative in degenerate data; callers clamp)."""
    _, T, _, r = _group_reductions(cache, g)
    nj = r.sum()
    return _sigma2(T, r, nj, _variance(T, nj))


def gamma2_hat(cache: DistanceCache, g: int):
    """Asymptotic variance estimate for ``sqrt(N_j) * rho_hat``; None when
    no subject has a repeated pair."""
    _, _, S, r = _group_reductions(cache, g)
    nj = r.sum()
    pairs = fsum(r * r) - nj
    if pairs <= 0:
        return None
    return _gamma2(S, r, nj, pairs, _rho(S, pairs))


def xi_hat(cache: DistanceCache, g: int):
    """Clamped cross-correlation between the variance and within-variability
    estimators; None when either asymptotic variance vanishes."""
    return group_summary(cache, g).cross_corr


def pooled_variance(cache: DistanceCache):
    """Fréchet mean and variance of the pooled observations."""
    mean_pt = cache.mean_point(None)
    d2 = cache.d2_to_point(mean_pt, 0, cache.n_obs)
    per_subject = cache.subject_sums(d2, 0, cache.n_subjects, 0)
    return cache.mean_object(mean_pt), fsum(per_subject) / cache.n_obs


def group_summary(cache: DistanceCache, g: int) -> GroupSummary:
    mean_pt, T, S, r = _group_reductions(cache, g)
    nj = r.sum()
    flags = []

    v = _variance(T, nj)
    sig2 = _sigma2(T, r, nj, v)
    if sig2 < 0:
        flags.append("variance_avar_clamped")
        sig2 = 0.0
    if sig2 == 0.0:
        flags.append("variance_avar_zero")

    pairs = fsum(r * r) - nj
    rho = gam2 = cross = corr = None
    if pairs > 0:
        rho = _rho(S, pairs)
        gam2 = _gamma2(S, r, nj, pairs, rho)
        if gam2 < 0:
            flags.append("within_avar_clamped")
            gam2 = 0.0
        if gam2 == 0.0:
            flags.append("within_avar_zero")
        cross = _cross_cov(T, S, r, v, rho, pairs)
        if sig2 > 0 and gam2 > 0:
            corr = cross / sqrt(sig2 * gam2)
            if abs(corr) >= 1.0:
                flags.append("cross_corr_clamped")
                corr = max(-1.0, min(1.0, corr))

    return GroupSummary(
        name=cache.dataset.groups[g].name,
        frechet_mean=cache.mean_object(mean_pt),
        frechet_variance=v,
        within_variability=rho,
        variance_avar=sig2,
        within_avar=gam2,
        cross_cov=cross,
        cross_corr=corr,
        n_observations=int(nj),
        n_subjects=len(r),
        weight=float(nj),  # rescaled to N_j / N in summarize()
        flags=flags,
    )


def summarize(dataset, cache: DistanceCache | None = None) -> DatasetSummary:
    """All group summaries plus the pooled mean and variance."""
    if cache is None:
        cache = DistanceCache(dataset)
    groups = [group_summary(cache, g) for g in range(dataset.n_groups)]
    n = cache.n_obs
    for s in groups:
        s.weight = s.n_observations / n
    pooled_mean, pooled_var = pooled_variance(cache)
    return DatasetSummary(
        groups=groups,
        pooled_mean=pooled_mean,
        pooled_variance=pooled_var,
        n_observations=n,
    )
