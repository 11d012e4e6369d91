"""Test assembly: components, null calibration, and the decision.

The statistic adds three dimensionless terms built from the group
summaries: a location term (squared gap between the pooled variance and the
weighted group variances), a scale term (pairwise variance contrasts), and
a within-subject term (pairwise within-variability contrasts).  Its null
law is a weighted sum of chi-squared(1) variables whose weights are the
positive eigenvalues of a 2k x 2k matrix assembled from two projections and
the estimated cross-correlations.

Degenerate variance estimates (clamped to zero by the estimators) are
handled by continuity: each scaled term and each projection has a finite
limit as a single group's variance estimate tends to zero, and those limits
are used, with a diagnostic.  Two or more degenerate groups in the same
family either diverge (their moments differ: the p-value is zero in the
limit) or leave the statistic genuinely undefined (an error).

In the reduced ("no-within") mode only the location and scale terms are
kept and the calibration collapses to chi-squared(k-1): the plug-in
projection has exactly k-1 unit eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import fsum

import numpy as np

from . import wchisq
from .cache import DistanceCache
from .errors import CalibrationError, DomainError, NumericError
from .estimators import DatasetSummary, summarize

# Relative threshold below which an eigenvalue counts as zero.
EIGEN_TOL = 1e-8


@dataclass
class TestComponents:
    variance_excess: float           # pooled variance minus weighted group variances
    scale_contrast: float            # weighted pairwise (V_j - V_l)^2
    within_contrast: float | None    # weighted pairwise (rho_j - rho_l)^2
    location_term: float
    scale_term: float
    within_term: float | None
    statistic: float


@dataclass
class NullCalibration:
    eigenvalues: np.ndarray
    method: str                      # "quadrature", "monte-carlo", "degenerate-limit"
    matrix: np.ndarray | None = None


@dataclass
class TestResult:
    components: TestComponents
    calibration: NullCalibration
    p_value: float
    alpha: float
    reject: bool
    critical_value: float | None
    group_summaries: list
    diagnostics: list = field(default_factory=list)
    n_observations: int = 0
    mode: str = "full"


def _diag(code: str, message: str, group: str | None = None) -> dict:
    d = {"code": code, "message": message}
    if group is not None:
        d["group"] = group
    return d


def _degenerate_family(values, avars, names, label: str):
    """Classify a variance family: returns the degenerate index set, raising
    when the statistic is undefined, and reporting true divergence.

    ``values`` are the moment estimates (variances or within-variabilities),
    ``avars`` their estimated asymptotic variances (zero = degenerate).
    """
    zero = [j for j, a in enumerate(avars) if a <= 0]
    if len(zero) <= 1:
        return zero, False
    moments = [values[j] for j in zero]
    if max(moments) > min(moments):
        return zero, True   # contrast between two infinitely-precise groups
    raise CalibrationError(
        f"groups {[names[j] for j in zero]}: the {label} estimators are all "
        "degenerate with equal moments; the test statistic is undefined"
    )


def _contrast_term(values, avars, lam, n, zero):
    """The scaled pairwise-contrast term, using the continuity limit when
    one group's asymptotic variance vanished."""
    k = len(values)
    if not zero:
        raw = fsum(
            lam[j] * lam[l] / (avars[j] * avars[l]) * (values[j] - values[l]) ** 2
            for j in range(k) for l in range(j + 1, k)
        )
        return raw, n * raw / fsum(l / a for l, a in zip(lam, avars))
    j = zero[0]
    term = n * fsum(lam[l] * (values[j] - values[l]) ** 2 / avars[l]
                    for l in range(k) if l != j)
    # The raw contrast diverges with the vanishing variance; report the
    # finite part over the healthy pairs.
    raw = fsum(
        lam[a] * lam[b] / (avars[a] * avars[b]) * (values[a] - values[b]) ** 2
        for a in range(k) for b in range(a + 1, k) if a != j and b != j
    )
    return raw, term


def compute_components(summaries, pooled_variance: float, n_observations: int,
                       within: bool = True) -> TestComponents:
    """Assemble the raw statistics and their scaled terms.

    Groups whose variance estimates clamped to zero are handled by the
    continuity limits described in the module docstring; a diverging
    configuration yields infinite terms (the caller maps this to p = 0).
    """
    k = len(summaries)
    if k < 2:
        raise DomainError("the test needs at least two groups")
    names = [s.name for s in summaries]
    lam = [s.weight for s in summaries]
    v = [s.frechet_variance for s in summaries]
    sig2 = [s.variance_avar for s in summaries]
    n = n_observations

    if within:
        for s in summaries:
            if s.within_variability is None:
                raise CalibrationError(
                    f"group '{s.name}': within-subject variability is "
                    "undefined; each group needs at least one subject with "
                    "r_i >= 2 (run the reduced no-within test to compare "
                    "location and scale only)"
                )

    zero_sig, diverge_sig = _degenerate_family(v, sig2, names, "variance")
    if all(a <= 0 for a in sig2):
        raise CalibrationError(
            "every group has a degenerate variance estimator; the test "
            "statistic is undefined"
        )

    excess = pooled_variance - fsum(l * x for l, x in zip(lam, v))
    loc_term = n * excess ** 2 / fsum(l * l * s for l, s in zip(lam, sig2))
    if diverge_sig:
        scale_raw, scale_term = math.inf, math.inf
    else:
        scale_raw, scale_term = _contrast_term(v, sig2, lam, n, zero_sig)

    if not within:
        return TestComponents(excess, scale_raw, None, loc_term, scale_term,
                              None, fsum((loc_term, scale_term)))

    rho = [s.within_variability for s in summaries]
    gam2 = [s.within_avar for s in summaries]
    zero_gam, diverge_gam = _degenerate_family(rho, gam2, names,
                                               "within-subject variance")
    if all(a <= 0 for a in gam2):
        raise CalibrationError(
            "every group has a degenerate within-subject variance estimator; "
            "the test statistic is undefined"
        )
    if diverge_gam:
        within_raw, within_term = math.inf, math.inf
    else:
        within_raw, within_term = _contrast_term(rho, gam2, lam, n, zero_gam)

    return TestComponents(excess, scale_raw, within_raw, loc_term, scale_term,
                          within_term,
                          fsum((loc_term, scale_term, within_term)))


def _projection(s: np.ndarray) -> np.ndarray:
    return np.eye(len(s)) - np.outer(s, s) / (s @ s)


def _family_projection(lam: np.ndarray, avars: np.ndarray) -> np.ndarray:
    """Plug-in projection for one family; the limit ``I - e_j e_j^T`` when
    group j's variance estimate vanished."""
    zero = np.flatnonzero(avars <= 0)
    if zero.size == 0:
        return _projection(np.sqrt(lam) / np.sqrt(avars))
    if zero.size > 1:
        raise CalibrationError(
            "multiple degenerate groups leave the calibration undefined"
        )
    out = np.eye(len(lam))
    out[zero[0], zero[0]] = 0.0
    return out


def limiting_matrix(summaries) -> np.ndarray:
    """The 2k x 2k matrix whose positive eigenvalues weight the null law,
    with sample plug-ins for the weights, variances, and correlations."""
    for s in summaries:
        if s.within_avar is None:
            raise CalibrationError(
                f"group '{s.name}': no within-subject information; the full "
                "calibration is unavailable"
            )
    lam = np.array([s.weight for s in summaries])
    sig2 = np.array([s.variance_avar for s in summaries])
    gam2 = np.array([s.within_avar for s in summaries])
    # A degenerate coordinate is annihilated by its projection, so its
    # (undefined) correlation never enters; zero is the consistent plug-in.
    xi = np.array([s.cross_corr if s.cross_corr is not None else 0.0
                   for s in summaries])
    a = _family_projection(lam, sig2)
    b = _family_projection(lam, gam2)
    coupling = a @ np.diag(xi) @ b
    return np.block([[a, coupling], [coupling.T, b]])


def positive_eigenvalues(matrix: np.ndarray, max_count: int | None = None):
    """Positive eigenvalues of a symmetric matrix, sorted descending.

    Values below ``EIGEN_TOL * max(1, largest)`` count as zero.  If more
    than ``max_count`` survive, the largest are kept and a diagnostic is
    returned alongside.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError("eigenvalues need a square matrix")
    if np.abs(matrix - matrix.T).max() > 1e-10 * max(1.0, np.abs(matrix).max()):
        raise DomainError("matrix is not symmetric")
    try:
        ev = np.linalg.eigvalsh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue decomposition failed: {exc}") from exc
    tol = EIGEN_TOL * max(1.0, float(ev[-1]))
    keep = np.sort(ev[ev > tol])[::-1]
    diagnostics = []
    if max_count is not None and keep.size > max_count:
        diagnostics.append(_diag(
            "eigen_truncated",
            f"{keep.size} eigenvalues above threshold; keeping the largest "
            f"{max_count}",
        ))
        keep = keep[:max_count]
    return keep, diagnostics


def _canonical_eigenvalues(summaries, k: int):
    """Eigenvalues computed in a canonical group order, so reordering the
    dataset's groups cannot perturb them."""
    order = sorted(
        range(k),
        key=lambda j: (summaries[j].weight, summaries[j].variance_avar,
                       summaries[j].within_avar,
                       summaries[j].cross_corr
                       if summaries[j].cross_corr is not None else 0.0),
    )
    matrix = limiting_matrix([summaries[j] for j in order])
    return positive_eigenvalues(matrix, max_count=2 * k - 2)


def run_test(dataset, alpha: float = 0.05, within: bool = True,
             pvalue_method: str = "quadrature", mc_draws: int = 10 ** 6,
             seed: int = 0, compute_quantile: bool = True,
             cache: DistanceCache | None = None,
             summary: DatasetSummary | None = None) -> TestResult:
    """Run the full (or reduced) test on a dataset at level ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must be in (0, 1)")
    if summary is None:
        summary = summarize(dataset, cache)
    summaries = summary.groups
    k = len(summaries)
    n = summary.n_observations

    diagnostics = []
    for s in summaries:
        for flag in s.flags:
            diagnostics.append(_diag(flag, f"group '{s.name}': {flag}",
                                     group=s.name))

    components = compute_components(summaries, summary.pooled_variance, n,
                                    within=within)
    mode = "full" if within else "no-within"

    if math.isinf(components.statistic):
        diagnostics.append(_diag(
            "degenerate_divergence",
            "two or more groups have degenerate variance estimators with "
            "differing moments; the statistic diverges and the p-value is 0 "
            "in the limit",
        ))
        calibration = NullCalibration(eigenvalues=np.array([]),
                                      method="degenerate-limit")
        return TestResult(components, calibration, 0.0, alpha, True, None,
                          summaries, diagnostics, n, mode)

    degenerate = [s.name for s in summaries
                  if s.variance_avar <= 0
                  or (within and s.within_avar is not None and s.within_avar <= 0)]
    if degenerate:
        diagnostics.append(_diag(
            "degenerate_limit",
            f"groups {degenerate} have degenerate variance estimators; the "
            "statistic and calibration use their zero-variance limits",
        ))

    if within:
        phis, eig_diags = _canonical_eigenvalues(summaries, k)
        diagnostics.extend(eig_diags)
        matrix = limiting_matrix(summaries)
    else:
        # The plug-in projection has exactly k-1 unit eigenvalues.
        phis = np.ones(k - 1)
        matrix = None

    sf = wchisq.survival_function(components.statistic, phis,
                                  method=pvalue_method, mc_draws=mc_draws,
                                  seed=seed)
    if pvalue_method == "quadrature" and sf.method == "monte-carlo":
        diagnostics.append(_diag(
            "pvalue_fallback",
            "quadrature did not converge; Monte Carlo fallback used",
        ))
    diagnostics.append(_diag("pvalue_method", f"p-value via {sf.method}"))

    critical = None
    if compute_quantile:
        critical = wchisq.quantile(alpha, phis, method=pvalue_method,
                                   mc_draws=mc_draws, seed=seed)

    calibration = NullCalibration(eigenvalues=phis, method=sf.method,
                                  matrix=matrix)
    return TestResult(components, calibration, sf.value, alpha,
                      sf.value < alpha, critical, summaries, diagnostics, n,
                      mode)
