"""Synthetic data generators and the rejection-rate study harness.

Four object kinds are generated per subject with exchangeable
within-subject correlation ``iota``, subject-level mean ``beta`` with
spread ``eps``, and (for networks) ``tau`` perturbed edges:

- distributional: normal distributions truncated to [-10, 10], tabulated on
  the quantile grid; subject scale ``eta ~ U(1, 1.5)``.
- network: a preferential-attachment graph per subject (attachment weight
  ``(degree + 0.01)^(-2 eta)``); each repeat toggles ``tau`` uniformly
  chosen distinct node pairs; objects are graph Laplacians.
- vector: 5-dimensional Gaussian vectors.
- composite: all three, sharing ``eta`` between the distributional and
  network parts and ``a_i`` between the distributional and vector parts.

Every study replicate draws from an independent child of the master seed,
so results are reproducible bit-for-bit and independent of scheduling.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri

from .baselines import af_test
from .dataset import Dataset, Group, Subject
from .errors import DomainError
from .inference import run_test
from .spaces import (CompositeObject, EuclideanVector, GraphLaplacian,
                     QuantileDistribution)

logger = logging.getLogger(__name__)

KINDS = ("distributional", "network", "vector", "composite")
TESTS = ("qn", "af")

_VEC_DIM = 5
_SUPPORT = (-10.0, 10.0)


@dataclass(frozen=True)
class GroupSpec:
    """Generation parameters for one group."""

    size: int
    r_spec: Union[int, str] = 2     # fixed repeats, or "mixed" for U{1,2,3}
    iota: float = 0.5
    beta: float = 1.0
    eps: float = 1.0
    tau: int = 3

    def __post_init__(self):
        if self.size < 1:
            raise DomainError("group size must be >= 1")
        if isinstance(self.r_spec, str):
            if self.r_spec != "mixed":
                raise DomainError("r_spec must be a positive integer or 'mixed'")
        elif self.r_spec < 1:
            raise DomainError("r_spec must be >= 1")
        if not 0.0 <= self.iota <= 1.0:
            raise DomainError("iota must lie in [0, 1]")
        if self.eps < 0.0:
            raise DomainError("eps must be >= 0")
        if self.tau < 0:
            raise DomainError("tau must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    group1: GroupSpec
    group2: GroupSpec
    alpha: float = 0.05
    replicates: int = 500
    seed: int = 0
    grid_size: int = 1000
    nodes: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown scenario kind '{self.kind}'")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must be in (0, 1)")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.grid_size < 2:
            raise DomainError("grid_size must be >= 2")
        if self.nodes < 3:
            raise DomainError("node count must be >= 3")
        max_tau = self.nodes * (self.nodes - 1) // 2
        for spec in (self.group1, self.group2):
            if spec.tau > max_tau:
                raise DomainError(
                    f"tau={spec.tau} exceeds the {max_tau} node pairs of a "
                    f"{self.nodes}-node graph"
                )


@dataclass
class StudyReport:
    config: ScenarioConfig
    tests: tuple
    p_values: dict
    rejections: dict
    rates: dict
    standard_errors: dict
    runtime: float
    redraws: int = 0


# ---------------------------------------------------------------------------
# Latent draws (exposed for the moment-checking tests)
# ---------------------------------------------------------------------------


def draw_repeat_counts(rng, spec: GroupSpec):
    """Per-subject repeat counts; 'mixed' draws U{1,2,3} and redraws the
    whole group while no subject has a repeated pair."""
    if spec.r_spec != "mixed":
        return np.full(spec.size, int(spec.r_spec), dtype=np.int64), 0
    redraws = 0
    r = rng.integers(1, 4, size=spec.size)
    while not np.any(r >= 2):
        redraws += 1
        r = rng.integers(1, 4, size=spec.size)
    if redraws:
        logger.info("redrew repeat counts %d time(s) to obtain a repeated pair",
                    redraws)
    return r.astype(np.int64), redraws


def draw_theta(rng, r: int, iota: float, beta: float, eps: float):
    """Subject mean ``a`` and exchangeable repeat means ``theta`` (length r)."""
    a = beta + eps * rng.standard_normal()
    z = rng.standard_normal()
    w = rng.standard_normal(r)
    theta = a + math.sqrt(iota) * z + math.sqrt(1.0 - iota) * w
    return a, theta


def draw_vectors(rng, r: int, iota: float, a: float):
    """Exchangeable 5-dimensional repeats around a common subject mean."""
    z = rng.standard_normal(_VEC_DIM)
    w = rng.standard_normal((r, _VEC_DIM))
    return a + math.sqrt(iota) * z + math.sqrt(1.0 - iota) * w


def truncated_normal_quantiles(theta, eta: float, grid_size: int):
    """Quantile arrays of Normal(theta_l, eta^2) truncated to [-10, 10],
    one row per repeat, evaluated at the grid midpoints."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t = (np.arange(grid_size) + 0.5) / grid_size
    lo = ndtr((_SUPPORT[0] - theta) / eta)
    hi = ndtr((_SUPPORT[1] - theta) / eta)
    probs = lo[:, None] + t[None, :] * (hi - lo)[:, None]
    vals = theta[:, None] + eta * ndtri(probs)
    np.clip(vals, _SUPPORT[0], _SUPPORT[1], out=vals)
    return np.maximum.accumulate(vals, axis=1)


def grow_attachment_graph(rng, nodes: int, eta: float):
    """Adjacency matrix grown one node and one edge at a time from a seed
    edge, attaching to an existing node with weight
    ``(degree + 0.01)^(-2 eta)``."""
    adj = np.zeros((nodes, nodes))
    adj[0, 1] = adj[1, 0] = 1.0
    for v in range(2, nodes):
        deg = adj[:v, :v].sum(axis=1)
        weights = (deg + 0.01) ** (-2.0 * eta)
        target = rng.choice(v, p=weights / weights.sum())
        adj[v, target] = adj[target, v] = 1.0
    return adj


def toggle_edges(rng, adj, tau: int):
    """Flip the presence of ``tau`` distinct uniformly chosen node pairs."""
    nodes = adj.shape[0]
    out = adj.copy()
    if tau == 0:
        return out
    ii, jj = np.triu_indices(nodes, k=1)
    pick = rng.choice(ii.size, size=tau, replace=False)
    for t in pick:
        a, b = ii[t], jj[t]
        out[a, b] = out[b, a] = 1.0 - out[a, b]
    return out


def _laplacian(adj) -> GraphLaplacian:
    return GraphLaplacian(np.diag(adj.sum(axis=1)) - adj)


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


def _gen_group(cfg: ScenarioConfig, spec: GroupSpec, name: str, rng):
    r_all, redraws = draw_repeat_counts(rng, spec)
    subjects = []
    for i, r in enumerate(r_all):
        r = int(r)
        if cfg.kind == "distributional":
            eta = rng.uniform(1.0, 1.5)
            _, theta = draw_theta(rng, r, spec.iota, spec.beta, spec.eps)
            rows = truncated_normal_quantiles(theta, eta, cfg.grid_size)
            obs = [QuantileDistribution(row) for row in rows]
        elif cfg.kind == "network":
            eta = rng.uniform(1.0, 1.5)
            base = grow_attachment_graph(rng, cfg.nodes, eta)
            obs = [_laplacian(toggle_edges(rng, base, spec.tau))
                   for _ in range(r)]
        elif cfg.kind == "vector":
            a = spec.beta + spec.eps * rng.standard_normal()
            rows = draw_vectors(rng, r, spec.iota, a)
            obs = [EuclideanVector(row) for row in rows]
        else:  # composite
            eta = rng.uniform(1.0, 1.5)
            a, theta = draw_theta(rng, r, spec.iota, spec.beta, spec.eps)
            dist_rows = truncated_normal_quantiles(theta, eta, cfg.grid_size)
            base = grow_attachment_graph(rng, cfg.nodes, eta)
            laps = [_laplacian(toggle_edges(rng, base, spec.tau))
                    for _ in range(r)]
            vec_rows = draw_vectors(rng, r, spec.iota, a)
            obs = [CompositeObject((QuantileDistribution(dist_rows[l]),
                                    laps[l], EuclideanVector(vec_rows[l])))
                   for l in range(r)]
        subjects.append(Subject(f"{name}-s{i + 1}", obs))
    return Group(name, subjects), redraws


def _generate(cfg: ScenarioConfig, rng):
    g1, rd1 = _gen_group(cfg, cfg.group1, "group1", rng)
    g2, rd2 = _gen_group(cfg, cfg.group2, "group2", rng)
    support = _SUPPORT if cfg.kind == "distributional" else None
    return Dataset([g1, g2], support=support), rd1 + rd2


def generate_dataset(cfg: ScenarioConfig, rng) -> Dataset:
    """One synthetic dataset with both groups drawn from ``rng``."""
    return _generate(cfg, rng)[0]


def replicate_rng(seed: int, index: int, total: int):
    """The generator a given study replicate uses (for reproducing one
    replicate outside the harness)."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(total)[index])


# ---------------------------------------------------------------------------
# Study harness
# ---------------------------------------------------------------------------


def _run_replicate(args):
    cfg, child, tests = args
    rng = np.random.default_rng(child)
    dataset, redraws = _generate(cfg, rng)
    out = {}
    for test in tests:
        if test == "qn":
            res = run_test(dataset, alpha=cfg.alpha, compute_quantile=False)
        elif test == "af":
            res = af_test(dataset, alpha=cfg.alpha, compute_quantile=False)
        else:
            raise DomainError(f"unknown test '{test}'")
        out[test] = res.p_value
    return out, redraws


def run_study(cfg: ScenarioConfig, tests=("qn",), threads: int = 1) -> StudyReport:
    """Monte Carlo rejection rates over independent replicates.

    Replicate ``b`` uses the ``b``-th child of the master seed, so reruns
    reproduce every p-value bit-for-bit regardless of ``threads``.
    """
    for test in tests:
        if test not in TESTS:
            raise DomainError(f"unknown test '{test}'")
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
    jobs = [(cfg, child, tests) for child in children]
    start = time.perf_counter()
    results = [None] * cfg.replicates
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for b, res in enumerate(pool.map(_run_replicate, jobs,
                                             chunksize=8)):
                results[b] = res
    else:
        for b, job in enumerate(jobs):
            try:
                results[b] = _run_replicate(job)
            except Exception as exc:
                raise type(exc)(f"replicate {b}: {exc}") from exc
    runtime = time.perf_counter() - start

    p_values = {t: [res[0][t] for res in results] for t in tests}
    redraws = sum(res[1] for res in results)
    rejections, rates, ses = {}, {}, {}
    for t in tests:
        rej = sum(1 for p in p_values[t] if p < cfg.alpha)
        rate = rej / cfg.replicates
        rejections[t] = rej
        rates[t] = rate
        ses[t] = math.sqrt(rate * (1.0 - rate) / cfg.replicates)
    return StudyReport(cfg, tuple(tests), p_values, rejections, rates, ses,
                       runtime, redraws)


def varied_parameter(cfg: ScenarioConfig):
    """Name and group-2 value of the parameter that differs between the
    groups (the sweep label in study reports); ('null', '') when none do."""
    for name in ("r_spec", "iota", "beta", "eps", "tau", "size"):
        a, b = getattr(cfg.group1, name), getattr(cfg.group2, name)
        if a != b:
            label = "r" if name == "r_spec" else name
            return label, str(b)
    return "null", ""
