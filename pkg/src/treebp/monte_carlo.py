"""Monte Carlo engine for surveyed broadcast trees.

Samples trees with spins and per-node surveys level by level, then runs the
exact belief-propagation recursion upward under a chosen leaf boundary
condition.  Depths 0..k-1 carry surveys (the root's controlled by a flag);
depth-k leaves carry only the boundary, matching the density evolution
convention so the two engines are directly comparable.  Root LLRs are
saturated at +-LLR_MAX nats, mirroring the evolution grid range.

Estimators are chunked: each chunk of samples draws from an RNG stream
derived from the master seed and the chunk index, and chunk results are
reduced in order, so outputs are bit-identical for any worker count.

The batched sampler never materializes leaf spins: a leaf block's
contribution to its parent reduces to the net spin sum, a binomial draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ._parallel import parallel_chunk_map
from .bms import SurveySpec, binary_entropy, delta_of, is_trivial_survey
from .density_evolution import TreeModel
from .llr_dist import edge_llr_map

__all__ = [
    "LLR_MAX",
    "BoundaryCondition",
    "EstimatorResult",
    "PairedEntropyEstimate",
    "SampledTree",
    "DegradationBin",
    "DegradationReport",
    "MajorityReport",
    "WSMReport",
    "sample_tree",
    "bp_upward",
    "estimate_entropy",
    "estimate_entropy_pair",
    "degradation_check",
    "majority_stats",
    "majority_closed_forms",
    "wsm_probe",
]

LLR_MAX = 30.0

# Trees per chunk: bounded work set independent of worker count.
_CHUNK_NODE_BUDGET = 4_000_000
_CHUNK_TREE_CAP = 4096


@dataclass(frozen=True)
class BoundaryCondition:
    """Leaf-level initialization for the upward recursion.

    kinds: "perfect" (leaf spin revealed, LLR = spin * infinity), "none"
    (LLR 0), "plus"/"minus" (constant +-value regardless of spins), and
    "custom" (explicit per-leaf LLR assignment; single-tree runs only).
    """

    kind: str
    value: float = 0.0
    assignment: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("perfect", "none", "plus", "minus", "custom"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind in ("plus", "minus") and not self.value > 0.0:
            raise ValueError("constant boundary magnitude must be positive")
        if self.kind == "custom" and self.assignment is None:
            raise ValueError("custom boundary needs an assignment")

    @classmethod
    def perfect(cls) -> "BoundaryCondition":
        return cls("perfect")

    @classmethod
    def none(cls) -> "BoundaryCondition":
        return cls("none")

    @classmethod
    def plus(cls, value: float = LLR_MAX) -> "BoundaryCondition":
        return cls("plus", float(value))

    @classmethod
    def minus(cls, value: float = LLR_MAX) -> "BoundaryCondition":
        return cls("minus", float(value))

    @classmethod
    def custom(cls, assignment) -> "BoundaryCondition":
        return cls("custom", 0.0, tuple(float(x) for x in assignment))

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        body = text.strip().lower()
        if body == "perfect":
            return cls.perfect()
        if body == "none":
            return cls.none()
        if body.startswith("plus:"):
            return cls.plus(float(body[5:]))
        if body.startswith("minus:"):
            return cls.minus(float(body[6:]))
        if body == "plus":
            return cls.plus()
        if body == "minus":
            return cls.minus()
        raise ValueError(f"cannot parse boundary condition {text!r}")

    def describe(self) -> str:
        if self.kind in ("plus", "minus"):
            return f"{self.kind}:{self.value:g}"
        return self.kind


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    stderr: float
    n_samples: int
    seed: int

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "n_samples": self.n_samples, "seed": self.seed}


@dataclass(frozen=True)
class PairedEntropyEstimate:
    """Root entropy with and without leaf observations, coupled sample-wise.

    diff estimates E[H_noleaves - H_leaves] on the shared realizations; its
    stderr reflects the pairing and is the right scale for ordering checks.
    """

    leaves: EstimatorResult
    no_leaves: EstimatorResult
    diff: EstimatorResult

    def as_dict(self) -> dict:
        return {"leaves": self.leaves.as_dict(), "no_leaves": self.no_leaves.as_dict(),
                "diff": self.diff.as_dict()}


def _mean_result(values: np.ndarray, seed: int) -> EstimatorResult:
    n = values.size
    if float(values.min()) == float(values.max()):
        return EstimatorResult(float(values[0]), 0.0, n, seed)
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return EstimatorResult(float(np.mean(values)), sd / math.sqrt(n), n, seed)


def _nodes_per_tree(model: TreeModel, depth: int) -> int:
    d = model.d
    if d == 1.0:
        return depth + 1
    return int((d ** (depth + 1) - 1) / (d - 1)) + 1


def _chunk_trees(model: TreeModel, depth: int) -> int:
    return max(1, min(_CHUNK_TREE_CAP, _CHUNK_NODE_BUDGET // _nodes_per_tree(model, depth)))


def _edge_map_fast(r: np.ndarray, theta: float) -> np.ndarray:
    """edge_llr_map for bounded float arrays, arranged as one exp + one log."""
    a, b = 1.0 + theta, 1.0 - theta
    u = np.exp(r)
    num = u * a
    num += b
    u *= b
    u += a
    np.divide(num, u, out=num)
    return np.log(num, out=num)


def _rademacher(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, n, dtype=np.int8).astype(np.float64) * 2.0 - 1.0


class _SurveySampler:
    """Draws survey LLRs W = spin * mag * (+-1), one uniform per node.

    The magnitude and the flip come from the same uniform: the component is
    read off the weight partition, the flip from the component's leading
    delta-fraction of its segment.  Magnitudes clip at LLR_MAX.
    """

    def __init__(self, survey: SurveySpec):
        dist = delta_of(survey)
        self.deltas = np.asarray(dist.deltas, dtype=float)
        w = np.asarray(dist.weights, dtype=float)
        with np.errstate(divide="ignore"):
            mags = np.log1p(-self.deltas) - np.log(self.deltas)
        self.mags = np.minimum(mags, LLR_MAX)
        self.cum = np.cumsum(w)
        self.cum[-1] = 1.0
        low = self.cum - w
        self.flip_cut = low + self.deltas * w
        self.n_atoms = self.deltas.size
        # Pure erasure: one zero-magnitude atom plus one noiseless atom.
        self.erasure_like = (self.n_atoms == 2 and self.deltas[0] == 0.5
                             and self.deltas[1] == 0.0)

    def draw(self, rng: np.random.Generator, spins: np.ndarray) -> np.ndarray:
        u = rng.random(spins.size)
        if self.erasure_like:
            reveal = (u >= self.cum[0]).astype(np.float64)
            reveal *= self.mags[1]
            reveal *= spins
            return reveal
        if self.n_atoms == 1:
            sign = 1.0 - 2.0 * (u < self.flip_cut[0])
            return spins * (self.mags[0] * sign)
        if self.n_atoms == 2:
            upper = u >= self.cum[0]
            mag = np.where(upper, self.mags[1], self.mags[0])
            cut = np.where(upper, self.flip_cut[1], self.flip_cut[0])
            return spins * (mag * (1.0 - 2.0 * (u < cut)))
        idx = np.searchsorted(self.cum, u, side="right")
        sign = 1.0 - 2.0 * (u < self.flip_cut[idx])
        return spins * (self.mags[idx] * sign)


@dataclass
class SampledTree:
    """One realized broadcast tree, stored level by level.

    spins[j] holds the +-1 spins of depth-j nodes, parents[j] the index of
    each depth-j node's parent within depth j-1 (parents[0] is None), and
    survey_llr[j] the survey observations for j < depth (None at the leaf
    level, which carries only the boundary).
    """

    model: TreeModel
    survey: SurveySpec
    depth: int
    seed: int
    spins: list[np.ndarray]
    parents: list[np.ndarray | None]
    survey_llr: list[np.ndarray | None]

    @property
    def level_sizes(self) -> list[int]:
        return [int(s.size) for s in self.spins]

    @property
    def n_nodes(self) -> int:
        return sum(self.level_sizes)


def sample_tree(model: TreeModel, depth: int, survey: SurveySpec, seed: int = 0) -> SampledTree:
    """Realize one tree to the given depth with spins and surveys."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sampler = None if is_trivial_survey(survey) else _SurveySampler(survey)
    flip = model.flip

    spins = [_rademacher(rng, 1)]
    parents: list[np.ndarray | None] = [None]
    for j in range(1, depth + 1):
        n_prev = spins[j - 1].size
        if model.kind == "regular":
            counts = np.full(n_prev, int(model.d), dtype=np.int64)
        else:
            counts = rng.poisson(model.d, n_prev)
        par = np.repeat(np.arange(n_prev), counts)
        flips = 1.0 - 2.0 * (rng.random(par.size) < flip)
        spins.append(spins[j - 1][par] * flips)
        parents.append(par)

    survey_llr: list[np.ndarray | None] = []
    for j in range(depth + 1):
        if j < depth and sampler is not None:
            survey_llr.append(sampler.draw(rng, spins[j]))
        elif j < depth:
            survey_llr.append(np.zeros(spins[j].size))
        else:
            survey_llr.append(None)
    return SampledTree(model, survey, depth, seed, spins, parents, survey_llr)


def bp_upward(tree: SampledTree, boundary: BoundaryCondition,
              include_root_survey: bool = True) -> float:
    """Exact leaf-to-root recursion on one sampled tree; returns root LLR.

    Running values are saturated at +-LLR_MAX per level.
    """
    k = tree.depth
    theta = tree.model.theta
    n_leaves = tree.spins[k].size
    if boundary.kind == "perfect":
        r = tree.spins[k] * math.inf
    elif boundary.kind == "none":
        r = np.zeros(n_leaves)
    elif boundary.kind == "plus":
        r = np.full(n_leaves, boundary.value)
    elif boundary.kind == "minus":
        r = np.full(n_leaves, -boundary.value)
    else:
        if len(boundary.assignment) != n_leaves:
            raise ValueError("custom boundary length does not match leaf count")
        r = np.array(boundary.assignment, dtype=float)

    if k == 0:
        return float(np.clip(r, -LLR_MAX, LLR_MAX)[0])
    for j in range(k - 1, -1, -1):
        msg = edge_llr_map(r, theta)
        r = np.bincount(tree.parents[j + 1], weights=msg, minlength=tree.spins[j].size)
        if j > 0 or include_root_survey:
            r = r + tree.survey_llr[j]
        np.clip(r, -LLR_MAX, LLR_MAX, out=r)
    return float(r[0])


# ---------------------------------------------------------------------------
# Batched chunk engine


@dataclass
class _ChunkLevels:
    """One chunk of trees, concatenated per level, leaves kept implicit.

    Levels run 0..depth-1.  parents[j] is None on regular levels, where a
    node's children are the contiguous block of d entries one level down.
    leaf_counts is None for regular trees (every block has d leaves); the
    leaf aggregates describe the depth-k blocks per depth-(k-1) parent.
    """

    sizes: list[int]
    spins: list[np.ndarray]
    parents: list[np.ndarray | None]
    surveys: list[np.ndarray | None]
    d_children: int | None
    leaf_counts: np.ndarray | None
    leaf_spin_sums: np.ndarray | None

    def n_leaves(self) -> float:
        if self.leaf_counts is not None:
            return float(self.leaf_counts.sum())
        return float(self.d_children * self.sizes[-1])


def _sample_chunk_levels(rng, model: TreeModel, survey: SurveySpec, depth: int,
                         n_trees: int, need_leaf_spin_sums: bool,
                         need_leaf_counts: bool) -> _ChunkLevels:
    sampler = None if is_trivial_survey(survey) else _SurveySampler(survey)
    flip = model.flip
    regular = model.kind == "regular"
    d_int = int(model.d) if regular else None

    spins = [_rademacher(rng, n_trees)]
    parents: list[np.ndarray | None] = [None]
    surveys: list[np.ndarray | None] = []
    if sampler is not None:
        surveys.append(sampler.draw(rng, spins[0]))
    else:
        surveys.append(None)
    for j in range(1, depth):
        n_prev = spins[j - 1].size
        if regular:
            par = None
            sp = np.repeat(spins[j - 1], d_int)
        else:
            counts = rng.poisson(model.d, n_prev)
            par = np.repeat(np.arange(n_prev), counts)
            sp = spins[j - 1][par]
        sp = sp * (1.0 - 2.0 * (rng.random(sp.size) < flip))
        spins.append(sp)
        parents.append(par)
        surveys.append(sampler.draw(rng, sp) if sampler is not None else None)

    leaf_counts = leaf_spin_sums = None
    if depth >= 1:
        n_parents = spins[depth - 1].size
        if not regular and (need_leaf_counts or need_leaf_spin_sums):
            leaf_counts = rng.poisson(model.d, n_parents)
        if need_leaf_spin_sums:
            if regular:
                flipped = rng.binomial(d_int, flip, size=n_parents)
                leaf_spin_sums = spins[depth - 1] * (d_int - 2.0 * flipped)
            else:
                flipped = rng.binomial(leaf_counts, flip)
                leaf_spin_sums = spins[depth - 1] * (leaf_counts - 2.0 * flipped)
    return _ChunkLevels([s.size for s in spins], spins, parents, surveys,
                        d_int, leaf_counts, leaf_spin_sums)


def _aggregate_children(msg: np.ndarray, levels: _ChunkLevels, j: int) -> np.ndarray:
    """Sum child messages at level j+1 onto their level-j parents."""
    par = levels.parents[j + 1]
    if par is None:
        return msg.reshape(-1, levels.d_children).sum(axis=1)
    return np.bincount(par, weights=msg, minlength=levels.sizes[j])


def _upward_from_base(base: np.ndarray, levels: _ChunkLevels, theta: float,
                      include_root_survey: bool) -> np.ndarray:
    """Upward pass from the depth-(k-1) pre-survey values to the root."""
    k = len(levels.sizes)
    surveys = levels.surveys
    if surveys[k - 1] is not None and (k - 1 > 0 or include_root_survey):
        r = base + surveys[k - 1]
    else:
        r = base.copy()
    np.clip(r, -LLR_MAX, LLR_MAX, out=r)
    for j in range(k - 2, -1, -1):
        msg = _edge_map_fast(r, theta)
        r = _aggregate_children(msg, levels, j)
        if surveys[j] is not None and (j > 0 or include_root_survey):
            r += surveys[j]
        np.clip(r, -LLR_MAX, LLR_MAX, out=r)
    return r


def _boundary_base(boundary: BoundaryCondition, levels: _ChunkLevels,
                   theta: float) -> np.ndarray:
    """Depth-(k-1) LLR contribution of the aggregated leaf blocks."""
    n = levels.sizes[-1]
    if boundary.kind == "perfect":
        sat = edge_llr_map(math.inf, theta)
        return sat * levels.leaf_spin_sums
    if boundary.kind == "none":
        return np.zeros(n)
    if boundary.kind in ("plus", "minus"):
        per_leaf = edge_llr_map(boundary.value, theta)
        if boundary.kind == "minus":
            per_leaf = -per_leaf
        if levels.leaf_counts is None:
            return np.full(n, per_leaf * levels.d_children)
        return per_leaf * levels.leaf_counts.astype(np.float64)
    raise ValueError("custom boundaries are only supported by bp_upward")


def _root_deltas_chunk(start, count, chunk_index, *, model, survey, depth, boundaries,
                       include_root_survey, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    if depth == 0:
        spins = _rademacher(rng, count)
        out = np.empty((len(boundaries), count))
        for i, boundary in enumerate(boundaries):
            if boundary.kind == "perfect":
                r = spins * LLR_MAX
            elif boundary.kind == "none":
                r = np.zeros(count)
            elif boundary.kind == "plus":
                r = np.full(count, min(boundary.value, LLR_MAX))
            elif boundary.kind == "minus":
                r = np.full(count, -min(boundary.value, LLR_MAX))
            else:
                raise ValueError("custom boundaries are only supported by bp_upward")
            out[i] = 1.0 / (1.0 + np.exp(np.abs(r)))
        return out

    need_sums = any(b.kind == "perfect" for b in boundaries)
    need_counts = need_sums or any(b.kind in ("plus", "minus") for b in boundaries)
    levels = _sample_chunk_levels(rng, model, survey, depth, count, need_sums, need_counts)
    out = np.empty((len(boundaries), count))
    for i, boundary in enumerate(boundaries):
        base = _boundary_base(boundary, levels, model.theta)
        r = _upward_from_base(base, levels, model.theta, include_root_survey)
        out[i] = 1.0 / (1.0 + np.exp(np.abs(r)))
    return out


def _collect_root_deltas(model, survey, depth, boundaries, n_samples, seed,
                         include_root_survey, workers) -> np.ndarray:
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    for boundary in boundaries:
        if boundary.kind == "custom":
            raise ValueError("custom boundaries are only supported by bp_upward")
    task = partial(_root_deltas_chunk, model=model, survey=survey, depth=depth,
                   boundaries=tuple(boundaries), include_root_survey=include_root_survey,
                   seed=seed)
    parts = parallel_chunk_map(task, n_samples, _chunk_trees(model, depth), workers)
    return np.concatenate(parts, axis=1)


def estimate_entropy(model: TreeModel, survey: SurveySpec, depth: int,
                     boundary: BoundaryCondition, n_samples: int, seed: int = 0,
                     include_root_survey: bool = True,
                     workers: int | None = None) -> EstimatorResult:
    """Root conditional entropy in nats under one boundary condition.

    Averages the binary entropy of the exact per-sample root posterior, so
    the estimate is unbiased with variance far below direct spin counting.
    """
    deltas = _collect_root_deltas(model, survey, depth, [boundary], n_samples, seed,
                                  include_root_survey, workers)
    return _mean_result(binary_entropy(deltas[0]), seed)


def estimate_entropy_pair(model: TreeModel, survey: SurveySpec, depth: int,
                          n_samples: int, seed: int = 0,
                          include_root_survey: bool = True,
                          workers: int | None = None) -> PairedEntropyEstimate:
    """Coupled perfect-leaves / no-leaves entropy estimates on shared trees."""
    deltas = _collect_root_deltas(
        model, survey, depth,
        [BoundaryCondition.perfect(), BoundaryCondition.none()],
        n_samples, seed, include_root_survey, workers)
    h_leaves = binary_entropy(deltas[0])
    h_none = binary_entropy(deltas[1])
    return PairedEntropyEstimate(
        leaves=_mean_result(h_leaves, seed),
        no_leaves=_mean_result(h_none, seed),
        diff=_mean_result(h_none - h_leaves, seed),
    )


@dataclass(frozen=True)
class DegradationBin:
    delta_tilde_center: float
    mean_delta: float
    stderr: float
    n: int
    flagged: bool

    def as_dict(self) -> dict:
        return {"delta_tilde_center": self.delta_tilde_center, "mean_delta": self.mean_delta,
                "stderr": self.stderr, "n": self.n, "flagged": self.flagged}


@dataclass
class DegradationReport:
    """Binned check of E[delta | delta_tilde] <= delta_tilde on coupled runs.

    Bins are delta_tilde quantiles (duplicates collapsed); a bin is flagged
    when its mean delta exceeds its mean delta_tilde by more than
    3 standard errors.  Bins with fewer than two samples are skipped.
    """

    bins: list[DegradationBin]
    n_flagged: int
    n_skipped: int
    n_samples: int
    seed: int

    @property
    def ok(self) -> bool:
        return self.n_flagged == 0

    def as_dict(self) -> dict:
        return {"bins": [b.as_dict() for b in self.bins], "n_flagged": self.n_flagged,
                "n_skipped": self.n_skipped, "n_samples": self.n_samples,
                "seed": self.seed, "ok": self.ok}


def degradation_check(model: TreeModel, survey: SurveySpec, depth: int,
                      n_samples: int, n_bins: int = 20, seed: int = 0,
                      include_root_survey: bool = True,
                      workers: int | None = None) -> DegradationReport:
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    deltas = _collect_root_deltas(
        model, survey, depth,
        [BoundaryCondition.perfect(), BoundaryCondition.none()],
        n_samples, seed, include_root_survey, workers)
    dl, dt = deltas[0], deltas[1]

    edges = np.unique(np.quantile(dt, np.linspace(0.0, 1.0, n_bins + 1)))
    if edges.size < 2:
        assign = np.zeros(dt.size, dtype=np.int64)
        n_eff = 1
    else:
        assign = np.searchsorted(edges[1:-1], dt, side="right")
        n_eff = edges.size - 1

    bins: list[DegradationBin] = []
    n_skipped = 0
    counts = np.bincount(assign, minlength=n_eff)
    sum_dl = np.bincount(assign, weights=dl, minlength=n_eff)
    sum_dl2 = np.bincount(assign, weights=dl * dl, minlength=n_eff)
    sum_dt = np.bincount(assign, weights=dt, minlength=n_eff)
    for i in range(n_eff):
        n = int(counts[i])
        if n < 2:
            n_skipped += 1
            continue
        mean = sum_dl[i] / n
        var = max(sum_dl2[i] / n - mean * mean, 0.0) * n / (n - 1)
        stderr = math.sqrt(var / n)
        center = sum_dt[i] / n
        bins.append(DegradationBin(center, mean, stderr, n,
                                   flagged=mean - center > 3.0 * stderr))
    return DegradationReport(bins, sum(b.flagged for b in bins), n_skipped, n_samples, seed)


# ---------------------------------------------------------------------------
# Majority decoder statistics


def majority_closed_forms(d: float, theta: float, eta: float, depth: int,
                          kind: str = "regular") -> tuple[float, float]:
    """Exact mean and variance of the leaf vote sum given a plus root."""
    a = d * theta * theta
    mean = (1.0 - 2.0 * eta) * (d * theta) ** depth
    growth = float(depth) if abs(a - 1.0) < 1e-12 else (a ** depth - 1.0) / (a - 1.0)
    scale = (1.0 - theta * theta) if kind == "regular" else 1.0
    var = 4.0 * eta * (1.0 - eta) * d ** depth \
        + scale * (1.0 - 2.0 * eta) ** 2 * d ** depth * growth
    return mean, var


def _majority_chunk(start, count, chunk_index, *, d, theta, eta, depth, kind, seed, shift):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    flip = 0.5 * (1.0 - theta)
    nplus = np.ones(count, dtype=np.int64)
    total = np.ones(count, dtype=np.int64)
    for _ in range(depth):
        if kind == "regular":
            di = int(d)
            from_plus = rng.binomial(nplus * di, flip)
            from_minus = rng.binomial((total - nplus) * di, flip)
            nplus = nplus * di - from_plus + from_minus
            total = total * di
        else:
            nminus = total - nplus
            lam_plus = d * (nplus * (1.0 - flip) + nminus * flip)
            lam_minus = d * (nplus * flip + nminus * (1.0 - flip))
            nplus = rng.poisson(lam_plus)
            total = nplus + rng.poisson(lam_minus)
    votes_plus = rng.binomial(nplus, 1.0 - eta) + rng.binomial(total - nplus, eta)
    y = (2 * votes_plus - total).astype(np.float64) - shift
    y2 = y * y
    return (count, float(y.sum()), float(y2.sum()), float((y2 * y).sum()),
            float((y2 * y2).sum()))


@dataclass
class MajorityReport:
    """Sample moments of the noisy leaf majority vote versus closed forms."""

    kind: str
    d: float
    theta: float
    eta: float
    depth: int
    n_samples: int
    seed: int
    sample_mean: float
    sample_mean_stderr: float
    sample_var: float
    sample_var_stderr: float
    closed_form_mean: float
    closed_form_var: float
    ratio: float                      # sample var / mean^2
    ratio_closed_form: float
    ratio_limit: float | None         # large-depth limit, defined above dtheta^2 = 1
    chi2_lower_bound: float           # 1 / (ratio + 1), from the sample ratio
    chi2_lower_bound_limit: float | None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "d": self.d, "theta": self.theta, "eta": self.eta,
            "depth": self.depth, "n_samples": self.n_samples, "seed": self.seed,
            "sample_mean": self.sample_mean, "sample_mean_stderr": self.sample_mean_stderr,
            "sample_var": self.sample_var, "sample_var_stderr": self.sample_var_stderr,
            "closed_form_mean": self.closed_form_mean, "closed_form_var": self.closed_form_var,
            "ratio": self.ratio, "ratio_closed_form": self.ratio_closed_form,
            "ratio_limit": self.ratio_limit, "chi2_lower_bound": self.chi2_lower_bound,
            "chi2_lower_bound_limit": self.chi2_lower_bound_limit,
        }


def majority_stats(d: float, theta: float, eta: float, depth: int, n_samples: int,
                   kind: str = "regular", seed: int = 0,
                   workers: int | None = None) -> MajorityReport:
    """Simulate the leaf vote sum via its level-count sufficient statistic.

    Only the per-level (plus, minus) counts are sampled, so the cost per
    tree is linear in the depth rather than the tree size.
    """
    if kind not in ("regular", "poisson"):
        raise ValueError("kind must be 'regular' or 'poisson'")
    if not 0.0 < eta < 0.5:
        raise ValueError("vote noise eta must lie in (0, 1/2)")
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if kind == "regular" and int(d) != d:
        raise ValueError("regular offspring count must be an integer")

    mean_cf, var_cf = majority_closed_forms(d, theta, eta, depth, kind)
    task = partial(_majority_chunk, d=d, theta=theta, eta=eta, depth=depth,
                   kind=kind, seed=seed, shift=mean_cf)
    parts = parallel_chunk_map(task, n_samples, 1 << 14, workers)

    n = sum(p[0] for p in parts)
    s1 = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    s3 = sum(p[3] for p in parts)
    s4 = sum(p[4] for p in parts)
    ybar = s1 / n
    mean = mean_cf + ybar
    var = (s2 - n * ybar * ybar) / (n - 1)
    mu2 = s2 / n - ybar * ybar
    mu4 = (s4 - 4.0 * ybar * s3 + 6.0 * ybar * ybar * s2 - 3.0 * n * ybar ** 4) / n
    var_stderr = math.sqrt(max(mu4 - mu2 * mu2, 0.0) / n)
    mean_stderr = math.sqrt(max(var, 0.0) / n)

    a = d * theta * theta
    ratio = var / (mean * mean) if mean != 0.0 else math.inf
    ratio_cf = var_cf / (mean_cf * mean_cf) if mean_cf != 0.0 else math.inf
    if a > 1.0:
        scale = (1.0 - theta * theta) if kind == "regular" else 1.0
        ratio_limit = scale / (a - 1.0)
        chi2_limit = 1.0 / (ratio_limit + 1.0)
    else:
        ratio_limit = None
        chi2_limit = None
    return MajorityReport(
        kind=kind, d=d, theta=theta, eta=eta, depth=depth, n_samples=n, seed=seed,
        sample_mean=mean, sample_mean_stderr=mean_stderr,
        sample_var=var, sample_var_stderr=var_stderr,
        closed_form_mean=mean_cf, closed_form_var=var_cf,
        ratio=ratio, ratio_closed_form=ratio_cf, ratio_limit=ratio_limit,
        chi2_lower_bound=1.0 / (ratio + 1.0), chi2_lower_bound_limit=chi2_limit,
    )


# ---------------------------------------------------------------------------
# Weak spatial mixing probe


def _wsm_gap_chunk(start, count, chunk_index, *, model, survey, depth, magnitude,
                   include_root_survey, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    levels = _sample_chunk_levels(rng, model, survey, depth, count,
                                  need_leaf_spin_sums=False, need_leaf_counts=True)
    theta = model.theta
    surveys = levels.surveys
    stats = np.zeros((depth + 1, 3))
    n_leaves = levels.n_leaves()
    stats[depth] = (2.0 * magnitude * n_leaves, (2.0 * magnitude) ** 2 * n_leaves, n_leaves)

    rp = _boundary_base(BoundaryCondition.plus(magnitude), levels, theta)
    rm = -rp
    for j in range(depth - 1, -1, -1):
        if j < depth - 1:
            rp = _aggregate_children(_edge_map_fast(rp, theta), levels, j)
            rm = _aggregate_children(_edge_map_fast(rm, theta), levels, j)
        if surveys[j] is not None and (j > 0 or include_root_survey):
            rp = rp + surveys[j]
            rm = rm + surveys[j]
        rp = np.clip(rp, -LLR_MAX, LLR_MAX)
        rm = np.clip(rm, -LLR_MAX, LLR_MAX)
        g = np.abs(rp - rm)
        stats[j] = (g.sum(), (g * g).sum(), g.size)
    return stats


def _wsm_min_chunk(start, count, chunk_index, *, model, survey, depth, magnitude,
                   include_root_survey, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    levels = _sample_chunk_levels(rng, model, survey, depth, count,
                                  need_leaf_spin_sums=False, need_leaf_counts=True)
    theta = model.theta
    surveys = levels.surveys
    mins = np.full(depth + 1, math.inf)
    mins[depth] = magnitude

    r = _boundary_base(BoundaryCondition.plus(magnitude), levels, theta)
    for j in range(depth - 1, -1, -1):
        if j < depth - 1:
            r = _aggregate_children(_edge_map_fast(r, theta), levels, j)
        if surveys[j] is not None and (j > 0 or include_root_survey):
            r = r + surveys[j]
        r = np.clip(r, -LLR_MAX, LLR_MAX)
        mins[j] = r.min()
    return mins


@dataclass
class WSMReport:
    """Boundary sensitivity probe under extreme constant leaf conditions.

    In the contraction regime (d*theta < 1) the per-level mean gap between
    the plus- and minus-boundary runs shrinks geometrically; measured_rate
    is the worst per-level ratio and should respect the d*theta bound.  In
    the separation regime (d*theta > 1, BSC survey) the probe searches for
    a self-sustaining positive level x and verifies that every node's LLR
    stays above it under the plus boundary.
    """

    regime: str                      # "contraction" | "separation"
    dtheta: float
    depth: int
    n_samples: int
    seed: int
    boundary_magnitude: float
    level_gaps: list[float] | None = None
    level_gap_stderrs: list[float] | None = None
    measured_rate: float | None = None
    rate_bound: float | None = None
    x_found: float | None = None
    margin: float | None = None
    min_llr_by_level: list[float] | None = None
    min_llr: float | None = None
    persists: bool | None = None
    status: str = "ok"

    def as_dict(self) -> dict:
        return {
            "regime": self.regime, "dtheta": self.dtheta, "depth": self.depth,
            "n_samples": self.n_samples, "seed": self.seed,
            "boundary_magnitude": self.boundary_magnitude,
            "level_gaps": self.level_gaps, "level_gap_stderrs": self.level_gap_stderrs,
            "measured_rate": self.measured_rate, "rate_bound": self.rate_bound,
            "x_found": self.x_found, "margin": self.margin,
            "min_llr_by_level": self.min_llr_by_level, "min_llr": self.min_llr,
            "persists": self.persists, "status": self.status,
        }


def _separation_level(model: TreeModel, survey: SurveySpec,
                      n_points: int = 4000) -> tuple[float | None, float]:
    """Largest-margin x > 0 with d*F(x) - survey_cost > x, if one exists."""
    dist = delta_of(survey)
    if len(dist) != 1 or not 0.0 < dist.deltas[0] < 0.5:
        raise ValueError("separation probe needs a BSC survey")
    eta = float(dist.deltas[0])
    cost = math.log1p(-eta) - math.log(eta)
    hi = model.d * edge_llr_map(math.inf, model.theta)
    xs = np.linspace(hi / n_points, hi, n_points)
    margins = model.d * edge_llr_map(xs, model.theta) - cost - xs
    i = int(np.argmax(margins))
    if margins[i] <= 0.0:
        return None, float(margins[i])
    return float(xs[i]), float(margins[i])


def wsm_probe(model: TreeModel, survey: SurveySpec, depth: int, n_samples: int,
              seed: int = 0, boundary_magnitude: float = LLR_MAX,
              include_root_survey: bool = True,
              workers: int | None = None) -> WSMReport:
    """Probe boundary sensitivity; regime chosen by the sign of d*theta - 1."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if not 0.0 < boundary_magnitude <= LLR_MAX:
        raise ValueError(f"boundary magnitude must lie in (0, {LLR_MAX:g}]")
    dtheta = model.d * model.theta
    chunk = _chunk_trees(model, depth)

    if dtheta <= 1.0:
        task = partial(_wsm_gap_chunk, model=model, survey=survey, depth=depth,
                       magnitude=boundary_magnitude,
                       include_root_survey=include_root_survey, seed=seed)
        parts = parallel_chunk_map(task, n_samples, chunk, workers)
        stats = np.zeros((depth + 1, 3))
        for p in parts:
            stats += p
        gaps, stderrs = [], []
        for j in range(depth + 1):
            s, s2, n = stats[j]
            mean = s / n if n > 0 else math.nan
            var = max(s2 / n - mean * mean, 0.0) if n > 1 else 0.0
            gaps.append(mean)
            stderrs.append(math.sqrt(var / n) if n > 1 else 0.0)
        ratios = [gaps[j] / gaps[j + 1] for j in range(depth)
                  if gaps[j + 1] > 1e-9 and not math.isnan(gaps[j])]
        rate = max(ratios) if ratios else math.nan
        return WSMReport(regime="contraction", dtheta=dtheta, depth=depth,
                         n_samples=n_samples, seed=seed,
                         boundary_magnitude=boundary_magnitude,
                         level_gaps=gaps, level_gap_stderrs=stderrs,
                         measured_rate=rate, rate_bound=dtheta, status="ok")

    if model.kind != "regular":
        raise ValueError("separation probe needs a regular offspring model")
    x_found, margin = _separation_level(model, survey)
    if x_found is None:
        return WSMReport(regime="separation", dtheta=dtheta, depth=depth,
                         n_samples=n_samples, seed=seed,
                         boundary_magnitude=boundary_magnitude,
                         x_found=None, margin=margin, persists=False,
                         status="no_separation_found")
    task = partial(_wsm_min_chunk, model=model, survey=survey, depth=depth,
                   magnitude=boundary_magnitude,
                   include_root_survey=include_root_survey, seed=seed)
    parts = parallel_chunk_map(task, n_samples, chunk, workers)
    mins = np.full(depth + 1, math.inf)
    for p in parts:
        np.minimum(mins, p, out=mins)
    persists = bool(np.all(mins > x_found))
    return WSMReport(regime="separation", dtheta=dtheta, depth=depth,
                     n_samples=n_samples, seed=seed,
                     boundary_magnitude=boundary_magnitude,
                     x_found=x_found, margin=margin,
                     min_llr_by_level=[float(m) for m in mins], min_llr=float(mins.min()),
                     persists=persists, status="ok" if persists else "no_separation_found")
