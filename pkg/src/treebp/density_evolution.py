"""Density evolution for broadcast trees with per-node surveys.

One evolution step maps the LLR law at depth k to the law at depth k+1:
each child message passes through the edge transform, picks up the
broadcast flip, the offspring aggregate is a (fixed or Poisson) convolution
power, and the node's own survey LLR is added.  Two boundary conditions are
tracked in parallel: leaves observed perfectly (point mass at +inf) and
leaves unobserved (point mass at 0).  The Bhattacharyya functional is the
potential whose gap between the two sequences certifies that the boundary
stops mattering when it contracts to zero.

Depth-k reports cover surveys at depths 0..k-1 of the depth-k window; the
flag include_root_survey only controls whether the depth-0 (root) survey
enters the reported law, which is what block-model integrands need to turn
off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bms import DeltaDistribution, SurveySpec, delta_of, is_trivial_survey
from .llr_dist import (
    GridConfig,
    InfoMeasures,
    SymmetricLLRDistribution,
    apply_edge_map,
    convolve,
    flip_mix,
    from_delta,
    info_measures,
    poisson_convolve,
    power_convolve,
    resymmetrize,
)

__all__ = [
    "TreeModel",
    "DEConfig",
    "InitCondition",
    "DepthRecord",
    "EvolutionReport",
    "FixedPointResult",
    "BIVerdict",
    "UniquenessReport",
    "de_step",
    "run_pair",
    "check_boundary_irrelevance",
    "bp_fixed_point",
    "uniqueness_probe",
]

# Gap ratios are only meaningful while the gap sits well above the floating
# point noise floor of the Bhattacharyya sums.
_RATIO_FLOOR = 1e-13


@dataclass(frozen=True)
class TreeModel:
    """Offspring law and edge flip strength of the broadcast tree."""

    kind: str          # "regular" | "poisson"
    d: float           # offspring count (regular) or mean offspring (poisson)
    theta: float       # edge correlation, flip probability (1 - theta)/2

    def __post_init__(self):
        if self.kind not in ("regular", "poisson"):
            raise ValueError("kind must be 'regular' or 'poisson'")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.kind == "regular":
            if int(self.d) != self.d or self.d < 1:
                raise ValueError("regular offspring count must be an integer >= 1")
        elif self.d <= 0:
            raise ValueError("mean offspring count must be positive")

    @classmethod
    def regular(cls, d: int, theta: float) -> "TreeModel":
        return cls("regular", float(d), float(theta))

    @classmethod
    def poisson(cls, d_mean: float, theta: float) -> "TreeModel":
        return cls("poisson", float(d_mean), float(theta))

    @property
    def flip(self) -> float:
        return 0.5 * (1.0 - self.theta)

    @property
    def snr(self) -> float:
        return self.d * self.theta * self.theta

    def describe(self) -> str:
        d = int(self.d) if self.kind == "regular" else self.d
        return f"{self.kind}:{d}"


@dataclass(frozen=True)
class DEConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    max_depth: int = 200
    convergence_tol: float = 1e-9
    tail_tol: float = 1e-12
    include_root_survey: bool = True

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if not 0.0 < self.convergence_tol < 1.0:
            raise ValueError("convergence_tol must lie in (0, 1)")


@dataclass(frozen=True)
class InitCondition:
    """Depth-0 law: leaves observed, unobserved, or a custom channel."""

    kind: str                                # "perfect_leaves" | "no_leaves" | "custom"
    delta: DeltaDistribution | None = None

    @classmethod
    def perfect_leaves(cls) -> "InitCondition":
        return cls("perfect_leaves")

    @classmethod
    def no_leaves(cls) -> "InitCondition":
        return cls("no_leaves")

    @classmethod
    def custom(cls, delta: DeltaDistribution) -> "InitCondition":
        return cls("custom", delta)

    def initial_distribution(self, grid: GridConfig) -> SymmetricLLRDistribution:
        if self.kind == "perfect_leaves":
            return SymmetricLLRDistribution.point(grid, math.inf)
        if self.kind == "no_leaves":
            return SymmetricLLRDistribution.unit(grid)
        if self.kind == "custom":
            if self.delta is None:
                raise ValueError("custom init needs a DeltaDistribution")
            return from_delta(self.delta, grid)
        raise ValueError(f"unknown init kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "custom":
            return "custom:" + ",".join(f"{d:.6g}@{w:.6g}" for d, w in self.delta.atoms())
        return self.kind


def _survey_distribution(survey: SurveySpec, grid: GridConfig) -> SymmetricLLRDistribution | None:
    """Grid LLR law of the survey, infinities folded onto the boundary bins.

    Returns None for a trivial survey so steps can skip the convolution.
    """
    if is_trivial_survey(survey):
        return None
    return from_delta(delta_of(survey), grid).with_infinities_clamped()


def _step_views(mu: SymmetricLLRDistribution, model: TreeModel,
                survey_dist: SymmetricLLRDistribution | None,
                cfg: DEConfig) -> tuple[SymmetricLLRDistribution, SymmetricLLRDistribution]:
    """One evolution step; returns (without, with) the new node's own survey."""
    child = flip_mix(apply_edge_map(mu, model.theta), model.flip)
    if model.kind == "regular":
        agg = power_convolve(child, int(model.d))
    else:
        agg = poisson_convolve(child, model.d, cfg.tail_tol)
    agg = resymmetrize(agg)
    if survey_dist is None:
        return agg, agg
    return agg, resymmetrize(convolve(agg, survey_dist))


def de_step(mu: SymmetricLLRDistribution, model: TreeModel, survey: SurveySpec,
            cfg: DEConfig | None = None) -> SymmetricLLRDistribution:
    """Child-message law one level up, survey included at the new node."""
    cfg = cfg or DEConfig(grid=mu.grid)
    if cfg.grid != mu.grid:
        raise ValueError("grid mismatch between distribution and config")
    survey_dist = _survey_distribution(survey, mu.grid)
    return _step_views(mu, model, survey_dist, cfg)[1]


@dataclass(frozen=True)
class DepthRecord:
    k: int
    leaves: InfoMeasures
    noleaves: InfoMeasures
    gap: float
    gap_ratio: float     # nan when the previous gap sits at the noise floor

    def as_dict(self) -> dict:
        return {"k": self.k, "leaves": self.leaves.as_dict(),
                "noleaves": self.noleaves.as_dict(),
                "gap": self.gap, "gap_ratio": self.gap_ratio}


@dataclass
class EvolutionReport:
    """Paired evolution trace plus convergence verdicts.

    verdict is one of: "bi_holds" (gap closed and both sequences settled),
    "distinct_limits" (both sequences settled but the gap stayed open),
    "undecided" (depth budget exhausted first).
    """

    model: TreeModel
    survey: str
    include_root_survey: bool
    convergence_tol: float
    records: list[DepthRecord]
    verdict: str
    converged: bool
    sequences_converged: bool
    limit_leaves: InfoMeasures
    limit_noleaves: InfoMeasures

    @property
    def undecided(self) -> bool:
        return self.verdict == "undecided"

    def final_gap(self) -> float:
        return self.records[-1].gap

    def tail_gap_ratios(self, window: int = 4, floor: float = 1e-7) -> list[float]:
        """Last few gap contraction ratios measured above the noise floor."""
        ratios = [r.gap_ratio for r in self.records
                  if np.isfinite(r.gap_ratio) and r.gap >= _RATIO_FLOOR and r.gap_ratio > 0
                  and r.gap / max(r.gap_ratio, 1e-300) >= floor]
        return ratios[-window:]

    def as_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "theta": self.model.theta,
            "survey": self.survey,
            "include_root_survey": self.include_root_survey,
            "convergence_tol": self.convergence_tol,
            "verdict": self.verdict,
            "converged": self.converged,
            "sequences_converged": self.sequences_converged,
            "final_gap": self.final_gap(),
            "limit_leaves": self.limit_leaves.as_dict(),
            "limit_noleaves": self.limit_noleaves.as_dict(),
            "records": [r.as_dict() for r in self.records],
        }

    def write_trace_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "Pe_leaves", "Pe_noleaves", "C_leaves", "C_noleaves",
                             "Z_leaves", "Z_noleaves", "gap", "gap_ratio"])
            for r in self.records:
                writer.writerow([r.k,
                                 repr(r.leaves.prob_error), repr(r.noleaves.prob_error),
                                 repr(r.leaves.capacity), repr(r.noleaves.capacity),
                                 repr(r.leaves.bhattacharyya), repr(r.noleaves.bhattacharyya),
                                 repr(r.gap), repr(r.gap_ratio)])


def _sequence_change(prev: InfoMeasures, cur: InfoMeasures) -> float:
    return max(abs(cur.prob_error - prev.prob_error),
               abs(cur.bhattacharyya - prev.bhattacharyya))


def run_pair(model: TreeModel, survey: SurveySpec, cfg: DEConfig | None = None) -> EvolutionReport:
    """Evolve perfect-leaf and no-leaf boundary conditions side by side.

    Stops once the potential gap and the successive changes of both
    sequences drop below the tolerance, or at max_depth.
    """
    cfg = cfg or DEConfig()
    grid = cfg.grid
    survey_dist = _survey_distribution(survey, grid)

    mu = InitCondition.perfect_leaves().initial_distribution(grid)
    mut = InitCondition.no_leaves().initial_distribution(grid)
    view, viewt = mu, mut

    records: list[DepthRecord] = []
    im, imt = info_measures(view), info_measures(viewt)
    gap = imt.bhattacharyya - im.bhattacharyya
    records.append(DepthRecord(0, im, imt, gap, math.nan))

    converged = False
    seq_done = False
    for _ in range(cfg.max_depth):
        pre, post = _step_views(mu, model, survey_dist, cfg)
        pret, postt = _step_views(mut, model, survey_dist, cfg)
        mu, mut = post, postt
        view = post if cfg.include_root_survey else pre
        viewt = postt if cfg.include_root_survey else pret

        prev, prevt = im, imt
        im, imt = info_measures(view), info_measures(viewt)
        prev_gap = gap
        gap = imt.bhattacharyya - im.bhattacharyya
        ratio = gap / prev_gap if prev_gap > _RATIO_FLOOR else math.nan
        records.append(DepthRecord(len(records), im, imt, gap, ratio))

        change = max(_sequence_change(prev, im), _sequence_change(prevt, imt))
        seq_done = change < cfg.convergence_tol
        if seq_done and abs(gap) < cfg.convergence_tol:
            converged = True
            break

    if converged:
        verdict = "bi_holds"
    elif seq_done:
        verdict = "distinct_limits"
    else:
        verdict = "undecided"
    return EvolutionReport(
        model=model,
        survey=survey.describe(),
        include_root_survey=cfg.include_root_survey,
        convergence_tol=cfg.convergence_tol,
        records=records,
        verdict=verdict,
        converged=converged,
        sequences_converged=seq_done,
        limit_leaves=records[-1].leaves,
        limit_noleaves=records[-1].noleaves,
    )


@dataclass
class BIVerdict:
    """Boundary-irrelevance check result.

    status: "bi_holds" | "distinct_limits" | "undecided" | "not_applicable"
    (the check needs a survey with error probability away from 1/2).
    """

    status: str
    entropy_gap_trace: list[float]
    sandwich_ok: bool
    monotone_ok: bool
    report: EvolutionReport | None

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "entropy_gap_trace": self.entropy_gap_trace,
            "sandwich_ok": self.sandwich_ok,
            "monotone_ok": self.monotone_ok,
            "report": self.report.as_dict() if self.report is not None else None,
        }


def check_boundary_irrelevance(model: TreeModel, survey: SurveySpec,
                               cfg: DEConfig | None = None,
                               slack: float = 1e-8) -> BIVerdict:
    """Run the paired evolution and grade the degradation sandwich.

    The entropy gap trace is C(leaves) - C(noleaves) per depth; the sandwich
    check asserts it stays nonnegative, the monotone check that information
    shrinks along the observed sequence and grows along the unobserved one.
    """
    if is_trivial_survey(survey):
        return BIVerdict("not_applicable", [], True, True, None)
    report = run_pair(model, survey, cfg)
    caps = [r.leaves.capacity for r in report.records]
    capst = [r.noleaves.capacity for r in report.records]
    trace = [c - ct for c, ct in zip(caps, capst)]
    sandwich_ok = all(g >= -slack for g in trace)
    mono_ok = all(caps[i + 1] <= caps[i] + slack for i in range(len(caps) - 1)) and \
        all(capst[i + 1] >= capst[i] - slack for i in range(len(capst) - 1))
    return BIVerdict(report.verdict, trace, sandwich_ok, mono_ok, report)


@dataclass
class FixedPointResult:
    delta: DeltaDistribution
    trace: list[InfoMeasures]
    converged: bool
    init: str
    depth: int

    @property
    def status(self) -> str:
        return "converged" if self.converged else "undecided"

    def limit(self) -> InfoMeasures:
        return self.trace[-1]


def bp_fixed_point(model: TreeModel, survey: SurveySpec, init: InitCondition,
                   cfg: DEConfig | None = None) -> FixedPointResult:
    """Iterate a single boundary condition until the functionals stall."""
    cfg = cfg or DEConfig()
    grid = cfg.grid
    survey_dist = _survey_distribution(survey, grid)
    mu = init.initial_distribution(grid)
    view = mu
    trace = [info_measures(view)]
    converged = False
    for _ in range(cfg.max_depth):
        pre, post = _step_views(mu, model, survey_dist, cfg)
        mu = post
        view = post if cfg.include_root_survey else pre
        trace.append(info_measures(view))
        prev, cur = trace[-2], trace[-1]
        change = max(abs(cur.prob_error - prev.prob_error),
                     abs(cur.bhattacharyya - prev.bhattacharyya),
                     abs(cur.capacity - prev.capacity))
        if change < cfg.convergence_tol:
            converged = True
            break
    from .llr_dist import to_delta

    return FixedPointResult(delta=to_delta(view), trace=trace, converged=converged,
                            init=init.describe(), depth=len(trace) - 1)


@dataclass
class UniquenessReport:
    """Numerical fixed-point multiplicity probe (evidence, not a proof).

    status: "unique" | "multiple_candidates" | "undecided".
    """

    status: str
    max_pe_diff: float
    max_z_diff: float
    results: list[FixedPointResult]

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "max_pe_diff": self.max_pe_diff,
            "max_z_diff": self.max_z_diff,
            "inits": [r.init for r in self.results],
            "limits": [r.limit().as_dict() for r in self.results],
            "depths": [r.depth for r in self.results],
        }


def uniqueness_probe(model: TreeModel, survey: SurveySpec,
                     inits: list[InitCondition] | None = None,
                     cfg: DEConfig | None = None) -> UniquenessReport:
    """Run several initial conditions and compare their limits.

    Limits further apart than 10x the convergence tolerance flag multiple
    candidates; any non-converged run makes the probe undecided.
    """
    cfg = cfg or DEConfig()
    if inits is None:
        inits = [InitCondition.perfect_leaves(), InitCondition.no_leaves()]
    if len(inits) < 2:
        raise ValueError("uniqueness probe needs at least two initial conditions")
    results = [bp_fixed_point(model, survey, init, cfg) for init in inits]
    max_pe = max_z = 0.0
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            a, b = results[i].limit(), results[j].limit()
            max_pe = max(max_pe, abs(a.prob_error - b.prob_error))
            max_z = max(max_z, abs(a.bhattacharyya - b.bhattacharyya))
    if not all(r.converged for r in results):
        status = "undecided"
    elif max(max_pe, max_z) > 10.0 * cfg.convergence_tol:
        status = "multiple_candidates"
    else:
        status = "unique"
    return UniquenessReport(status=status, max_pe_diff=max_pe, max_z_diff=max_z, results=results)
