"""Binary memoryless symmetric (BMS) channel algebra.

Every BMS channel handled by this package is kept in standard form: the law
of a random crossover probability on [0, 1/2] (a finite mixture of BSCs).
All channel functionals are expectations of per-atom quantities under that
law, so an atom list is a complete representation.  Capacities and entropies
are in nats throughout.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

__all__ = [
    "DeltaDistribution",
    "SurveySpec",
    "delta_of",
    "prob_error",
    "capacity",
    "chi2_capacity",
    "bhattacharyya",
    "binary_entropy",
    "is_trivial_survey",
    "load_delta_csv",
    "save_delta_csv",
]

MERGE_TOL = 1e-12      # atoms closer than this in delta are merged
WEIGHT_FLOOR = 1e-15   # atoms lighter than this are dropped before renormalizing
_MASS_SLACK = 1e-8     # input weights must sum to 1 within this
_RANGE_SLACK = 1e-9


def binary_entropy(p):
    """Binary entropy in nats, elementwise, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))
    return out if out.ndim else float(out)


class DeltaDistribution:
    """Finite mixture of BSC crossover probabilities.

    Atoms are stored sorted by descending delta with strictly distinct
    deltas.  Construction canonicalizes: deltas are clipped to [0, 1/2],
    atoms within ``MERGE_TOL`` of each other are merged (weight-averaged
    delta), weights below ``WEIGHT_FLOOR`` are dropped, and the remaining
    weights are renormalized to sum to exactly 1.  Instances are immutable.
    """

    __slots__ = ("deltas", "weights")

    def __init__(self, atoms) -> None:
        pairs = [(float(d), float(w)) for d, w in atoms]
        if not pairs:
            raise ValueError("DeltaDistribution needs at least one atom")
        d = np.array([p[0] for p in pairs], dtype=float)
        w = np.array([p[1] for p in pairs], dtype=float)
        if np.any(d < -_RANGE_SLACK) or np.any(d > 0.5 + _RANGE_SLACK):
            raise ValueError("delta atoms must lie in [0, 1/2]")
        if np.any(w < -_RANGE_SLACK):
            raise ValueError("atom weights must be nonnegative")
        d = np.clip(d, 0.0, 0.5)
        w = np.clip(w, 0.0, None)

        keep = w > WEIGHT_FLOOR
        d, w = d[keep], w[keep]
        if d.size == 0:
            raise ValueError("all atom weights are below the weight floor")
        total = float(w.sum())
        if abs(total - 1.0) > _MASS_SLACK:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")

        order = np.argsort(-d, kind="stable")
        d, w = d[order], w[order]
        md, mw = [d[0]], [w[0]]
        for di, wi in zip(d[1:], w[1:]):
            if md[-1] - di <= MERGE_TOL:
                tot = mw[-1] + wi
                md[-1] = (md[-1] * mw[-1] + di * wi) / tot
                mw[-1] = tot
            else:
                md.append(di)
                mw.append(wi)
        deltas = np.array(md, dtype=float)
        weights = np.array(mw, dtype=float)
        weights /= weights.sum()
        deltas.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):  # immutable after construction
        raise AttributeError("DeltaDistribution is immutable")

    def __reduce__(self):  # slots + frozen setattr defeat default pickling
        return (self.__class__, (self.atoms(),))

    @classmethod
    def point(cls, delta: float) -> "DeltaDistribution":
        return cls([(delta, 1.0)])

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.deltas.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return int(self.deltas.size)

    def __repr__(self) -> str:
        inner = ", ".join(f"({d:.6g}, {w:.6g})" for d, w in self.atoms())
        return f"DeltaDistribution([{inner}])"


@dataclass(frozen=True)
class SurveySpec:
    """Per-node survey channel: BSC, erasure, trivial, or a custom mixture.

    ``parse`` accepts the text forms ``bsc:ALPHA``, ``bec:EPS``, ``trivial``
    and ``custom:@FILE.csv`` (CSV with header ``delta,weight``).
    """

    kind: str
    param: float = 0.0
    custom: DeltaDistribution | None = None

    def __post_init__(self):
        if self.kind == "bsc":
            if not 0.0 <= self.param <= 0.5:
                raise ValueError("BSC crossover must lie in [0, 1/2]")
        elif self.kind == "bec":
            if not 0.0 <= self.param <= 1.0:
                raise ValueError("erasure probability must lie in [0, 1]")
        elif self.kind == "trivial":
            pass
        elif self.kind == "custom":
            if self.custom is None:
                raise ValueError("custom survey needs a DeltaDistribution")
        else:
            raise ValueError(f"unknown survey kind {self.kind!r}")

    @classmethod
    def bsc(cls, alpha: float) -> "SurveySpec":
        return cls("bsc", float(alpha))

    @classmethod
    def bec(cls, eps: float) -> "SurveySpec":
        return cls("bec", float(eps))

    @classmethod
    def trivial(cls) -> "SurveySpec":
        return cls("trivial")

    @classmethod
    def from_delta(cls, dist: DeltaDistribution) -> "SurveySpec":
        return cls("custom", 0.0, dist)

    @classmethod
    def parse(cls, text: str) -> "SurveySpec":
        text = text.strip()
        if text == "trivial":
            return cls.trivial()
        if ":" not in text:
            raise ValueError(f"cannot parse survey spec {text!r}")
        kind, _, arg = text.partition(":")
        if kind == "bsc":
            return cls.bsc(float(arg))
        if kind == "bec":
            return cls.bec(float(arg))
        if kind == "custom":
            if not arg.startswith("@"):
                raise ValueError("custom survey must reference a file: custom:@file.csv")
            return cls.from_delta(load_delta_csv(arg[1:]))
        raise ValueError(f"cannot parse survey spec {text!r}")

    def describe(self) -> str:
        if self.kind == "trivial":
            return "trivial"
        if self.kind == "custom":
            return "custom:" + ",".join(f"{d:.12g}@{w:.12g}" for d, w in self.custom.atoms())
        return f"{self.kind}:{self.param:.12g}"


def delta_of(spec: SurveySpec) -> DeltaDistribution:
    """Crossover-mixture form of a survey channel.

    A BEC splits into a perfect atom and a useless atom; BEC(1) and BSC(1/2)
    both canonicalize to the single trivial atom at 1/2.
    """
    if spec.kind == "bsc":
        return DeltaDistribution([(spec.param, 1.0)])
    if spec.kind == "bec":
        return DeltaDistribution([(0.5, spec.param), (0.0, 1.0 - spec.param)])
    if spec.kind == "trivial":
        return DeltaDistribution([(0.5, 1.0)])
    return spec.custom


def prob_error(dist: DeltaDistribution) -> float:
    """MAP error probability of the channel: E[delta]."""
    return float(np.dot(dist.weights, dist.deltas))


def capacity(dist: DeltaDistribution) -> float:
    """Channel capacity in nats: E[log 2 - h_b(delta)]."""
    d, w = dist.deltas, dist.weights
    per_atom = math.log(2.0) + xlogy(d, d) + xlogy(1.0 - d, 1.0 - d)
    return float(np.dot(w, per_atom))


def chi2_capacity(dist: DeltaDistribution) -> float:
    """Chi-square capacity: E[(1 - 2 delta)^2]."""
    return float(np.dot(dist.weights, (1.0 - 2.0 * dist.deltas) ** 2))


def bhattacharyya(dist: DeltaDistribution) -> float:
    """Bhattacharyya coefficient: E[2 sqrt(delta (1 - delta))]."""
    d = dist.deltas
    return float(np.dot(dist.weights, 2.0 * np.sqrt(d * (1.0 - d))))


def is_trivial_survey(spec: SurveySpec) -> bool:
    """True when the survey carries no information (error probability 1/2)."""
    return prob_error(delta_of(spec)) >= 0.5 - 1e-12


def load_delta_csv(path) -> DeltaDistribution:
    """Read a crossover mixture from a CSV file with header ``delta,weight``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["delta", "weight"]:
            raise ValueError(f"{path}: expected header 'delta,weight'")
        atoms = [(float(row[0]), float(row[1])) for row in reader if row]
    return DeltaDistribution(atoms)


def save_delta_csv(dist: DeltaDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "weight"])
        for d, w in dist.atoms():
            writer.writerow([repr(d), repr(w)])
