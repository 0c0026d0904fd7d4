"""Machine checks that dynamics marginals equal multiplicative-weights updates.

Two stepwise identities hold for every landscape, every distribution, and
every recombination rate:

* SR: the new marginal at each locus is x * (conditional utility) / wbar,
  so the rate r never enters the one-step marginal;
* RS: the new marginal is x * (r-mixed utility) / (post-recombination mean
  fitness), so r enters explicitly.

Iterating them: the SR trajectory marginals follow the parameter-free
conditional-utility learner, and the RS trajectory marginals follow the
alpha=r mix. These are algebraic identities, so stepwise deviations beyond
accumulated rounding indicate a bug; trajectory checks get a looser budget
for drift that compounds over the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FitnessLandscape, JointDistribution, average_fitness, marginal
from .dynamics import DynamicsKind, rs_normalizer, rs_step, simulate, sr_step, sr_step_k
from .learners import LearnerConfig, alpha_utilities, conditional_utilities, cosimulate_learners

STEPWISE_TOL = 1e-12
TRAJECTORY_TOL = 1e-9


@dataclass(frozen=True)
class WorstOffender:
    step: int
    locus: int
    index: int
    deviation: float


@dataclass
class EquivalenceReport:
    """Outcome of one dynamics-vs-learner comparison."""

    check: str
    tol: float
    passed: bool
    max_deviation: float
    worst: WorstOffender | None

    def to_json(self) -> dict:
        worst = None
        if self.worst is not None:
            worst = {
                "t": self.worst.step,
                "locus": self.worst.locus,
                "index": self.worst.index,
                "deviation": self.worst.deviation,
            }
        return {
            "check": self.check,
            "passed": self.passed,
            "tol": self.tol,
            "worst": worst,
        }


def _report(check: str, tol: float, deviations: list[tuple[int, int, int, float]]) -> EquivalenceReport:
    step, locus, index, dev = max(deviations, key=lambda item: item[3])
    return EquivalenceReport(
        check=check,
        tol=tol,
        passed=dev <= tol,
        max_deviation=dev,
        worst=WorstOffender(step=step, locus=locus, index=index, deviation=dev),
    )


def check_sr_marginal(landscape: FitnessLandscape, dist: JointDistribution, r: float,
                      tol: float = STEPWISE_TOL) -> EquivalenceReport:
    """One SR step vs x * conditional-utility / wbar, every locus."""
    k = dist.num_loci
    stepped = sr_step(landscape, dist, r) if k == 2 else sr_step_k(landscape, dist, r)
    wbar = average_fitness(landscape, dist)
    deviations = []
    for j in range(k):
        lhs = marginal(stepped, j)
        rhs = marginal(dist, j) * conditional_utilities(landscape, dist, j) / wbar
        gaps = np.abs(lhs - rhs)
        idx = int(gaps.argmax())
        deviations.append((0, j, idx, float(gaps[idx])))
    return _report("sr-marginal", tol, deviations)


def check_rs_marginal(landscape: FitnessLandscape, dist: JointDistribution, r: float,
                      tol: float = STEPWISE_TOL) -> EquivalenceReport:
    """One RS step vs x * alpha=r utility / rs normalizer, every locus."""
    k = dist.num_loci
    stepped = rs_step(landscape, dist, r)
    normalizer = rs_normalizer(landscape, dist, r)
    deviations = []
    for j in range(k):
        lhs = marginal(stepped, j)
        rhs = marginal(dist, j) * alpha_utilities(landscape, dist, j, r) / normalizer
        gaps = np.abs(lhs - rhs)
        idx = int(gaps.argmax())
        deviations.append((0, j, idx, float(gaps[idx])))
    return _report("rs-marginal", tol, deviations)


def check_trajectory(landscape: FitnessLandscape, initial: JointDistribution,
                     kind: DynamicsKind, steps: int,
                     tol: float = TRAJECTORY_TOL) -> EquivalenceReport:
    """Simulated marginals vs co-simulated learner strategies over a horizon.

    SR pairs with the parameter-free conditional learner (alpha=0), RS with
    the alpha=r mix.
    """
    if kind.kind == "sr":
        config = LearnerConfig(alpha=0.0)
    elif kind.kind == "rs":
        config = LearnerConfig(alpha=kind.r)
    else:
        raise ValueError("trajectory check applies to sr or rs dynamics")
    trajectory = simulate(landscape, initial, kind, steps)
    strategies = cosimulate_learners(landscape, trajectory, config)
    deviations = []
    for j, strat in enumerate(strategies):
        for t in range(len(trajectory)):
            gaps = np.abs(trajectory.marginals[t][j] - strat[t])
            idx = int(gaps.argmax())
            deviations.append((t, j, idx, float(gaps[idx])))
    name = f"{kind.kind}-trajectory"
    return _report(name, tol, deviations)
