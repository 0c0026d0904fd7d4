"""External-regret accounting for dynamics trajectories.

For a trajectory with T update steps, a player's ledger records the per-step
utility vector of every action and the per-step realized value, both taken
from the states P^0..P^{T-1} that drove the updates:

* SR mode: conditional utilities and the population average fitness;
* RS mode: the r-mixed utilities and their strategy-weighted sum (the
  post-recombination mean fitness).

With s the selection strength and n the action count, the multiplicative-
weights bound says the realized average is at least the best fixed action's
average minus s**2 + ln(n)/T. The bridge to the standard bound is the
centered "differential game": m = (utility - 1)/s lies in [-1, 1] and the
dynamics marginals follow an eps=s polynomial-weights update on m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FitnessLandscape, JointDistribution, marginal, selection_strength
from .learners import alpha_utilities, conditional_utilities

#: Slack below which the bound counts as violated (rounding allowance).
PASS_SLACK_TOL = 1e-10


@dataclass
class RegretLedger:
    """Per-step utilities and realized values for one player."""

    mode: str
    r: float
    player: int
    utilities: np.ndarray
    realized: np.ndarray
    s: float
    n: int

    @property
    def horizon(self) -> int:
        return self.utilities.shape[0]


@dataclass
class RegretReport:
    """Bound evaluation: realized average vs per-action hindsight averages."""

    player: int
    horizon: int
    s: float
    n: int
    af_actions: np.ndarray
    af_realized: float
    bounds: np.ndarray
    slacks: np.ndarray
    passed: bool
    s_in_range: bool

    @property
    def best_action(self) -> int:
        return int(self.af_actions.argmax())

    def to_json(self) -> dict:
        best = self.best_action
        return {
            "player": self.player,
            "T": self.horizon,
            "s": self.s,
            "n": self.n,
            "af_realized": self.af_realized,
            "af_best_action": float(self.af_actions[best]),
            "bound": float(self.bounds[best]),
            "slack": float(self.slacks[best]),
            "passed": self.passed,
            "s_in_range": self.s_in_range,
        }


def _dists(trajectory) -> list[JointDistribution]:
    return list(trajectory.dists) if hasattr(trajectory, "dists") else list(trajectory)


def build_ledger(landscape: FitnessLandscape, trajectory, player: int,
                 mode: str = "sr", r: float | None = None) -> RegretLedger:
    """Collect the per-step regret quantities for one player.

    ``r`` is only meaningful in RS mode; it defaults to the trajectory's own
    recombination rate when one is attached.
    """
    if mode not in ("sr", "rs"):
        raise ValueError(f"unknown regret mode {mode!r}")
    dists = _dists(trajectory)
    if len(dists) < 2:
        raise ValueError("trajectory must contain at least one update step")
    if mode == "rs" and r is None:
        kind = getattr(trajectory, "kind", None)
        if kind is None:
            raise ValueError("RS mode needs a recombination rate")
        r = kind.r
    rate = 0.0 if mode == "sr" else float(r)
    horizon = len(dists) - 1
    utilities = np.empty((horizon, landscape.allele_counts[player]))
    realized = np.empty(horizon)
    for t in range(horizon):
        observed = dists[t]
        if mode == "sr":
            g = conditional_utilities(landscape, observed, player)
            value = float(np.dot(observed.probs.ravel(), landscape.values.ravel()))
        else:
            g = alpha_utilities(landscape, observed, player, rate)
            value = float(np.dot(marginal(observed, player), g))
        utilities[t] = g
        realized[t] = value
    return RegretLedger(
        mode=mode,
        r=rate,
        player=player,
        utilities=utilities,
        realized=realized,
        s=selection_strength(landscape),
        n=landscape.allele_counts[player],
    )


def differential_quantities(landscape: FitnessLandscape, trajectory, player: int,
                            s: float) -> np.ndarray:
    """Per-step centered payoffs m = (conditional utility - 1) / s.

    Requires s at least the selection strength (so |m| <= 1 on supported
    actions). Extinct actions get m = 0 by convention.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    strength = selection_strength(landscape)
    if s < strength - 1e-12:
        raise ValueError(
            f"s={s} is below the selection strength {strength}; centered payoffs would escape [-1, 1]"
        )
    dists = _dists(trajectory)
    if len(dists) < 2:
        raise ValueError("trajectory must contain at least one update step")
    horizon = len(dists) - 1
    out = np.zeros((horizon, landscape.allele_counts[player]))
    for t in range(horizon):
        observed = dists[t]
        g = conditional_utilities(landscape, observed, player)
        mass = marginal(observed, player)
        m = (g - 1.0) / s
        m[mass <= 0] = 0.0
        out[t] = m
    return out


def check_regret_bound(ledger: RegretLedger, s: float | None = None,
                       n: int | None = None) -> RegretReport:
    """Evaluate realized AF against max_i (AF_i - s**2 - ln(n)/T).

    The bound is stated for s in (0, 1/2); out-of-range s is flagged but the
    numbers are still computed.
    """
    s = ledger.s if s is None else float(s)
    n = ledger.n if n is None else int(n)
    horizon = ledger.horizon
    af_actions = ledger.utilities.mean(axis=0)
    af_realized = float(ledger.realized.mean())
    bounds = af_actions - s * s - math.log(n) / horizon
    slacks = af_realized - bounds
    return RegretReport(
        player=ledger.player,
        horizon=horizon,
        s=s,
        n=n,
        af_actions=af_actions,
        af_realized=af_realized,
        bounds=bounds,
        slacks=slacks,
        passed=bool(slacks.min() >= -PASS_SLACK_TOL),
        s_in_range=0.0 < s < 0.5,
    )
