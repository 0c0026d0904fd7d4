"""Multiplicative-weights learners over an observed joint distribution.

Each locus is a player in the identical-interest game defined by the fitness
landscape. A player's expected utility for an action can be read from the
joint distribution in two ways:

* conditional: average payoff given the opponents' behavior conditioned on
  the player's own action (this equals the marginal fitness of the allele);
* independent: average payoff against the opponents' marginals, ignoring any
  observed correlation.

``alpha`` mixes the two (0 = conditional, 1 = independent). Updates are
multiplicative: polynomial weights scale by the utility (parameter-free) or
by 1 + eps*utility, Hedge scales by (1+eps)**utility. Zero-probability
actions report utility 0 and are never revived (extinct-allele convention).
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DegenerateUpdate,
    DimensionMismatch,
    JointDistribution,
    RENORM_WINDOW,
    marginal,
    payoff_tensor,
)


@dataclass(frozen=True)
class LearnerConfig:
    """Update-rule selection: utility mix alpha, step size, and weight rule.

    ``epsilon=None`` selects the parameter-free polynomial-weights update
    (weights scale by the raw utility); Hedge has no parameter-free limit and
    therefore requires epsilon.
    """

    alpha: float = 0.0
    epsilon: float | None = None
    rule: str = "pw"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.rule not in ("pw", "hedge"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == "hedge" and self.epsilon is None:
            raise ValueError("hedge requires an explicit epsilon")


def as_strategy(vec) -> np.ndarray:
    """Validate and renormalize a mixed strategy vector."""
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("a strategy is a one-dimensional probability vector")
    if np.any(arr < 0):
        raise ValueError("strategy entries must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > RENORM_WINDOW:
        raise ValueError(f"strategy sums to {total!r}, not 1")
    return arr / total


def _check_game_shape(payoff: np.ndarray, dist: JointDistribution) -> None:
    if payoff.shape != dist.allele_counts:
        raise DimensionMismatch(
            f"payoff shape {payoff.shape} does not match distribution {dist.allele_counts}"
        )


# ---------------------------------------------------------------------------
# Expected utilities
# ---------------------------------------------------------------------------


def conditional_utilities(game, dist: JointDistribution, player: int) -> np.ndarray:
    """Per-action expected payoff conditioned on the player's own action.

    Entry i is sum over opponent profiles of P(profile | action i) * payoff.
    Actions with zero marginal mass get utility 0.
    """
    payoff = payoff_tensor(game)
    _check_game_shape(payoff, dist)
    k = dist.num_loci
    axes = tuple(j for j in range(k) if j != player)
    weighted = (dist.probs * payoff).sum(axis=axes)
    mass = marginal(dist, player)
    out = np.zeros_like(weighted)
    np.divide(weighted, mass, out=out, where=mass > 0)
    return out


def independent_utilities(game, dist: JointDistribution, player: int) -> np.ndarray:
    """Per-action expected payoff against the opponents' marginals.

    Correlation in the joint distribution is deliberately ignored; every
    opponent is assumed to play its marginal independently.
    """
    payoff = payoff_tensor(game)
    _check_game_shape(payoff, dist)
    k = dist.num_loci
    letters = string.ascii_lowercase[:k]
    others = [j for j in range(k) if j != player]
    formula = letters + "," + ",".join(letters[j] for j in others) + "->" + letters[player]
    return np.einsum(formula, payoff, *(marginal(dist, j) for j in others))


def alpha_utilities(game, dist: JointDistribution, player: int, alpha: float) -> np.ndarray:
    """Convex mix: alpha * independent + (1 - alpha) * conditional."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return conditional_utilities(game, dist, player)
    if alpha == 1.0:
        return independent_utilities(game, dist, player)
    return alpha * independent_utilities(game, dist, player) + (
        1.0 - alpha
    ) * conditional_utilities(game, dist, player)


def utility_conditional(game, dist: JointDistribution, player: int, action: int) -> float:
    return float(conditional_utilities(game, dist, player)[action])


def utility_independent(game, dist: JointDistribution, player: int, action: int) -> float:
    return float(independent_utilities(game, dist, player)[action])


def utility_alpha(game, dist: JointDistribution, player: int, action: int, alpha: float) -> float:
    return float(alpha_utilities(game, dist, player, alpha)[action])


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------


def pw_update(strategy, utilities, config: LearnerConfig | None = None) -> np.ndarray:
    """Polynomial-weights update: scale by g (parameter-free) or 1 + eps*g.

    Preserves the simplex and keeps extinct actions extinct. Parameter-free
    updates need nonnegative utilities on the support; epsilon updates need
    1 + eps*g positive there. A nonpositive normalizer raises
    DegenerateUpdate.
    """
    x = as_strategy(strategy)
    g = np.asarray(utilities, dtype=np.float64)
    if g.shape != x.shape:
        raise DimensionMismatch(f"utilities shape {g.shape} vs strategy {x.shape}")
    support = x > 0
    epsilon = config.epsilon if config is not None else None
    if epsilon is None:
        if np.any(g[support] < 0):
            raise DegenerateUpdate("parameter-free update needs nonnegative utilities on the support")
        weights = x * g
    else:
        factors = 1.0 + epsilon * g
        if np.any(factors[support] <= 0):
            raise DegenerateUpdate(f"1 + eps*g is nonpositive on the support (eps={epsilon})")
        weights = x * factors
    total = weights.sum()
    if not total > 0:
        raise DegenerateUpdate("update normalizer is not positive")
    return weights / total


def hedge_update(strategy, utilities, epsilon: float) -> np.ndarray:
    """Exponential-weights update: scale by (1 + eps) ** g."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x = as_strategy(strategy)
    g = np.asarray(utilities, dtype=np.float64)
    if g.shape != x.shape:
        raise DimensionMismatch(f"utilities shape {g.shape} vs strategy {x.shape}")
    weights = x * (1.0 + epsilon) ** g
    return weights / weights.sum()


def _apply(strategy: np.ndarray, utilities: np.ndarray, config: LearnerConfig) -> np.ndarray:
    if config.rule == "hedge":
        return hedge_update(strategy, utilities, config.epsilon)
    return pw_update(strategy, utilities, config)


# ---------------------------------------------------------------------------
# Co-simulation
# ---------------------------------------------------------------------------


def cosimulate_learners(game, trajectory, config: LearnerConfig) -> list[np.ndarray]:
    """Run one learner per player against an observed joint trajectory.

    Strategies start at the marginals of the first distribution; step t
    computes utilities from the t-th observed joint and updates. Returns one
    (T+1, n_j) array per player, aligned with the trajectory states.
    """
    dists = list(trajectory.dists) if hasattr(trajectory, "dists") else list(trajectory)
    if not dists:
        raise ValueError("trajectory is empty")
    payoff = payoff_tensor(game)
    _check_game_shape(payoff, dists[0])
    k = dists[0].num_loci
    strategies = [marginal(dists[0], j) for j in range(k)]
    history: list[list[np.ndarray]] = [[s] for s in strategies]
    for t in range(len(dists) - 1):
        observed = dists[t]
        for j in range(k):
            g = alpha_utilities(payoff, observed, j, config.alpha)
            strategies[j] = _apply(strategies[j], g, config)
            history[j].append(strategies[j])
    return [np.vstack(rows) for rows in history]


def strategies_to_csv(strategies: Sequence[np.ndarray], target, meta: str | None = None) -> None:
    """Write per-player strategy trajectories with the same column layout as
    the marginal block of a dynamics trajectory CSV, for direct diffing."""
    header = ["t"] + [
        f"x{j + 1}_{i + 1}" for j, s in enumerate(strategies) for i in range(s.shape[1])
    ]
    steps = strategies[0].shape[0]
    lines = [",".join(header)]
    for t in range(steps):
        row = [str(t)]
        for s in strategies:
            row.extend(format(v, ".17g") for v in s[t])
        lines.append(",".join(row))
    if meta:
        lines.append("# " + meta)
    text = "\n".join(lines) + "\n"
    if isinstance(target, str):
        with open(target, "w") as fh:
            fh.write(text)
    else:
        target.write(text)


@dataclass
class ProductLearnerRun:
    """History of a self-coupled product-form PW run."""

    profiles: list[np.ndarray]
    convergence_step: int | None

    @property
    def final(self) -> list[np.ndarray]:
        return [p[-1] for p in self.profiles]


def independent_pw_simulate(game, profile: Sequence, steps: int,
                            conv_threshold: float | None = None) -> ProductLearnerRun:
    """Self-contained parameter-free PW where every player assumes
    independence (the alpha=1 learner coupled through a product distribution).

    All players update simultaneously from the product of the current
    strategies. Convergence (when a threshold is given) means the product
    distribution exceeds the threshold on one genotype.
    """
    payoff = payoff_tensor(game)
    strategies = [as_strategy(v) for v in profile]
    if len(strategies) != payoff.ndim or any(
        len(s) != n for s, n in zip(strategies, payoff.shape)
    ):
        raise DimensionMismatch("profile does not match the payoff tensor")
    k = payoff.ndim
    letters = string.ascii_lowercase[:k]
    history: list[list[np.ndarray]] = [[s] for s in strategies]
    convergence_step = None

    def converged() -> bool:
        if conv_threshold is None:
            return False
        peak = 1.0
        for s in strategies:
            peak *= s.max()
        return peak > conv_threshold

    if converged():
        convergence_step = 0
    for t in range(1, steps + 1):
        updated = []
        for j in range(k):
            others = [i for i in range(k) if i != j]
            formula = letters + "," + ",".join(letters[i] for i in others) + "->" + letters[j]
            g = np.einsum(formula, payoff, *(strategies[i] for i in others))
            updated.append(pw_update(strategies[j], g))
        strategies = updated
        for j in range(k):
            history[j].append(strategies[j])
        if convergence_step is None and converged():
            convergence_step = t
    return ProductLearnerRun(
        profiles=[np.vstack(rows) for rows in history],
        convergence_step=convergence_step,
    )
