"""Random-instance sweeps, Nash classification, and the two counterexamples.

A sweep draws landscapes with i.i.d. uniform fitness values in [1-s, 1+s],
runs the chosen dynamics from a configurable initial distribution, and
records when (and how well) each instance converges to a point. Convergence
quality is the limit genotype's fitness rescaled so the global optimum scores
1. Per-instance seeds derive from the master seed and the instance index, so
results are bit-identical across reruns and worker counts.

The counterexamples reproduce two ways the product-distribution (Wright
manifold) picture breaks: selection alone drives a 2x2 population far from
the manifold, and the independence-assuming learner can converge to a
different pure equilibrium than the SR dynamics started from the same
product state.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from . import _kernels
from .backend import default_workers
from .core import (
    FitnessLandscape,
    JointDistribution,
    check_same_shape,
    distance,
    marginal,
    wright_projection,
)
from .dynamics import CONVERGENCE_THRESHOLD, DynamicsKind, Trajectory, apply_step, simulate


# ---------------------------------------------------------------------------
# Instance generation
# ---------------------------------------------------------------------------


def random_landscape(allele_counts: Sequence[int], s: float, seed) -> FitnessLandscape:
    """Landscape with i.i.d. uniform values in [1-s, 1+s] (0 < s < 1)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"selection strength must be in (0, 1), got {s}")
    rng = np.random.default_rng(seed)
    values = rng.uniform(1.0 - s, 1.0 + s, size=tuple(allele_counts))
    return FitnessLandscape(values)


def random_distribution(allele_counts: Sequence[int], seed, product: bool = False) -> JointDistribution:
    """Random initial distribution: a normalized uniform tensor, or a product
    of normalized uniform marginals."""
    rng = np.random.default_rng(seed)
    if product:
        vectors = []
        for n in allele_counts:
            v = rng.uniform(size=n)
            vectors.append(v / v.sum())
        return JointDistribution.from_product(vectors)
    raw = rng.uniform(size=tuple(allele_counts))
    return JointDistribution(raw / raw.sum())


def instance_seed(master_seed: int, index: int) -> int:
    """Deterministic per-instance seed derived from master seed and index."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Nash / subgame
# ---------------------------------------------------------------------------


def is_pure_nash(game, genotype: Sequence[int]) -> bool:
    """True when no single-locus deviation strictly improves the payoff."""
    values = game.values if isinstance(game, FitnessLandscape) else np.asarray(game, dtype=float)
    genotype = tuple(int(i) for i in genotype)
    here = values[genotype]
    for locus, count in enumerate(values.shape):
        idx = list(genotype)
        for alt in range(count):
            idx[locus] = alt
            if values[tuple(idx)] > here:
                return False
    return True


def subgame_restrict(game: FitnessLandscape, dist: JointDistribution):
    """Restrict the game to alleles used by the support of a distribution.

    Returns the restricted landscape and, per locus, the array mapping new
    allele indices to original ones.
    """
    check_same_shape(game, dist)
    keep = []
    for j in range(dist.num_loci):
        supported = np.flatnonzero(marginal(dist, j) > 0)
        if supported.size == 0:
            raise ValueError("distribution has empty support")
        keep.append(supported)
    values = game.values
    for j, idx in enumerate(keep):
        values = np.take(values, idx, axis=j)
    return FitnessLandscape(values), tuple(keep)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

INIT_MODES = ("uniform", "random-product", "random-joint")


@dataclass(frozen=True)
class SweepConfig:
    allele_counts: tuple[int, ...]
    s: float
    r: float = 0.5
    kind: str = "sr"
    instances: int = 1000
    t_max: int = 100_000
    threshold: float = CONVERGENCE_THRESHOLD
    seed: int = 0
    init: str = "uniform"
    workers: int = 0  # 0 = take the HAPLOMW_WORKERS default

    def __post_init__(self):
        object.__setattr__(self, "allele_counts", tuple(int(n) for n in self.allele_counts))
        if not 0.0 < self.s < 1.0:
            raise ValueError("selection strength must be in (0, 1)")
        if self.instances < 1:
            raise ValueError("need at least one instance")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("convergence threshold must be in (0, 1)")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")
        DynamicsKind(self.kind, self.r)  # validates kind and r


@dataclass
class SweepRecord:
    index: int
    seed: int
    converged: bool
    t_conv: int | None
    quality: float | None
    limit_genotype: tuple[int, ...] | None
    limit_is_nash: bool | None


@dataclass
class SweepSummary:
    """Empirical CDFs: fraction converged by T, fraction with quality <= Q.

    F(T) uses all instances as denominator; F(Q) only converged ones
    (censored instances never report a quality).
    """

    n_instances: int
    n_converged: int
    t_values: np.ndarray
    f_t: np.ndarray
    q_values: np.ndarray
    f_q: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[SweepRecord]) -> "SweepSummary":
        n = len(records)
        conv = [rec for rec in records if rec.converged]
        ts = np.array([rec.t_conv for rec in conv], dtype=np.int64)
        t_values, t_counts = np.unique(ts, return_counts=True)
        f_t = np.cumsum(t_counts) / n if n else np.array([])
        qs = np.array([rec.quality for rec in conv], dtype=np.float64)
        q_values, q_counts = np.unique(qs, return_counts=True)
        f_q = np.cumsum(q_counts) / len(conv) if conv else np.array([])
        return cls(
            n_instances=n,
            n_converged=len(conv),
            t_values=t_values,
            f_t=f_t,
            q_values=q_values,
            f_q=f_q,
        )


def converged_t_values(records: Sequence[SweepRecord]) -> np.ndarray:
    return np.array([rec.t_conv for rec in records if rec.converged], dtype=np.int64)


def converged_qualities(records: Sequence[SweepRecord]) -> np.ndarray:
    return np.array([rec.quality for rec in records if rec.converged], dtype=np.float64)


def _initial_distribution(cfg: SweepConfig, rng: np.random.Generator) -> JointDistribution:
    if cfg.init == "uniform":
        return JointDistribution.uniform(cfg.allele_counts)
    if cfg.init == "random-product":
        vectors = []
        for n in cfg.allele_counts:
            v = rng.uniform(size=n)
            vectors.append(v / v.sum())
        return JointDistribution.from_product(vectors)
    raw = rng.uniform(size=cfg.allele_counts)
    return JointDistribution(raw / raw.sum())


def run_to_convergence(landscape: FitnessLandscape, initial: JointDistribution,
                       kind: DynamicsKind, t_max: int,
                       threshold: float = CONVERGENCE_THRESHOLD):
    """Iterate without recording until the max cell exceeds the threshold.

    Returns (t_conv, final JointDistribution); t_conv is -1 when t_max is
    exhausted first. Two-locus instances run on the selected backend kernel;
    general k takes the per-step path.
    """
    if initial.num_loci == 2:
        t_conv, probs = _kernels.run_to_convergence(
            landscape.values, initial.probs, _kernels.KIND_CODES[kind.kind],
            kind.r, t_max, threshold,
        )
        return t_conv, JointDistribution(probs / probs.sum())
    dist = initial
    for t in range(t_max + 1):
        if float(dist.probs.max()) > threshold:
            return t, dist
        dist = apply_step(landscape, dist, kind)
    return -1, dist


def _instance_record(cfg: SweepConfig, index: int) -> SweepRecord:
    seed = instance_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    landscape = random_landscape(cfg.allele_counts, cfg.s, rng)
    initial = _initial_distribution(cfg, rng)
    kind = DynamicsKind(cfg.kind, cfg.r)
    t_conv, final = run_to_convergence(landscape, initial, kind, cfg.t_max, cfg.threshold)
    if t_conv < 0:
        return SweepRecord(index, seed, False, None, None, None, None)
    limit = tuple(int(i) for i in np.unravel_index(int(final.probs.argmax()), final.probs.shape))
    peak = float(landscape.values[limit])
    top = float(landscape.values.max())
    quality = (peak - 1.0) / (top - 1.0) if top != 1.0 else 1.0
    subgame, keep = subgame_restrict(landscape, initial)
    translated = tuple(int(np.searchsorted(keep[j], limit[j])) for j in range(len(limit)))
    nash = is_pure_nash(subgame, translated)
    return SweepRecord(index, seed, True, int(t_conv), quality, limit, nash)


def _instance_record_args(args) -> SweepRecord:
    return _instance_record(*args)


def run_sweep(cfg: SweepConfig) -> tuple[list[SweepRecord], SweepSummary]:
    """Run all instances (optionally across processes) and summarize.

    Records are keyed by instance index only, so the output is independent of
    the worker count.
    """
    workers = cfg.workers if cfg.workers > 0 else default_workers()
    if workers > 1 and cfg.instances > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(
                    _instance_record_args,
                    ((cfg, i) for i in range(cfg.instances)),
                    chunksize=max(1, cfg.instances // (workers * 8)),
                )
            )
    else:
        records = [_instance_record(cfg, i) for i in range(cfg.instances)]
    records.sort(key=lambda rec: rec.index)
    return records, SweepSummary.from_records(records)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov distance between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("need nonempty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


# ---------------------------------------------------------------------------
# Sweep CSV emission
# ---------------------------------------------------------------------------


def _fmt_float(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def write_records_csv(records: Sequence[SweepRecord], cfg: SweepConfig,
                      target: str | IO[str], meta: str | None = None) -> None:
    lines = ["instance,seed,s,r,dynamics,converged,t_conv,quality,limit_genotype,is_nash"]
    for rec in records:
        genotype = "" if rec.limit_genotype is None else "-".join(
            str(i + 1) for i in rec.limit_genotype
        )
        lines.append(",".join([
            str(rec.index),
            str(rec.seed),
            format(cfg.s, ".17g"),
            format(cfg.r, ".17g"),
            cfg.kind,
            "true" if rec.converged else "false",
            "" if rec.t_conv is None else str(rec.t_conv),
            _fmt_float(rec.quality),
            genotype,
            "" if rec.limit_is_nash is None else ("true" if rec.limit_is_nash else "false"),
        ]))
    if meta:
        lines.append("# " + meta)
    text = "\n".join(lines) + "\n"
    if isinstance(target, str):
        with open(target, "w") as fh:
            fh.write(text)
    else:
        target.write(text)


def write_summary_csv(summary: SweepSummary, target: str | IO[str],
                      meta: str | None = None) -> None:
    """Two plottable blocks: (T, F_T) then (Q, F_Q)."""
    lines = ["curve,x,fraction"]
    for t, f in zip(summary.t_values, summary.f_t):
        lines.append(f"T,{int(t)},{format(f, '.17g')}")
    for q, f in zip(summary.q_values, summary.f_q):
        lines.append(f"Q,{format(q, '.17g')},{format(f, '.17g')}")
    if meta:
        lines.append("# " + meta)
    text = "\n".join(lines) + "\n"
    if isinstance(target, str):
        with open(target, "w") as fh:
            fh.write(text)
    else:
        target.write(text)


# ---------------------------------------------------------------------------
# Counterexamples
# ---------------------------------------------------------------------------


@dataclass
class WrightDivergence:
    """Selection-only run with its largest departure from the Wright manifold."""

    trajectory: Trajectory
    max_l1: float
    step_at_max: int
    linf_at_max: float


def counterexample_wright(s: float, t_max: int = 400) -> WrightDivergence:
    """2x2 landscape with a single favored genotype, uniform start, r=0.

    Tracks the l1 distance between P^t and its Wright projection; the
    analytic maximum is 1/4, reached once the favored cell's cumulative
    growth factor hits 5. The linf gap peaks at 1/16 and is reported without
    being part of any claim.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"selection strength must be in (0, 1), got {s}")
    landscape = FitnessLandscape([[1.0 + s, 1.0], [1.0, 1.0]])
    trajectory = simulate(landscape, JointDistribution.uniform((2, 2)),
                          DynamicsKind.asexual(), t_max)
    best, best_t = -1.0, 0
    for t, dist in enumerate(trajectory.dists):
        gap = distance(dist, wright_projection(dist), "l1")
        if gap > best:
            best, best_t = gap, t
    peak_dist = trajectory.dists[best_t]
    linf = distance(peak_dist, wright_projection(peak_dist), "linf")
    return WrightDivergence(trajectory=trajectory, max_l1=best,
                            step_at_max=best_t, linf_at_max=linf)


#: The near-tie instance whose two learners split between the diagonal equilibria.
DIVERGENT_W = ((1.01, 1.0), (1.0, 1.0099603))
DIVERGENT_X0 = (0.499, 0.501)


@dataclass
class DivergentLimits:
    """Limits of the independence-assuming PW vs the SR dynamics."""

    pw_limit: tuple[int, int] | None
    pw_steps: int
    sr_limit: tuple[int, int] | None
    sr_steps: int
    pw_limit_is_nash: bool | None
    sr_limit_is_nash: bool | None

    @property
    def conclusive(self) -> bool:
        return self.pw_limit is not None and self.sr_limit is not None


def counterexample_convergence(t_max: int = 10_000_000,
                               threshold: float = CONVERGENCE_THRESHOLD,
                               r: float = 0.5) -> DivergentLimits:
    """Run both processes from the same near-symmetric product start.

    The product-form PW tips toward the (2,2) equilibrium while the SR
    dynamics (r=0.5) builds correlation and tips toward (1,1); both limits
    are pure Nash. A branch that fails to converge within t_max yields an
    inconclusive verdict (limit None).
    """
    values = np.array(DIVERGENT_W)
    x0 = np.array(DIVERGENT_X0)
    pw_t, pw_x, pw_y = _kernels.product_pw_to_convergence(values, x0, x0, t_max, threshold)
    pw_limit = (int(pw_x.argmax()), int(pw_y.argmax())) if pw_t >= 0 else None
    sr_t, sr_p = _kernels.run_to_convergence(
        values, np.outer(x0, x0), _kernels.SR, r, t_max, threshold
    )
    sr_limit = (
        tuple(int(i) for i in np.unravel_index(int(sr_p.argmax()), sr_p.shape))
        if sr_t >= 0 else None
    )
    return DivergentLimits(
        pw_limit=pw_limit,
        pw_steps=int(pw_t),
        sr_limit=sr_limit,
        sr_steps=int(sr_t),
        pw_limit_is_nash=None if pw_limit is None else is_pure_nash(values, pw_limit),
        sr_limit_is_nash=None if sr_limit is None else is_pure_nash(values, sr_limit),
    )
