"""Tensor-shaped probability and fitness primitives.

A k-locus haploid population is described by two dense tensors over genotype
space: a fitness landscape (strictly positive reals, one value per genotype)
and a joint distribution (population frequencies). A genotype is one allele
index per locus, so both tensors have shape ``(n_1, ..., n_k)``.

The fitness landscape doubles as the payoff tensor of an identical-interest
game with one player per locus; ``GameMatrix`` is provided as an alias for
that reading. All operations here are pure functions on immutable inputs and
are safe for concurrent use.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

# Construction renormalizes sums that drift by at most this much; anything
# larger is treated as corrupt input rather than floating-point noise.
RENORM_WINDOW = 1e-9
PROB_TOL = 1e-12


class DimensionMismatch(ValueError):
    """Tensor shapes or locus counts of two operands do not agree."""


class UnsupportedAllele(ValueError):
    """A conditional was requested for an allele with zero marginal mass."""


class DegenerateUpdate(ArithmeticError):
    """A multiplicative update produced a nonpositive normalizer."""


def _as_counts(allele_counts: Sequence[int]) -> tuple[int, ...]:
    counts = tuple(int(n) for n in allele_counts)
    if len(counts) < 2:
        raise ValueError(f"need at least 2 loci, got {len(counts)}")
    if any(n < 1 for n in counts):
        raise ValueError(f"allele counts must be positive, got {counts}")
    return counts


def _as_tensor(values, allele_counts: Sequence[int] | None) -> tuple[np.ndarray, tuple[int, ...]]:
    arr = np.asarray(values, dtype=np.float64)
    if allele_counts is not None:
        counts = _as_counts(allele_counts)
        if arr.size != int(np.prod(counts)):
            raise DimensionMismatch(
                f"{arr.size} values cannot fill a tensor of shape {counts}"
            )
        arr = arr.reshape(counts)
    else:
        counts = _as_counts(arr.shape)
    arr = np.ascontiguousarray(arr)
    return arr, counts


class FitnessLandscape:
    """Strictly positive fitness tensor over genotypes.

    ``values[i_1, ..., i_k]`` is the expected offspring count of the genotype
    with allele ``i_j`` at locus ``j``. Read as a payoff tensor it defines an
    identical-interest game with one player per locus.
    """

    __slots__ = ("allele_counts", "values")

    def __init__(self, values, allele_counts: Sequence[int] | None = None):
        arr, counts = _as_tensor(values, allele_counts)
        if not np.all(np.isfinite(arr)):
            raise ValueError("fitness values must be finite")
        if np.any(arr <= 0):
            raise ValueError("fitness values must be strictly positive")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "allele_counts", counts)

    def __setattr__(self, name, value):
        raise AttributeError("FitnessLandscape is immutable")

    @property
    def num_loci(self) -> int:
        return len(self.allele_counts)

    def __repr__(self) -> str:
        return f"FitnessLandscape(shape={self.allele_counts})"

    def to_json(self) -> dict:
        return {"alleles": list(self.allele_counts), "values": self.values.ravel().tolist()}

    @classmethod
    def from_json(cls, data: str | dict) -> "FitnessLandscape":
        obj = json.loads(data) if isinstance(data, str) else data
        return cls(obj["values"], obj["alleles"])

    @classmethod
    def load(cls, path) -> "FitnessLandscape":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


#: A fitness landscape read as an identical-interest game payoff tensor.
GameMatrix = FitnessLandscape


class JointDistribution:
    """Probability tensor over genotypes (population frequencies).

    Entries are nonnegative and sum to one; sums within ``RENORM_WINDOW`` of
    one are silently renormalized (accumulated rounding over long
    trajectories), larger deviations raise.
    """

    __slots__ = ("allele_counts", "probs")

    def __init__(self, probs, allele_counts: Sequence[int] | None = None):
        arr, counts = _as_tensor(probs, allele_counts)
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite")
        if np.any(arr < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > RENORM_WINDOW:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            arr = arr / total
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "allele_counts", counts)

    def __setattr__(self, name, value):
        raise AttributeError("JointDistribution is immutable")

    @property
    def num_loci(self) -> int:
        return len(self.allele_counts)

    def __repr__(self) -> str:
        return f"JointDistribution(shape={self.allele_counts})"

    @classmethod
    def uniform(cls, allele_counts: Sequence[int]) -> "JointDistribution":
        counts = _as_counts(allele_counts)
        size = int(np.prod(counts))
        return cls(np.full(counts, 1.0 / size))

    @classmethod
    def point(cls, allele_counts: Sequence[int], genotype: Sequence[int]) -> "JointDistribution":
        counts = _as_counts(allele_counts)
        arr = np.zeros(counts)
        arr[tuple(genotype)] = 1.0
        return cls(arr)

    @classmethod
    def from_product(cls, marginal_vectors: Sequence[np.ndarray]) -> "JointDistribution":
        vectors = [np.asarray(v, dtype=np.float64) for v in marginal_vectors]
        return cls(product_tensor(vectors))

    def to_json(self) -> dict:
        return {"alleles": list(self.allele_counts), "values": self.probs.ravel().tolist()}

    @classmethod
    def from_json(cls, data: str | dict) -> "JointDistribution":
        obj = json.loads(data) if isinstance(data, str) else data
        return cls(obj["values"], obj["alleles"])

    @classmethod
    def load(cls, path) -> "JointDistribution":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


class MarginalProfile:
    """Per-locus allele frequency vectors (one mixed strategy per player)."""

    __slots__ = ("vectors",)

    def __init__(self, vectors: Sequence[np.ndarray]):
        cleaned = []
        for v in vectors:
            arr = np.asarray(v, dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError("marginal vectors must be one-dimensional")
            if np.any(arr < 0):
                raise ValueError("marginal vectors must be nonnegative")
            total = float(arr.sum())
            if abs(total - 1.0) > RENORM_WINDOW:
                raise ValueError(f"marginal vector sums to {total!r}, not 1")
            if total != 1.0:
                arr = arr / total
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            cleaned.append(arr)
        object.__setattr__(self, "vectors", tuple(cleaned))

    def __setattr__(self, name, value):
        raise AttributeError("MarginalProfile is immutable")

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, locus: int) -> np.ndarray:
        return self.vectors[locus]

    def __iter__(self):
        return iter(self.vectors)

    @classmethod
    def from_joint(cls, dist: "JointDistribution") -> "MarginalProfile":
        return cls([marginal(dist, j) for j in range(dist.num_loci)])


@dataclass(frozen=True)
class IndexVector:
    """A (possibly partial) genotype: allele indices for a subset of loci.

    ``loci`` lists the loci covered, ``alleles`` the chosen allele per listed
    locus. A full genotype covers loci ``0..k-1`` in order.
    """

    loci: tuple[int, ...]
    alleles: tuple[int, ...]

    def __post_init__(self):
        if len(self.loci) != len(self.alleles):
            raise ValueError("loci and alleles must have equal length")
        if len(set(self.loci)) != len(self.loci):
            raise ValueError("loci must be distinct")

    @classmethod
    def full(cls, genotype: Sequence[int]) -> "IndexVector":
        genotype = tuple(int(i) for i in genotype)
        return cls(tuple(range(len(genotype))), genotype)

    def validate(self, allele_counts: Sequence[int]) -> None:
        counts = tuple(allele_counts)
        for locus, allele in zip(self.loci, self.alleles):
            if not 0 <= locus < len(counts):
                raise IndexError(f"locus {locus} out of range for {len(counts)} loci")
            if not 0 <= allele < counts[locus]:
                raise IndexError(
                    f"allele {allele} out of range at locus {locus} (n={counts[locus]})"
                )


def genotypes(allele_counts: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Iterate all full genotypes in row-major order."""
    return itertools.product(*(range(n) for n in allele_counts))


def partial_indices(allele_counts: Sequence[int], loci: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Iterate all partial index vectors over the given locus subset."""
    return itertools.product(*(range(allele_counts[j]) for j in loci))


def product_tensor(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product of per-locus vectors as a full k-dimensional tensor."""
    out = np.asarray(1.0)
    for v in vectors:
        out = np.multiply.outer(out, np.asarray(v, dtype=np.float64))
    return out


def payoff_tensor(game) -> np.ndarray:
    """Payoff values of a game given as FitnessLandscape or raw array.

    Raw arrays admit zero (or negative) payoffs, which are valid in the game
    reading even though fitness landscapes must stay strictly positive.
    """
    if isinstance(game, FitnessLandscape):
        return game.values
    arr = np.asarray(game, dtype=np.float64)
    if arr.ndim < 2:
        raise DimensionMismatch("payoff tensor needs at least 2 loci")
    return arr


def check_same_shape(a, b) -> None:
    sa = a.allele_counts if hasattr(a, "allele_counts") else tuple(np.shape(a))
    sb = b.allele_counts if hasattr(b, "allele_counts") else tuple(np.shape(b))
    if sa != sb:
        raise DimensionMismatch(f"shape mismatch: {sa} vs {sb}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def average_fitness(landscape: FitnessLandscape, dist: JointDistribution) -> float:
    """Population mean fitness: sum of p * w over all genotypes."""
    check_same_shape(landscape, dist)
    return float(np.dot(landscape.values.ravel(), dist.probs.ravel()))


def marginal(dist: JointDistribution, locus: int) -> np.ndarray:
    """Allele frequencies at one locus (sum over all other loci)."""
    k = dist.num_loci
    if not 0 <= locus < k:
        raise IndexError(f"locus {locus} out of range for {k} loci")
    axes = tuple(j for j in range(k) if j != locus)
    return dist.probs.sum(axis=axes)


def marginals(dist: JointDistribution) -> MarginalProfile:
    return MarginalProfile.from_joint(dist)


def conditional_marginal(dist: JointDistribution, locus: int, allele: int) -> np.ndarray:
    """Distribution over the other loci given the allele at one locus.

    Raises UnsupportedAllele when the allele carries no marginal mass; callers
    iterating alleles must skip those (multiplicative updates keep them at 0).
    """
    k = dist.num_loci
    if not 0 <= locus < k:
        raise IndexError(f"locus {locus} out of range for {k} loci")
    if not 0 <= allele < dist.allele_counts[locus]:
        raise IndexError(f"allele {allele} out of range at locus {locus}")
    mass = float(marginal(dist, locus)[allele])
    if mass <= 0.0:
        raise UnsupportedAllele(f"allele {allele} at locus {locus} has zero marginal")
    slab = np.take(dist.probs, allele, axis=locus)
    return slab / mass


def linkage_disequilibrium(dist: JointDistribution) -> np.ndarray:
    """Deviation of the joint distribution from the product of its marginals.

    Zero everywhere exactly when the distribution lies on the Wright manifold.
    For two loci this is the classical D matrix; for k loci it is the full
    deviation from the product of all k marginals.
    """
    prof = marginals(dist)
    return dist.probs - product_tensor(prof.vectors)


def selection_strength(landscape: FitnessLandscape) -> float:
    """Smallest s with every fitness value inside [1-s, 1+s]."""
    return float(np.abs(landscape.values - 1.0).max())


def wright_projection(dist: JointDistribution) -> JointDistribution:
    """Product distribution with the same marginals (idempotent)."""
    prof = marginals(dist)
    return JointDistribution(product_tensor(prof.vectors))


def distance(p: JointDistribution, q: JointDistribution, norm: str = "l1") -> float:
    """Entrywise l1 or linf distance between two joint distributions."""
    check_same_shape(p, q)
    diff = np.abs(p.probs - q.probs)
    if norm == "l1":
        return float(diff.sum())
    if norm == "linf":
        return float(diff.max())
    raise ValueError(f"unknown norm {norm!r} (expected 'l1' or 'linf')")
