"""Core domain types: species, multisets, rate intervals, reactions, partitions.

Everything in this module is immutable after construction and safe to share
across threads. Species are interned to dense integer indices so that all
hot paths work on small integers instead of strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple


class StructuralError(ValueError):
    """An input violates a structural precondition (unknown species index,
    mismatched species universes, malformed partition, horizon out of range)."""


@dataclass(frozen=True)
class Species:
    """A named species with its dense index into the network's species list."""

    name: str
    index: int


class Multiset:
    """Immutable multiset over species indices.

    Stored as a tuple of (index, count) pairs sorted by index with all counts
    positive. The canonical representation makes multisets hashable, directly
    comparable, and usable as dictionary keys; tuple comparison of `entries`
    doubles as the deterministic lexicographic order used to canonicalize
    state enumerations.
    """

    __slots__ = ("entries",)

    def __init__(self, items: Iterable[Tuple[int, int]] = ()):
        acc: Dict[int, int] = {}
        for idx, cnt in items:
            if cnt == 0:
                continue
            if idx < 0:
                raise ValueError(f"negative species index {idx}")
            acc[idx] = acc.get(idx, 0) + cnt
        for idx, cnt in acc.items():
            if cnt < 0:
                raise ValueError(f"negative count for species index {idx}")
        self.entries: Tuple[Tuple[int, int], ...] = tuple(sorted(acc.items()))

    @classmethod
    def from_counts(cls, counts: Dict[int, int]) -> "Multiset":
        return cls(counts.items())

    @property
    def total(self) -> int:
        """Total number of molecules, i.e. the sum of all counts."""
        return sum(c for _, c in self.entries)

    def count(self, index: int) -> int:
        for idx, cnt in self.entries:
            if idx == index:
                return cnt
        return 0

    def support(self) -> Tuple[int, ...]:
        return tuple(idx for idx, _ in self.entries)

    def add(self, other: "Multiset") -> "Multiset":
        return Multiset(self.entries + other.entries)

    def subtract(self, other: "Multiset") -> "Multiset":
        """Multiset difference; raises if `other` is not contained in self."""
        acc = dict(self.entries)
        for idx, cnt in other.entries:
            left = acc.get(idx, 0) - cnt
            if left < 0:
                raise ValueError("multiset subtraction would go negative")
            if left == 0:
                acc.pop(idx, None)
            else:
                acc[idx] = left
        return Multiset(acc.items())

    def contains(self, other: "Multiset") -> bool:
        return all(self.count(idx) >= cnt for idx, cnt in other.entries)

    def remove_one(self, index: int) -> "Multiset":
        """A copy with one occurrence of `index` removed."""
        return self.subtract(Multiset(((index, 1),)))

    def format(self, names: Sequence[str]) -> str:
        """Render as '2 A + B', or '0' for the empty multiset."""
        if not self.entries:
            return "0"
        terms = []
        for idx, cnt in self.entries:
            terms.append(names[idx] if cnt == 1 else f"{cnt} {names[idx]}")
        return " + ".join(terms)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Multiset) and self.entries == other.entries

    def __lt__(self, other: "Multiset") -> bool:
        return self.entries < other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{i}:{c}" for i, c in self.entries)
        return f"Multiset({{{inner}}})"


EMPTY_MULTISET = Multiset()


@dataclass(frozen=True)
class RateInterval:
    """Closed nonnegative interval [lo, hi] bounding a kinetic rate."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"invalid rate interval [{self.lo}; {self.hi}]")

    @classmethod
    def exact(cls, value: float) -> "RateInterval":
        return cls(value, value)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


@dataclass(frozen=True)
class Reaction:
    """A reaction: reactant multiset -> product multiset with a rate interval.

    Reactions with reactant == product are legal; they contribute nothing to
    the dynamics or to equivalence signatures.
    """

    reactant: Multiset
    product: Multiset
    rate: RateInterval
    id: int

    @property
    def is_noop(self) -> bool:
        return self.reactant == self.product

    @property
    def arity(self) -> int:
        return self.reactant.total


class ReactionNetwork:
    """A finite species set plus reactions with interval-valued rates.

    The `lower` and `upper` rate vectors pin every rate at its interval
    endpoint; these two extremal networks drive both the equivalence check
    and the stochastic semantics. Optional initial data carries a molecule
    multiset (stochastic) and/or a concentration vector (deterministic).
    """

    __slots__ = ("species", "reactions", "initial_state",
                 "initial_concentration", "_index_of", "__weakref__")

    def __init__(self, species: Sequence[Species], reactions: Sequence[Reaction],
                 initial_state: Optional[Multiset] = None,
                 initial_concentration: Optional[Sequence[float]] = None):
        self.species: Tuple[Species, ...] = tuple(species)
        self.reactions: Tuple[Reaction, ...] = tuple(reactions)
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise StructuralError("duplicate species names")
        for i, s in enumerate(self.species):
            if s.index != i:
                raise StructuralError("species indices must be contiguous and in order")
        n = len(self.species)
        for j, r in enumerate(self.reactions):
            if r.id != j:
                raise StructuralError("reaction ids must be contiguous and in order")
            for idx, _ in tuple(r.reactant) + tuple(r.product):
                if idx >= n:
                    raise StructuralError(f"reaction {j} references species index {idx} >= {n}")
        if initial_state is not None:
            for idx, _ in initial_state:
                if idx >= n:
                    raise StructuralError("initial state references unknown species")
        conc: Optional[Tuple[float, ...]] = None
        if initial_concentration is not None:
            conc = tuple(float(x) for x in initial_concentration)
            if len(conc) != n:
                raise StructuralError("initial concentration length mismatch")
        self.initial_state = initial_state
        self.initial_concentration = conc
        self._index_of: Dict[str, int] = {s.name: s.index for s in self.species}

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.species)

    def index_of(self, name: str) -> int:
        try:
            return self._index_of[name]
        except KeyError:
            raise StructuralError(f"unknown species {name!r}") from None

    def rates(self, extremal: str) -> Tuple[float, ...]:
        """Rate vector with every interval pinned at its 'lower' or 'upper' end."""
        if extremal == "lower":
            return tuple(r.rate.lo for r in self.reactions)
        if extremal == "upper":
            return tuple(r.rate.hi for r in self.reactions)
        raise ValueError(f"extremal must be 'lower' or 'upper', got {extremal!r}")

    def multiset(self, text_counts: Dict[str, int]) -> Multiset:
        """Build a multiset from a name -> count mapping."""
        return Multiset((self.index_of(n), c) for n, c in text_counts.items())

    def structurally_equal(self, other: "ReactionNetwork") -> bool:
        """Equality of species names, reaction sets (as sets), and initial data."""
        if self.names != other.names:
            return False
        mine = sorted((r.reactant.entries, r.product.entries, r.rate.lo, r.rate.hi)
                      for r in self.reactions)
        theirs = sorted((r.reactant.entries, r.product.entries, r.rate.lo, r.rate.hi)
                        for r in other.reactions)
        return (mine == theirs
                and self.initial_state == other.initial_state
                and self.initial_concentration == other.initial_concentration)

    def __repr__(self) -> str:
        return f"ReactionNetwork({self.n_species} species, {self.n_reactions} reactions)"


class Partition:
    """A partition of the species index set {0, ..., n-1}.

    Canonical form: each block is a sorted tuple of indices, blocks are sorted
    by their smallest member, and block ids are positions in that order. The
    representative of a block is its smallest member, which makes quotient
    construction deterministic.
    """

    __slots__ = ("n", "blocks", "block_of")

    def __init__(self, blocks: Iterable[Iterable[int]], n: int):
        blks = sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0] if b else -1)
        seen = [False] * n
        for b in blks:
            if not b:
                raise StructuralError("empty partition block")
            for i in b:
                if not (0 <= i < n):
                    raise StructuralError(f"species index {i} outside universe of size {n}")
                if seen[i]:
                    raise StructuralError(f"species index {i} in two blocks")
                seen[i] = True
        if not all(seen):
            missing = [i for i, s in enumerate(seen) if not s]
            raise StructuralError(f"partition does not cover species {missing}")
        self.n = n
        self.blocks: Tuple[Tuple[int, ...], ...] = tuple(blks)
        bo = [0] * n
        for bid, b in enumerate(self.blocks):
            for i in b:
                bo[i] = bid
        self.block_of: Tuple[int, ...] = tuple(bo)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(((i,) for i in range(n)), n)

    @classmethod
    def one_block(cls, n: int) -> "Partition":
        if n == 0:
            return cls((), 0)
        return cls((tuple(range(n)),), n)

    @classmethod
    def from_block_of(cls, block_of: Sequence[int]) -> "Partition":
        groups: Dict[int, list] = {}
        for i, b in enumerate(block_of):
            groups.setdefault(b, []).append(i)
        return cls(groups.values(), len(block_of))

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def representatives(self) -> Tuple[int, ...]:
        return tuple(b[0] for b in self.blocks)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Partition) and self.n == other.n
                and self.blocks == other.blocks)

    def __hash__(self) -> int:
        return hash((self.n, self.blocks))

    def __repr__(self) -> str:
        return f"Partition({self.n_blocks} blocks over {self.n} species)"


@dataclass(frozen=True)
class BlockProjection:
    """Per-block cumulative counts of a multiset: the computable fingerprint
    of the multiset lifting. Two multisets are lifted-equivalent exactly when
    their projections are equal."""

    counts: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def block_projection(sigma: Multiset, part: Partition) -> BlockProjection:
    """Project a multiset onto per-block cumulative counts."""
    counts = [0] * part.n_blocks
    for idx, cnt in sigma:
        if idx >= part.n:
            raise StructuralError(f"species index {idx} not covered by partition")
        counts[part.block_of[idx]] += cnt
    return BlockProjection(tuple(counts))


def falling_binomial(sigma: Multiset, rho: Multiset) -> int:
    """Product of per-species binomial coefficients C(sigma(B), rho(B)).

    This counts the distinct ways to pick the reactant molecules `rho` out of
    the state `sigma`; it is zero exactly when rho is not contained in sigma.
    """
    out = 1
    for idx, cnt in rho:
        out *= math.comb(sigma.count(idx), cnt)
        if out == 0:
            return 0
    return out


def refines(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of `fine` is contained in a single block of `coarse`."""
    if fine.n != coarse.n:
        raise StructuralError("partitions over different species universes")
    for b in fine.blocks:
        target = coarse.block_of[b[0]]
        if any(coarse.block_of[i] != target for i in b[1:]):
            return False
    return True
