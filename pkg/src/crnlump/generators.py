"""Programmatic construction of the bundled model families: SIR with
vaccination over a star topology or an arbitrary weighted network, and
multisite reversible binding of a ligand to a substrate."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product
from typing import List, Optional

from .model import (Multiset, Partition, RateInterval, Reaction,
                    ReactionNetwork, Species)
from .parser import EdgeListGraph, ModelDocument


@dataclass(frozen=True)
class SirParams:
    """SIR-with-vaccination kinetics: infection scaling beta (used by the
    adjacency form), recovery gamma, immunity-loss eta, and the vaccination
    rate interval."""

    beta: float
    gamma: float
    eta: float
    vaccination: RateInterval = RateInterval(0.0, 1.0)

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0 or self.eta < 0:
            raise ValueError("SIR parameters must be nonnegative")


def _sir_species(n: int) -> List[Species]:
    species = []
    for i in range(1, n + 1):
        for kind in ("S", "I", "R", "V"):
            species.append(Species(f"{kind}{i}", len(species)))
    return species


def _s(i: int) -> int:
    return 4 * (i - 1)


def _sir_common_reactions(n: int, p: SirParams, reactions: List[Reaction]):
    def add(reactant, product, rate):
        reactions.append(Reaction(Multiset(reactant), Multiset(product), rate,
                                  len(reactions)))

    for i in range(1, n + 1):
        add([(_s(i), 1)], [(_s(i) + 2, 1), (_s(i) + 3, 1)], p.vaccination)
    return add


def sir_star_model(n: int, p: SirParams) -> ModelDocument:
    """SIR with vaccination over a star with `n` locations: infections occur
    only between the center (location 1) and the leaves, at rate beta.

    Species per location i: S_i, I_i, R_i and the vaccination tracker V_i.
    The bundled initial partition is {S1}, {I1}, {R1}, {V1..Vn}, {rest}.
    """
    if n < 2:
        raise ValueError("a star needs at least 2 locations")
    species = _sir_species(n)
    reactions: List[Reaction] = []
    add = _sir_common_reactions(n, p, reactions)
    beta = RateInterval.exact(p.beta)
    for j in range(2, n + 1):
        # S1 + Ij -> I1 + Ij, then Sj + I1 -> Ij + I1
        add([(_s(1), 1), (_s(j) + 1, 1)], [(_s(1) + 1, 1), (_s(j) + 1, 1)], beta)
        add([(_s(j), 1), (_s(1) + 1, 1)], [(_s(j) + 1, 1), (_s(1) + 1, 1)], beta)
    gamma = RateInterval.exact(p.gamma)
    eta = RateInterval.exact(p.eta)
    for i in range(1, n + 1):
        add([(_s(i) + 1, 1)], [(_s(i) + 2, 1)], gamma)
    for i in range(1, n + 1):
        add([(_s(i) + 2, 1)], [(_s(i), 1)], eta)
    net = ReactionNetwork(species, reactions)
    blocks = [
        (_s(1),), (_s(1) + 1,), (_s(1) + 2,),
        tuple(_s(i) + 3 for i in range(1, n + 1)),
        tuple(idx for i in range(2, n + 1) for idx in (_s(i), _s(i) + 1, _s(i) + 2)),
    ]
    return ModelDocument(net, Partition(blocks, net.n_species))


def sir_network_model(graph: EdgeListGraph, p: SirParams,
                      uncertainty_halfwidth: Optional[float] = None
                      ) -> ModelDocument:
    """SIR with vaccination over a weighted directed graph: each edge i -> j
    with weight w adds an infection S_j + I_i -> I_j + I_i at rate w, or at
    the interval [w - hw, w + hw] when an uncertainty halfwidth is given.
    Locations are numbered by node order; the bundled initial partition
    groups species by type across all locations."""
    n = graph.n_nodes
    if n < 1:
        raise ValueError("graph has no nodes")
    species = _sir_species(n)
    reactions: List[Reaction] = []
    add = _sir_common_reactions(n, p, reactions)
    for src, dst, w in graph.edges:
        if uncertainty_halfwidth is None:
            rate = RateInterval.exact(w)
        else:
            lo = w - uncertainty_halfwidth
            if lo < 0:
                raise ValueError(
                    f"uncertainty halfwidth makes interval endpoint negative ({lo})")
            rate = RateInterval(lo, w + uncertainty_halfwidth)
        i, j = src + 1, dst + 1
        add([(_s(j), 1), (_s(i) + 1, 1)], [(_s(j) + 1, 1), (_s(i) + 1, 1)], rate)
    gamma = RateInterval.exact(p.gamma)
    eta = RateInterval.exact(p.eta)
    for i in range(1, n + 1):
        add([(_s(i) + 1, 1)], [(_s(i) + 2, 1)], gamma)
    for i in range(1, n + 1):
        add([(_s(i) + 2, 1)], [(_s(i), 1)], eta)
    net = ReactionNetwork(species, reactions)
    blocks = [tuple(_s(i) + k for i in range(1, n + 1)) for k in range(4)]
    return ModelDocument(net, Partition(blocks, net.n_species))


DEFAULT_ASSOCIATION = RateInterval(9.95, 10.05)
DEFAULT_DISSOCIATION = RateInterval(0.05, 0.15)


def multisite_binding_model(n: int,
                            assoc: RateInterval = DEFAULT_ASSOCIATION,
                            dissoc: RateInterval = DEFAULT_DISSOCIATION,
                            max_sites: int = 20) -> ModelDocument:
    """Reversible binding of ligand B to a substrate with `n` sites.

    Species: B plus one A<bits> per site-occupancy pattern (2^n + 1 in
    total). Every free site can bind one B and every occupied site can
    release it, giving n * 2^(n-1) reactions in each direction. The bundled
    initial partition is the single all-species block.
    """
    if n < 1:
        raise ValueError("at least one binding site required")
    if n > max_sites:
        raise ValueError(f"n = {n} exceeds the configured cap of {max_sites} sites")
    patterns = ["".join(bits) for bits in iter_product("01", repeat=n)]
    species = [Species("B", 0)]
    index = {}
    for b in patterns:
        index[b] = len(species)
        species.append(Species(f"A{b}", len(species)))
    reactions: List[Reaction] = []

    def add(reactant, product, rate):
        reactions.append(Reaction(Multiset(reactant), Multiset(product), rate,
                                  len(reactions)))

    for b in patterns:
        for i, bit in enumerate(b):
            if bit == "0":
                up = b[:i] + "1" + b[i + 1:]
                add([(index[b], 1), (0, 1)], [(index[up], 1)], assoc)
    for b in patterns:
        for i, bit in enumerate(b):
            if bit == "1":
                down = b[:i] + "0" + b[i + 1:]
                add([(index[b], 1)], [(index[down], 1), (0, 1)], dissoc)
    net = ReactionNetwork(species, reactions)
    return ModelDocument(net, Partition.one_block(net.n_species))
