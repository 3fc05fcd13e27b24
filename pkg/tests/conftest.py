import random

import pytest

import crnlump as cl
from crnlump.model import (Multiset, Partition, RateInterval, Reaction,
                           ReactionNetwork, Species)

# Two-site reversible binding with sitewise-symmetric rate intervals: the
# binding/unbinding pair of site 1 mirrors the pair of site 2, which makes
# {A01, A10} lumpable while keeping the two sites kinetically distinct.
TWO_SITE_TEXT = """species B A00 A01 A10 A11
A00 + B -> A10 , [1.0 : 2.0]
A10 -> A00 + B , [0.5 : 0.75]
A00 + B -> A01 , [1.0 : 2.0]
A01 -> A00 + B , [0.5 : 0.75]
A10 + B -> A11 , [1.25 : 2.25]
A11 -> A10 + B , [0.25 : 0.4]
A01 + B -> A11 , [1.25 : 2.25]
A11 -> A01 + B , [0.25 : 0.4]
partition { B } { A00 } { A01 A10 } { A11 }
"""


@pytest.fixture
def two_site_doc():
    return cl.parse_model(TWO_SITE_TEXT)


@pytest.fixture
def two_site(two_site_doc):
    return two_site_doc.network


@pytest.fixture
def two_site_partition(two_site_doc):
    return two_site_doc.initial_partition


def perturb_rate(net: ReactionNetwork, reaction_id: int, dlo: float = 0.0,
                 dhi: float = 0.0) -> ReactionNetwork:
    reactions = list(net.reactions)
    r = reactions[reaction_id]
    reactions[reaction_id] = Reaction(
        r.reactant, r.product, RateInterval(r.rate.lo + dlo, r.rate.hi + dhi), r.id)
    return ReactionNetwork(net.species, reactions, net.initial_state,
                           net.initial_concentration)


def random_network(rng: random.Random, max_species: int = 5,
                   max_reactions: int = 8) -> ReactionNetwork:
    """Random population-non-increasing network with rate values from a small
    palette and occasional transposed twin reactions, so nontrivial species
    equivalences actually occur."""
    k = rng.randint(2, max_species)
    m = rng.randint(1, max_reactions)
    species = [Species(f"S{i}", i) for i in range(k)]
    palette = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
    widths = [0.0, 0.25, 0.5]
    reactions = []
    while len(reactions) < m:
        size = rng.randint(1, 3)
        reactant = Multiset([(rng.randrange(k), 1) for _ in range(size)])
        psize = rng.randint(0, reactant.total)
        product = Multiset([(rng.randrange(k), 1) for _ in range(psize)])
        lo = rng.choice(palette)
        rate = RateInterval(lo, lo + rng.choice(widths))
        reactions.append(Reaction(reactant, product, rate, len(reactions)))
        if len(reactions) < m and rng.random() < 0.5 and k >= 2:
            a, b = rng.sample(range(k), 2)

            def swap(idx):
                return b if idx == a else (a if idx == b else idx)

            reactions.append(Reaction(
                Multiset([(swap(i), c) for i, c in reactant]),
                Multiset([(swap(i), c) for i, c in product]),
                rate, len(reactions)))
    return ReactionNetwork(species, reactions)


def random_partition(rng: random.Random, n: int) -> Partition:
    labels = [rng.randrange(1 + rng.randrange(n)) for _ in range(n)]
    blocks = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(lab, []).append(i)
    return Partition(blocks.values(), n)


def set_partitions(items):
    """All set partitions of a list (Bell-number enumeration)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [smaller[i] + [first]] + smaller[i + 1:]
        yield [[first]] + smaller
