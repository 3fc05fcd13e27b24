import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnlump.model import (Multiset, Partition, StructuralError,
                           block_projection, falling_binomial, refines)


def ms(*pairs):
    return Multiset(pairs)


class TestMultiset:
    def test_canonical_and_hashable(self):
        a = ms((3, 1), (1, 2))
        b = Multiset([(1, 1), (3, 1), (1, 1)])
        assert a == b and hash(a) == hash(b)
        assert a.entries == ((1, 2), (3, 1))

    def test_zero_counts_dropped(self):
        assert Multiset([(2, 0)]) == Multiset()
        assert len(Multiset([(2, 0), (1, 1)])) == 1

    def test_total_and_count(self):
        a = ms((0, 2), (4, 3))
        assert a.total == 5
        assert a.count(4) == 3 and a.count(1) == 0

    def test_add_subtract_contains(self):
        a = ms((0, 1), (1, 1))
        b = ms((1, 1))
        assert a.add(b) == ms((0, 1), (1, 2))
        assert a.subtract(b) == ms((0, 1))
        assert a.contains(b) and not b.contains(a)
        with pytest.raises(ValueError):
            b.subtract(a)

    def test_lexicographic_order(self):
        assert ms((0, 1)) < ms((0, 2))
        assert ms((0, 1)) < ms((1, 1))

    def test_format(self):
        names = ("B", "A")
        assert ms((0, 1), (1, 2)).format(names) == "B + 2 A"
        assert Multiset().format(names) == "0"


class TestPartition:
    def test_canonical_block_order(self):
        p = Partition([[4], [1, 3], [0, 2]], 5)
        assert p.blocks == ((0, 2), (1, 3), (4,))
        assert p.block_of == (0, 1, 0, 1, 2)
        assert p.representatives == (0, 1, 4)

    def test_validation(self):
        with pytest.raises(StructuralError):
            Partition([[0, 1]], 3)  # not covering
        with pytest.raises(StructuralError):
            Partition([[0, 1], [1, 2]], 3)  # overlap
        with pytest.raises(StructuralError):
            Partition([[0], [], [1]], 2)  # empty block
        with pytest.raises(StructuralError):
            Partition([[0, 5]], 2)  # out of range


class TestBlockProjection:
    # universe: B=0, A00=1, A01=2, A10=3, A11=4
    PART = Partition([[0], [1], [2, 3], [4]], 5)

    def test_pair_matches_double(self):
        one_each = ms((2, 1), (3, 1))  # A01 + A10
        double = ms((2, 2))            # 2 A01
        assert block_projection(one_each, self.PART).counts == (0, 0, 2, 0)
        assert block_projection(one_each, self.PART) == block_projection(double, self.PART)

    def test_empty(self):
        assert block_projection(Multiset(), self.PART).counts == (0, 0, 0, 0)

    def test_distinct_classes(self):
        mixed = ms((1, 1), (3, 1))  # A00 + A10
        assert block_projection(mixed, self.PART).counts == (0, 1, 1, 0)
        assert block_projection(mixed, self.PART) != block_projection(ms((2, 2)), self.PART)

    def test_species_outside_partition(self):
        with pytest.raises(StructuralError):
            block_projection(ms((7, 1)), self.PART)


class TestFallingBinomial:
    def test_triple_choose_double(self):
        assert falling_binomial(ms((0, 3)), ms((0, 2))) == 3

    def test_product_of_singles(self):
        sigma = ms((2, 1), (3, 1), (0, 1))  # A01 + A10 + B
        rho = ms((2, 1), (0, 1))            # A01 + B
        assert falling_binomial(sigma, rho) == 1

    def test_insufficient_copies(self):
        assert falling_binomial(ms((0, 1)), ms((0, 2))) == 0

    def test_empty_reactant_always_one(self):
        assert falling_binomial(ms((0, 2)), Multiset()) == 1


class TestRefines:
    def test_singletons_refine_everything(self):
        fine = Partition.singletons(5)
        coarse = Partition([[0, 2, 4], [1, 3]], 5)
        assert refines(fine, coarse)

    def test_straddling_blocks(self):
        # {A00, A01} straddles {A00} and {A01, A10}
        fine = Partition([[1, 2], [3, 4], [0]], 5)
        coarse = Partition([[1], [2, 3], [4], [0]], 5)
        assert not refines(fine, coarse)

    def test_reflexive(self):
        p = Partition([[0, 1], [2]], 3)
        assert refines(p, p)

    def test_universe_mismatch(self):
        with pytest.raises(StructuralError):
            refines(Partition.singletons(3), Partition.singletons(4))


@st.composite
def partitions(draw, n):
    labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    blocks = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(lab, []).append(i)
    return Partition(blocks.values(), n)


@settings(max_examples=60)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n), partitions(n), partitions(n), partitions(n))))
def test_refines_is_a_partial_order(data):
    n, p, q, r = data
    assert refines(p, p)
    if refines(p, q) and refines(q, p):
        assert p == q
    if refines(p, q) and refines(q, r):
        assert refines(p, r)


@st.composite
def multisets(draw, n):
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(1, 3)),
                          max_size=5))
    return Multiset(pairs)


@settings(max_examples=80)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n), multisets(n), multisets(n))))
def test_falling_binomial_zero_iff_not_contained(data):
    n, sigma, rho = data
    assert (falling_binomial(sigma, rho) == 0) == (not sigma.contains(rho))


@settings(max_examples=80)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n), partitions(n), multisets(n), multisets(n))))
def test_projection_separates_exactly_the_lifted_classes(data):
    n, part, a, b = data
    same_proj = block_projection(a, part) == block_projection(b, part)
    per_block_equal = all(
        sum(a.count(i) for i in blk) == sum(b.count(i) for i in blk)
        for blk in part.blocks)
    assert same_proj == per_block_equal
