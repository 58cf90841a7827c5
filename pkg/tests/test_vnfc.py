import numpy as np
import pytest

from conftest import single
from qdilate.dilate import dilate
from qdilate.kernel import KernelContext, Window, eval_kernel
from qdilate.optuple import TUPLE_KINDS, generate_clock_shift, generate_random, opnorm
from qdilate.qword import GroupElement, pair_list
from qdilate.vnfc import (DepthExceeded, MonomialCombination, PreconditionError, apply_phi, ideal_generator,
                          monomial_contractivity, random_combination, vn_compare)


def test_apply_phi_examples():
    t = generate_random("norm_sum", 3, 2, 1)
    ctx = KernelContext(t)
    f = MonomialCombination([(1, GroupElement.identity(2))])
    assert np.allclose(apply_phi(ctx, f), np.eye(3))
    g = GroupElement.from_word((2, 0))
    assert np.allclose(apply_phi(ctx, MonomialCombination([(1, g)])), eval_kernel(ctx, g))


@pytest.mark.parametrize("kind", TUPLE_KINDS)
def test_ideal_annihilated(kind):
    t = generate_random(kind, 6, 3, 4)
    ctx = KernelContext(t)
    for i, j in pair_list(3):
        assert opnorm(apply_phi(ctx, ideal_generator(i, j, 3, t.q))) < 1e-10


def test_from_words():
    t = generate_clock_shift(3)
    f = MonomialCombination.from_words([(1, "s1 s2"), (-t.q.value(1, 2), "s2 s1")], t.q)
    assert opnorm(apply_phi(KernelContext(t), f)) < 1e-12


def test_monomial_contractivity(nil_pair):
    ctx = KernelContext(generate_random("isometric", 4, 2, 2))
    sample = [GroupElement((0,), (a, b)) for a in range(-2, 3) for b in range(-2, 3)]
    assert monomial_contractivity(ctx, sample) <= 1 + 1e-10
    assert monomial_contractivity(ctx, [GroupElement.identity(2)]) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(PreconditionError):
        monomial_contractivity(KernelContext(nil_pair), sample)


def test_vn_single_monomial():
    t = generate_clock_shift(3, (0.5, 0.9))
    res = dilate(t, Window((2, 2)))
    f = MonomialCombination([(1, GroupElement.from_word((1, -2)))])
    lhs, rhs = vn_compare(KernelContext(t), f, res)
    assert lhs <= 1 + 1e-8 and rhs <= 1 + 1e-8


def test_vn_zero_contraction():
    t = single(np.zeros((1, 1)))
    res = dilate(t, Window((1,)))
    f = MonomialCombination([(1, GroupElement.identity(1)), (1, GroupElement.from_word((1,)))])
    lhs, rhs = vn_compare(KernelContext(t), f, res)
    assert lhs == pytest.approx(1.0)
    assert 1 - 1e-8 <= rhs <= 2 + 1e-8


def test_vn_block_matrix():
    t = generate_clock_shift(3, (0.7, 0.7))
    ctx = KernelContext(t)
    res = dilate(t, Window((2, 2)))
    rng = np.random.default_rng(5)
    f = [[random_combination(2, (2, 2), rng) for _ in range(2)] for _ in range(2)]
    lhs, rhs = vn_compare(ctx, f, res)
    assert lhs <= rhs + 1e-8
    assert apply_phi(ctx, f).shape == (6, 6)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_complete_contractivity_blocks(n):
    t = generate_random("norm_sum", 2, 2, n)
    ctx = KernelContext(t)
    res = dilate(t, Window((1, 1)))
    rng = np.random.default_rng(n)
    for _ in range(5):
        f = [[random_combination(2, (1, 1), rng, 3) for _ in range(n)] for _ in range(n)]
        lhs, rhs = vn_compare(ctx, f, res)
        assert lhs <= rhs + 1e-8


def test_depth_exceeded():
    t = generate_clock_shift(2)
    res = dilate(t, Window((1, 1)))
    f = MonomialCombination([(1, GroupElement.from_word((2, 0)))])
    with pytest.raises(DepthExceeded):
        vn_compare(KernelContext(t), f, res)


def test_mixed_k_rejected():
    with pytest.raises(ValueError):
        MonomialCombination([(1, GroupElement.identity(2)), (1, GroupElement.identity(3))])
