import numpy as np
import pytest

from conftest import NIL, single, zero_tuple
from qdilate.kernel import (KernelContext, Window, WindowTooLarge, appendix_identity_residual,
                            composition_residual, doubly_coincidence_residual, eval_kernel, find_negative_window,
                            gram_matrix, gram_min_eig, kernel_star_symmetry_residual, phase_twist)
from qdilate.optuple import TUPLE_KINDS, all_subsets, generate_clock_shift, generate_random, min_eig, opnorm
from qdilate.qword import GroupElement, parse_word

rng = np.random.default_rng(2024)


def rand_el(k, lo=-3, hi=3):
    npairs = k * (k - 1) // 2
    return GroupElement(tuple(int(x) for x in rng.integers(lo, hi + 1, npairs)),
                        tuple(int(x) for x in rng.integers(lo, hi + 1, k)))


def test_identity_is_identity():
    ctx = KernelContext(generate_random("norm_sum", 4, 3, 1))
    assert np.array_equal(eval_kernel(ctx, GroupElement.identity(3)), np.eye(4))


def test_single_generator_negative_power():
    t = generate_random("norm_sum", 4, 1, 3)
    ctx = KernelContext(t)
    g = GroupElement.from_word((-3,))
    assert np.allclose(eval_kernel(ctx, g), np.linalg.matrix_power(t[1], 3).conj().T)


def test_mixed_sign_literal():
    # s1 s2^{-1}: phase q12^{-1}, operator T2^* T1
    t = generate_random("norm_sum", 4, 2, 5)
    ctx = KernelContext(t)
    g = parse_word("s1 s2^-1", 2)
    assert g == GroupElement((0,), (1, -1))
    expected = np.conj(t.q.value(1, 2)) * t[2].conj().T @ t[1]
    assert np.allclose(eval_kernel(ctx, g), expected)
    # s2^{-1} s1 normalises with an extra q12 and has no twist
    h = parse_word("s2^-1 s1", 2)
    assert np.allclose(eval_kernel(ctx, h), t.q.value(1, 2) * expected)


def test_star_symmetry_examples():
    t = generate_random("norm_sum", 4, 2, 0)
    ctx = KernelContext(t)
    assert kernel_star_symmetry_residual(ctx, GroupElement.identity(2)) == 0
    one = KernelContext(single(0.7 * NIL + 0.2 * np.eye(2)))
    assert kernel_star_symmetry_residual(one, GroupElement.from_word((2,))) < 1e-15


@pytest.mark.parametrize("kind", TUPLE_KINDS)
def test_star_and_composition(kind):
    t = generate_random(kind, 6, 3, 8)
    ctx = KernelContext(t)
    for _ in range(60):
        assert kernel_star_symmetry_residual(ctx, rand_el(3)) < 1e-10
        n, m = rng.integers(0, 3, 3), rng.integers(0, 3, 3)
        assert composition_residual(ctx, n, m) < 1e-10
    assert composition_residual(ctx, (0, 0, 0), (1, 2, 1)) < 1e-15


def test_composition_sign_matters():
    # the opposite sign convention fails on a genuinely twisted tuple
    t = generate_clock_shift(3, (0.9, 0.8))
    ctx = KernelContext(t)
    n, m = (0, 1), (1, 0)
    assert composition_residual(ctx, n, m) < 1e-12
    lhs = eval_kernel(ctx, GroupElement.from_word(n)) @ eval_kernel(ctx, GroupElement.from_word(m))
    wrong = t.q.value(1, 2) * eval_kernel(ctx, GroupElement.from_word((1, 1)))
    assert opnorm(lhs - wrong) > 0.1


def test_composition_rejects_negative():
    ctx = KernelContext(generate_clock_shift(3))
    with pytest.raises(ValueError):
        composition_residual(ctx, (-1, 0), (0, 0))


def test_k1_composition():
    ctx = KernelContext(single(0.5 * NIL + 0.3 * np.eye(2)))
    for a in range(4):
        for b in range(4):
            assert composition_residual(ctx, (a,), (b,)) < 1e-14


def test_doubly_coincidence():
    ctx = KernelContext(generate_clock_shift(5, (0.7, 0.9)))
    assert doubly_coincidence_residual(ctx, GroupElement.identity(2)) == 0
    for _ in range(50):
        assert doubly_coincidence_residual(ctx, rand_el(2)) < 1e-10
    one = KernelContext(single(0.6 * NIL))
    assert doubly_coincidence_residual(one, GroupElement.from_word((-2,))) == 0


def test_coincidence_fails_without_doubly():
    ctx = KernelContext(generate_random("norm_sum", 4, 2, 3))
    worst = max(doubly_coincidence_residual(ctx, GroupElement.from_word((1, -1))),
                doubly_coincidence_residual(ctx, GroupElement.from_word((-1, 1))))
    assert worst > 1e-6


def test_window_elements():
    w = Window((1, 2))
    els = w.elements()
    assert len(els) == 15 == w.size()
    assert els[0].word_exp == (-1, -2) and els[-1].word_exp == (1, 2)
    wp = Window((1, 1), include_phase_coords=True)
    assert wp.size() == 27
    assert wp.contains(GroupElement((1,), (0, 1)))
    assert not w.contains(GroupElement((1,), (0, 1)))


def test_gram_zero_tuple():
    ctx = KernelContext(zero_tuple(2, 2))
    g = gram_matrix(ctx, Window.uniform(2, 1))
    assert np.array_equal(g, np.eye(18))


def test_gram_single_contraction_toeplitz():
    t = 0.5 * NIL + 0.4 * np.eye(2)
    ctx = KernelContext(single(t))
    g = gram_matrix(ctx, Window((1,)))
    i, t2 = np.eye(2), t @ t
    expected = np.block([[i, t, t2], [t.conj().T, i, t], [t2.conj().T, t.conj().T, i]])
    assert np.allclose(g, expected)
    assert min_eig(g) >= -1e-10


def test_gram_nilpotent_negative(nil_pair):
    assert gram_min_eig(KernelContext(nil_pair), Window((1, 1))) < -1e-3


def test_gram_cap():
    ctx = KernelContext(generate_random("doubly", 6, 3, 1))
    with pytest.raises(WindowTooLarge):
        gram_matrix(ctx, Window.uniform(3, 4))


@pytest.mark.parametrize("kind", TUPLE_KINDS)
def test_phase_twist(kind):
    ctx = KernelContext(generate_random(kind, 2, 2, 4))
    full, twisted = phase_twist(ctx, Window((1, 1), include_phase_coords=True))
    assert opnorm(full - twisted) < 1e-12
    base = gram_matrix(ctx, Window((1, 1)))
    # spectrum of the full Gram is 3 * eigenvalues(base) padded with zeros
    ev_full = np.sort(np.linalg.eigvalsh(full))[-base.shape[0]:]
    assert np.allclose(ev_full, 3 * np.sort(np.linalg.eigvalsh(base)), atol=1e-10)


def test_phase_twist_preserves_negativity(nil_pair):
    ctx = KernelContext(nil_pair)
    full, _ = phase_twist(ctx, Window((1, 1), include_phase_coords=True))
    assert min_eig(full) < -1e-3


@pytest.mark.parametrize("kind", TUPLE_KINDS)
def test_brehmer_pass_gives_psd_windows(kind):
    ctx = KernelContext(generate_random(kind, 4, 2, 6))
    for L in (1, 2, 3):
        assert gram_min_eig(ctx, Window.uniform(2, L)) >= -1e-8


def test_negative_window_search(nil_pair):
    rep = find_negative_window(KernelContext(nil_pair), max_L=2)
    assert rep.status == "negative" and rep.window.L == (1, 1)
    ok = find_negative_window(KernelContext(generate_clock_shift(3, (0.5, 0.5))), max_L=2)
    assert ok.status == "inconclusive"


def test_appendix_identity():
    t = generate_clock_shift(3, (0.8, 0.6))
    ctx = KernelContext(t)
    for v in all_subsets(2):
        for w in all_subsets(2):
            assert appendix_identity_residual(ctx, v, w) < 1e-10
    t3 = KernelContext(generate_random("doubly", 4, 3, 2))
    for v in all_subsets(3):
        assert appendix_identity_residual(t3, v, v) < 1e-10
        assert appendix_identity_residual(t3, (), v) < 1e-10


def test_cache_consistent():
    t = generate_random("norm_sum", 4, 2, 9)
    cached, fresh = KernelContext(t), KernelContext(t, cache=False)
    for _ in range(30):
        g = rand_el(2)
        a = eval_kernel(cached, g)
        assert np.array_equal(a, eval_kernel(cached, g))
        assert np.allclose(a, eval_kernel(fresh, g))
