import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opframes.adjointable import (
    AdjointableOp,
    BlockOperator,
    apply,
    compose,
    douglas_check,
    douglas_factor,
    is_co_isometry,
    is_positive,
    op_norm,
    pseudo_inverse,
    surjectivity_bounds,
    ttstar_bounds,
)
from opframes.algebra import positivity_check
from opframes.errors import MalformedElementError, NotInjectiveError, PreconditionError, ShapeMismatchError
from opframes.frames import rank_one
from opframes.lemmas import engineered_douglas_pair
from opframes.module import ModuleVector, VectorSequence, inner_product, norm, random_unit_vector
from oracles import apply_blockwise, gaussian, inner_blockwise, random_coisometry, top_singular

seeds = st.integers(0, 2**32 - 1)
kn = st.tuples(st.integers(1, 3), st.integers(1, 4))


def rand_op(rng, k, n):
    return AdjointableOp(gaussian(rng, (n * k, n * k)), k, n)


def rand_vec(rng, k, n):
    return ModuleVector(gaussian(rng, (n, k, k)))


def test_identity_and_zero_action():
    rng = np.random.default_rng(0)
    x = rand_vec(rng, 2, 3)
    assert np.array_equal(apply(AdjointableOp.identity(2, 3), x).blocks, x.blocks)
    assert not np.any(apply(AdjointableOp.zero(2, 3), x).blocks)


def test_apply_matches_blockwise_action():
    rng = np.random.default_rng(1)
    t, x = rand_op(rng, 2, 3), rand_vec(rng, 2, 3)
    ref = apply_blockwise(t.flat, list(x.blocks), 2)
    assert np.allclose(apply(t, x).blocks, np.array(ref), atol=1e-12)


def test_adjoint_identity_random():
    rng = np.random.default_rng(2)
    for _ in range(20):
        t, x, y = rand_op(rng, 3, 2), rand_vec(rng, 3, 2), rand_vec(rng, 3, 2)
        lhs = inner_blockwise(apply_blockwise(t.flat, list(x.blocks), 3), list(y.blocks))
        rhs = inner_product(x, apply(t.adjoint(), y)).entries
        assert np.allclose(lhs, rhs, atol=1e-11)


def test_norm_examples():
    assert op_norm(AdjointableOp.identity(2, 2)) == pytest.approx(1.0)
    assert op_norm(3 * AdjointableOp.identity(2, 2)) == pytest.approx(3.0)
    rng = np.random.default_rng(3)
    t = rand_op(rng, 2, 2)
    assert op_norm(t) == pytest.approx(top_singular(t.flat), rel=1e-8)


def test_norm_domination_500_trials():
    rng = np.random.default_rng(4)
    for j in range(500):
        k, n = 1 + j % 3, 1 + j % 4
        t, x = rand_op(rng, k, n), rand_vec(rng, k, n)
        tx = apply(t, x)
        assert positivity_check(op_norm(t) ** 2 * inner_product(x, x) - inner_product(tx, tx))


def test_pseudo_inverse_examples():
    rng = np.random.default_rng(5)
    t = rand_op(rng, 2, 2)
    assert np.allclose(pseudo_inverse(t).flat, np.linalg.inv(t.flat), atol=1e-10)
    assert not np.any(pseudo_inverse(AdjointableOp.zero(2, 2)).flat)
    with pytest.raises(ValueError):
        pseudo_inverse(t, rank_tol=-1)


def test_penrose_identities_rank_deficient():
    rng = np.random.default_rng(6)
    for _ in range(20):
        m = gaussian(rng, (6, 2)) @ gaussian(rng, (2, 6))
        a = m
        p = pseudo_inverse(AdjointableOp(m, 2, 3)).flat
        tol = 1e-8 * max(np.linalg.norm(a, 2), 1)
        assert np.linalg.norm(a @ p @ a - a, 2) <= tol
        assert np.linalg.norm(p @ a @ p - p, 2) <= 1e-8 * max(np.linalg.norm(p, 2), 1)
        assert np.linalg.norm((a @ p).conj().T - a @ p, 2) <= 1e-8
        assert np.linalg.norm((p @ a).conj().T - p @ a, 2) <= 1e-8


def test_douglas_trivial_cases():
    rng = np.random.default_rng(7)
    s = rand_op(rng, 2, 2)
    res = douglas_check(s, s)
    assert res.included and res.consistent
    assert np.allclose(res.factor.flat, np.eye(4), atol=1e-8)

    proj = AdjointableOp(np.diag([1.0, 1.0, 0.0, 0.0]), 2, 2)
    res = douglas_check(AdjointableOp.identity(2, 2), proj)
    assert not res.included and res.factor is None and res.consistent


def test_douglas_constructed_factor():
    rng = np.random.default_rng(8)
    for _ in range(30):
        s = rand_op(rng, 2, 3)
        q0 = rand_op(rng, 2, 3)
        t = compose(s, q0)
        res = douglas_check(t, s)
        assert res.included
        assert np.linalg.norm(compose(s, res.factor).flat - t.flat, 2) <= 1e-8 * op_norm(t)


def test_douglas_lambda_is_largest_admissible():
    rng = np.random.default_rng(9)
    s = rand_op(rng, 1, 4)
    t = compose(s, rand_op(rng, 1, 4))
    res = douglas_check(t, s)
    tt, ss = t.flat.conj().T @ t.flat, s.flat.conj().T @ s.flat
    assert np.linalg.eigvalsh(ss - res.lam * tt)[0] >= -1e-9 * np.linalg.norm(ss, 2)
    assert np.linalg.eigvalsh(ss - 1.01 * res.lam * tt)[0] < 0


def test_douglas_rectangular_shapes():
    with pytest.raises(ShapeMismatchError):
        douglas_factor(np.ones((2, 3)), np.ones((2, 4)))
    res = douglas_factor(np.zeros((3, 2)), np.ones((4, 2)))
    assert res.included and res.lam == np.inf


def _sampled_majorization(t, s, lam, rng, samples=200):
    """lam ||T* x||^2 <= ||S* x||^2 at random unit x (operators act as X @ M)."""
    tt, ss = t.flat.conj().T @ t.flat, s.flat.conj().T @ s.flat
    for _ in range(samples):
        x = random_unit_vector(t.k, t.n, rng).flat
        lhs = np.linalg.norm(x @ tt @ x.conj().T, 2)
        rhs = np.linalg.norm(x @ ss @ x.conj().T, 2)
        if lam * lhs > rhs * (1 + 1e-9) + 1e-12:
            return False
    return True


def test_douglas_equivalence_100_each():
    rng = np.random.default_rng(10)
    for j in range(200):
        k, n = 1 + j % 3, 1 + (j // 3) % 4
        base = rand_op(rng, k, n)
        want = j % 2 == 0
        t, s = engineered_douglas_pair(base, want, rng)
        res = douglas_check(t, s)
        assert res.consistent, res.statements
        assert res.included == want
        if want:
            assert _sampled_majorization(t, s, res.lam, rng)


@settings(max_examples=200, deadline=None)
@given(seeds, kn)
def test_composition_anti_isomorphism(seed, shape):
    k, n = shape
    rng = np.random.default_rng(seed)
    t, s = rand_op(rng, k, n), rand_op(rng, k, n)
    ts = compose(t, s).flat
    assert np.linalg.norm(ts - s.flat @ t.flat) <= 1e-12 * max(np.linalg.norm(ts), 1)
    x = rand_vec(rng, k, n)
    assert np.allclose(apply(compose(t, s), x).blocks, apply(t, apply(s, x)).blocks, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(seeds, kn, st.booleans())
def test_positivity_transport(seed, shape, make_psd):
    k, n = shape
    rng = np.random.default_rng(seed)
    g = gaussian(rng, (n * k, n * k))
    h = g @ g.conj().T if make_psd else g + g.conj().T
    t = AdjointableOp(h, k, n)
    w, v = np.linalg.eigh(h)
    if is_positive(t):
        for _ in range(10):
            x = rand_vec(rng, k, n)
            assert positivity_check(inner_product(apply(t, x), x))
    else:
        # rank-one witness from the most negative eigenvector
        x = ModuleVector.from_flat(rank_one(v[:, 0], k), k)
        assert not positivity_check(inner_product(apply(t, x), x))


def test_surjectivity_examples():
    b = surjectivity_bounds(AdjointableOp.identity(2, 2))
    assert b.surjective and b.m == pytest.approx(1) and b.M == pytest.approx(1)
    assert not surjectivity_bounds(AdjointableOp(np.diag([1.0, 0.0, 2.0]), 1, 3)).surjective
    with pytest.raises(PreconditionError):
        surjectivity_bounds(AdjointableOp([[0, 1], [0, 0]], 1, 2))


def test_surjectivity_sampling():
    rng = np.random.default_rng(11)
    g = gaussian(rng, (6, 6))
    h = AdjointableOp(g + g.conj().T, 2, 3)
    b = surjectivity_bounds(h)
    assert b.surjective
    for _ in range(500):
        x = random_unit_vector(2, 3, rng)
        r = norm(apply(h, x))
        assert b.m - 1e-9 <= r <= b.M + 1e-9


def test_ttstar_examples():
    b = ttstar_bounds(AdjointableOp.identity(2, 2))
    assert (b.lower, b.upper) == pytest.approx((1, 1))
    b = ttstar_bounds(2 * AdjointableOp.identity(2, 2))
    assert (b.lower, b.upper) == pytest.approx((4, 4))


def test_ttstar_random_against_eigensolve():
    rng = np.random.default_rng(12)
    for _ in range(50):
        t = rand_op(rng, 2, 2)
        b = ttstar_bounds(t)
        assert b.sandwich_ok
        lam = np.linalg.eigvalsh(t.flat @ t.flat.conj().T)[0]
        assert b.lower == pytest.approx(lam, rel=1e-9)


def test_ttstar_non_injective_witness():
    t = AdjointableOp(np.diag([1.0, 0.0, 2.0]), 1, 3)
    with pytest.raises(NotInjectiveError) as exc:
        ttstar_bounds(t)
    w = exc.value.near_kernel
    assert norm(w) > 0 and norm(apply(t, w)) <= 1e-12


def test_co_isometry():
    assert is_co_isometry(AdjointableOp.identity(2, 2))
    assert not is_co_isometry(2 * AdjointableOp.identity(2, 2))
    rng = np.random.default_rng(13)
    k = AdjointableOp(random_coisometry(rng, 6), 2, 3)
    assert is_co_isometry(k)
    assert np.linalg.norm(k.flat.conj().T @ k.flat - np.eye(6), 2) <= 1e-10


def test_operator_construction_errors():
    with pytest.raises(MalformedElementError):
        AdjointableOp(np.ones((3, 3)), 2)
    with pytest.raises(MalformedElementError):
        AdjointableOp(np.ones((2, 3)), 1)
    with pytest.raises(ShapeMismatchError):
        AdjointableOp.identity(1, 2) + AdjointableOp.identity(2, 1)


def test_from_blocks_convention():
    b = [[np.full((2, 2), 10 * i + j) for j in range(2)] for i in range(2)]
    t = AdjointableOp.from_blocks(b)
    assert t.shape == (2, 2)
    assert t.flat[0, 2] == 1 and t.flat[2, 0] == 10


def test_block_operator():
    rng = np.random.default_rng(14)
    a = gaussian(rng, (8, 8))
    l_op = BlockOperator(a, 2, 2)
    assert l_op.blocks == 2
    s = VectorSequence([rand_vec(rng, 2, 2), rand_vec(rng, 2, 2)])
    out = l_op(s)
    assert np.allclose(out.flat, s.flat @ a)
    with pytest.raises(ShapeMismatchError):
        l_op(VectorSequence([rand_vec(rng, 2, 2)]))
