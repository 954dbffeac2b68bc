import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixlab.errors import DomainError, InvalidInputError
from mixlab.group_core import (
    GroupElement,
    NORM_METRIC_BRACKET,
    GroupTuple,
    a_diag,
    adjoint_norm,
    ball_radial_max,
    cartan_decompose,
    haar_cartan_density_sl2,
    iwasawa_decompose,
    k_rot,
    lie_basis,
    max_nilpotent_direction,
    norm_metric_ratio,
    pairwise_distances,
    random_sl,
    riemannian_distance,
    root_contraction_check,
    sample_ball,
    sample_ball_batch,
    simple_roots,
    tuple_stats,
    u_shear,
)

seeds = st.integers(0, 2**32 - 1)


def test_group_element_rejects_bad_det():
    with pytest.raises(InvalidInputError):
        GroupElement(np.diag([2.0, 1.0]))
    with pytest.raises(InvalidInputError):
        GroupElement(np.array([[np.nan, 0], [0, 1]]))
    g = GroupElement.normalized(np.diag([4.0, 1.0]))
    assert np.isclose(np.linalg.det(g.entries), 1.0)


def test_identity_decompositions():
    c = cartan_decompose(np.eye(3))
    assert np.allclose(c.singular_values, 1)
    w = iwasawa_decompose(np.eye(2))
    assert np.allclose(w.u, np.eye(2)) and np.allclose(w.a, np.eye(2)) and np.allclose(w.k, np.eye(2))


def test_cartan_of_known_element():
    g = k_rot(0.3) @ a_diag(5.0) @ k_rot(-1.1)
    c = cartan_decompose(g)
    assert np.allclose(c.singular_values, [5.0, 0.2])
    assert np.allclose(c.reconstruct(), g, atol=1e-12)


def test_iwasawa_of_shear():
    g = u_shear(2.0) @ a_diag(3.0) @ k_rot(0.4)
    w = iwasawa_decompose(g)
    assert np.allclose(w.u, u_shear(2.0))
    assert np.allclose(np.diag(w.a), [3.0, 1 / 3])
    assert np.allclose(w.k, k_rot(0.4))


@given(seeds, st.sampled_from([2, 3, 4]))
def test_decompositions_round_trip(seed, d):
    g = random_sl(d, np.random.default_rng(seed))
    c = cartan_decompose(g)
    assert np.allclose(c.reconstruct(), g, atol=1e-8 * max(1, np.abs(g).max()))
    assert np.isclose(np.linalg.det(c.k1), 1) and np.isclose(np.linalg.det(c.k2), 1)
    assert np.all(np.diff(c.singular_values) <= 0)
    w = iwasawa_decompose(g)
    assert np.allclose(w.reconstruct(), g, atol=1e-8 * max(1, np.abs(g).max()))
    assert np.allclose(np.tril(w.u, -1), 0) and np.allclose(np.diag(w.u), 1)
    assert np.all(np.diag(w.a) > 0)
    assert np.allclose(w.k @ w.k.T, np.eye(d), atol=1e-10)


def test_simple_roots_and_contraction():
    a = np.array([4.0, 1.0, 0.25])
    assert simple_roots(a) == [4.0, 4.0]
    assert root_contraction_check(a, 1) and root_contraction_check(a, 2)
    with pytest.raises(InvalidInputError):
        root_contraction_check(a, 3)
    with pytest.raises(InvalidInputError):
        root_contraction_check([1.0, 2.0, 0.5], 1)


@given(seeds)
def test_root_contraction_holds_on_A_plus(seed):
    rng = np.random.default_rng(seed)
    a = np.sort(np.exp(rng.normal(size=4)))[::-1]
    assert all(root_contraction_check(a, i) for i in range(1, 4))


def test_lie_basis_orthonormal_traceless():
    for d in (2, 3):
        b = lie_basis(d)
        assert len(b) == d * d - 1
        gram = np.einsum("kij,lij->kl", b, b)
        assert np.allclose(gram, np.eye(len(b)))
        assert np.allclose(np.trace(b, axis1=1, axis2=2), 0)


@given(seeds)
def test_adjoint_norm_properties(seed):
    rng = np.random.default_rng(seed)
    g, h = random_sl(2, rng), random_sl(2, rng)
    assert adjoint_norm(g) >= 1 - 1e-12
    assert adjoint_norm(g @ h) <= adjoint_norm(g) * adjoint_norm(h) * (1 + 1e-9)
    # for SL(2) the adjoint norm is the square of the operator norm
    assert np.isclose(adjoint_norm(g), np.linalg.norm(g, 2) ** 2, rtol=1e-9)


@given(seeds)
def test_distance_left_invariant_and_triangle(seed):
    rng = np.random.default_rng(seed)
    g, h, k, x = (random_sl(2, rng) for _ in range(4))
    assert np.isclose(riemannian_distance(x @ g, x @ h), riemannian_distance(g, h), atol=1e-8)
    assert riemannian_distance(g, k) <= riemannian_distance(g, h) + riemannian_distance(h, k) + 1e-9


def test_distance_along_diagonal():
    assert np.isclose(riemannian_distance(np.eye(2), a_diag(np.exp(1.0))), np.sqrt(2.0))
    D = pairwise_distances([np.eye(2), a_diag(2.0), a_diag(4.0)])
    assert np.allclose(D, D.T) and np.allclose(np.diag(D), 0)


def test_haar_density_domain():
    assert haar_cartan_density_sl2(1.0) == 0.0
    with pytest.raises(DomainError):
        haar_cartan_density_sl2(0.5)


def test_ball_sampling_support_and_radial_law():
    rng = np.random.default_rng(3)
    t = 6.0
    g = sample_ball_batch(t, 20000, rng)
    fro2 = (g ** 2).sum(axis=(1, 2))
    assert np.all(fro2 < t * t) and np.allclose(np.linalg.det(g), 1)
    # ||g||_F^2 is uniform on [2, t^2] under Haar restricted to B_t
    u = (fro2 - 2) / (t * t - 2)
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / len(u))
    assert ball_radial_max(t) ** 2 + ball_radial_max(t) ** -2 == pytest.approx(t * t)
    with pytest.raises(DomainError):
        sample_ball(1.0, 0)


def test_sample_ball_deterministic():
    assert np.array_equal(sample_ball(5.0, 11).entries, sample_ball(5.0, 11).entries)


def test_tuple_validation():
    with pytest.raises(InvalidInputError):
        GroupTuple((np.eye(2),))
    with pytest.raises(InvalidInputError):
        GroupTuple((np.eye(2), np.eye(3)))


def test_max_nilpotent_direction_for_diagonal():
    Z, val = max_nilpotent_direction(a_diag(3.0))
    assert np.isclose(val, 9.0)
    assert np.allclose(np.abs(Z), [[0, 1], [0, 0]], atol=1e-6)


@given(seeds)
def test_tuple_stats_ordering(seed):
    rng = np.random.default_rng(seed)
    gs = [random_sl(2, rng) for _ in range(3)]
    s = tuple_stats(gs)
    assert s.N <= s.Q
    assert np.all(np.diff(s.weights) <= 1e-12)
    assert np.isclose(s.weights[0], 1.0, atol=1e-6)


@given(seeds, st.sampled_from([2, 3]), st.floats(0.5, 20.0))
def test_norm_metric_bracket(seed, d, scale):
    q = norm_metric_ratio(random_sl(d, np.random.default_rng(seed), scale=scale))
    if q is not None:
        assert NORM_METRIC_BRACKET[0] <= q <= NORM_METRIC_BRACKET[1]


def test_norm_metric_ratio_near_K_is_none():
    assert norm_metric_ratio(k_rot(0.3)) is None
