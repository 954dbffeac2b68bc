import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixlab.errors import DomainError, ResourceError, UnsupportedError
from mixlab.group_core import a_diag, k_rot
from mixlab.harish import (
    KBiInvariantFunction,
    bi_k_translate,
    decay_exponent_bound,
    herz_bound,
    l2_norm_sq,
    regular_coeff,
    sector_angle,
    top_singular_sq,
    xi_general,
    xi_sl2,
)


def grid_oracle(phi, psi, t, n_s=400, n_th=800, n_k=4):
    """Midpoint rule on a (theta1, s, theta2) grid with explicit SVDs."""
    ds = (psi.t_max - 1.0) / n_s
    s = 1.0 + ds * (np.arange(n_s) + 0.5)
    th = 2 * np.pi * (np.arange(n_th) + 0.5) / n_th
    k1 = np.array([k_rot(x) for x in 2 * np.pi * np.arange(n_k) / n_k])
    total = 0.0
    for s_i in s:
        g = k1[:, None] @ a_diag(s_i) @ np.array([k_rot(x) for x in th])[None] @ a_diag(t)
        sig = np.linalg.svd(g, compute_uv=False)[..., 0]
        total += phi.profile(sig).mean() * psi.profile(s_i) * (s_i * s_i - s_i ** -2) / s_i
    return (2 * np.pi) ** 2 * total * ds


def test_xi_at_identity_and_domain():
    assert xi_sl2(1.0) == 1.0
    with pytest.raises(DomainError):
        xi_sl2(0.5)


def test_xi_matches_agm():
    # Xi(a(t)) = 1 / AGM(t, 1/t)
    for t in (1.5, 10.0, 1e3):
        a, b = t, 1 / t
        for _ in range(40):
            a, b = (a + b) / 2, np.sqrt(a * b)
        assert xi_sl2(t) == pytest.approx(1 / a, rel=1e-10)


def test_xi_general_agrees_with_xi_sl2():
    for t in (1.2, 3.0, 30.0):
        assert xi_general(a_diag(t)) == pytest.approx(xi_sl2(t), rel=1e-8)
    with pytest.raises(UnsupportedError):
        xi_general(np.eye(3))


@given(st.integers(0, 2**32 - 1))
def test_xi_bi_k_invariant(seed):
    rng = np.random.default_rng(seed)
    t = float(np.exp(rng.uniform(0, 3)))
    g = bi_k_translate(a_diag(t), *rng.uniform(0, 2 * np.pi, 2))
    assert abs(xi_general(g) - xi_sl2(t)) < 1e-8


def test_xi_monotone_and_log_over_t_scale():
    ts = [1, 2, 10, 100, 1000, 10000]
    xs = [xi_sl2(t) for t in ts]
    assert all(b < a for a, b in zip(xs, xs[1:]))
    # Xi(a(t)) ~ (4 / pi) log(t) / t for large t
    assert xi_sl2(1e6) * 1e6 / (4 / np.pi * np.log(1e6)) == pytest.approx(1, rel=0.1)


def test_sector_angle_and_exponent_bound():
    assert sector_angle(2.0, 8.0) == pytest.approx(2 * np.arcsin(0.5))
    with pytest.raises(DomainError):
        sector_angle(2.0, 3.0)
    with pytest.raises(UnsupportedError):
        decay_exponent_bound([2.0, 0.5])
    assert decay_exponent_bound([1.0, 1.0, 1.0]) == 1.0
    assert decay_exponent_bound([16.0, 1.0, 1 / 16]) == pytest.approx(256 ** (-0.24))


def test_top_singular_sq_matches_svd(rng):
    for _ in range(20):
        s, t = np.exp(rng.uniform(0, 2, 2))
        th = rng.uniform(0, 2 * np.pi)
        sv = np.linalg.svd(a_diag(s) @ k_rot(th) @ a_diag(t), compute_uv=False)[0]
        assert top_singular_sq(s, th, t) == pytest.approx(sv ** 2, rel=1e-10)


def test_bi_invariant_function(rng):
    f = KBiInvariantFunction.random(rng, t_max=4.0)
    g = bi_k_translate(a_diag(2.0), 0.3, 1.7)
    assert f(g) == pytest.approx(f.profile(2.0))
    assert f(a_diag(5.0)) == 0.0
    with pytest.raises(ResourceError):
        KBiInvariantFunction.random(rng, t_max=9.0)


def test_l2_norm_of_constant_profile():
    # profile 1 on [1, T) up to the spline shape: compare with direct quadrature
    f = KBiInvariantFunction((1.0, 2.0, 3.0), (1.0, 1.0, 0.0), (0.0, 0.0, 0.0))
    s = np.linspace(1, 3, 200001)
    direct = (2 * np.pi) ** 2 * np.trapezoid(f.profile(s) ** 2 * (s * s - s ** -2) / s, s)
    assert l2_norm_sq(f) == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("seed,t", [(1, 1.0), (2, 2.5), (3, 6.0)])
def test_regular_coeff_against_grid_oracle(seed, t):
    rng = np.random.default_rng(seed)
    phi = KBiInvariantFunction.random(rng, t_max=4.0)
    psi = KBiInvariantFunction.random(rng, t_max=3.0)
    exact = regular_coeff(phi, psi, t)
    assert exact == pytest.approx(grid_oracle(phi, psi, t), rel=2e-3)


def test_regular_coeff_at_identity_is_inner_product(rng):
    phi = KBiInvariantFunction.random(rng, t_max=3.0)
    assert regular_coeff(phi, phi, 1.0) == pytest.approx(l2_norm_sq(phi), rel=1e-6)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 4.0, 20.0, 100.0]))
def test_herz_inequality(seed, t):
    rng = np.random.default_rng(seed)
    phi = KBiInvariantFunction.random(rng)
    psi = KBiInvariantFunction.random(rng)
    assert abs(regular_coeff(phi, psi, t)) <= herz_bound(phi, psi, t) + 1e-3


def test_regular_coeff_guards(rng):
    phi = KBiInvariantFunction.random(rng, t_max=3.0)
    with pytest.raises(DomainError):
        regular_coeff(phi, phi, 0.5)


def test_regular_coeff_large_t_narrow_support():
    rng = np.random.default_rng(5)
    phi = KBiInvariantFunction.random(rng, t_max=7.5)
    psi = KBiInvariantFunction.random(rng, t_max=6.0)
    for t in (20.0, 40.0):
        ref = regular_coeff(phi, psi, t, rtol=1e-8, max_panels=4096)
        assert regular_coeff(phi, psi, t) == pytest.approx(ref, rel=1e-4)
    # sigma_1(g a(t)) >= t / s keeps the supports apart
    assert regular_coeff(phi, psi, 45.0) == 0.0
