import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixlab import homspace as hs
from mixlab.errors import DomainError, InvalidInputError, UnsupportedError
from mixlab.group_core import random_sl

seeds = st.integers(0, 2**32 - 1)
GAMMAS = [np.array(m, dtype=float) for m in ([[1, 1], [0, 1]], [[0, -1], [1, 0]], [[2, 1], [1, 1]], [[5, 2], [2, 1]])]


def shadow_of(g):
    h = np.linalg.inv(g)
    return (h[0, 0] * 1j + h[0, 1]) / (h[1, 0] * 1j + h[1, 1])


@given(seeds)
def test_reduce_lands_in_domain_and_keeps_coset(seed):
    rng = np.random.default_rng(seed)
    g = random_sl(2, rng, scale=3.0)
    x = hs.reduce(g)
    assert hs.in_fundamental_domain(x.shadow)
    gamma = np.linalg.solve(g, x.representative)
    assert np.allclose(gamma, np.round(gamma), atol=1e-6)
    assert round(np.linalg.det(gamma)) == 1


@given(seeds, st.sampled_from(range(len(GAMMAS))))
def test_reduce_is_coset_invariant(seed, k):
    g = random_sl(2, np.random.default_rng(seed))
    a, b = hs.reduce(g), hs.reduce(g @ GAMMAS[k])
    assert abs(a.shadow - b.shadow) < 1e-8
    assert abs(np.exp(2j * a.angle) - np.exp(2j * b.angle)) < 1e-8


def test_coords_round_trip():
    rng = np.random.default_rng(0)
    x, y, th = rng.uniform(-0.5, 0.5, 50), rng.uniform(1.0, 5.0, 50), rng.uniform(0, np.pi, 50)
    ok = x * x + y * y > 1
    g = hs.from_coords(x[ok], y[ok], th[ok])
    x2, y2, th2 = hs.coords_batch(g)
    assert np.allclose(x2, x[ok]) and np.allclose(y2, y[ok]) and np.allclose(th2, th[ok])
    assert np.allclose([shadow_of(m) for m in g], x[ok] + 1j * y[ok])


def test_reduce_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        hs.reduce(np.eye(3))
    with pytest.raises(InvalidInputError):
        hs.reduce(np.diag([2.0, 2.0]))


def test_mu_sampling_law():
    reps = hs.sample_mu_batch(100_000, np.random.default_rng(1))
    x, y, th = hs.coords_batch(reps)
    assert np.all(hs.in_fundamental_domain(x + 1j * y))
    # mu(y > 2) = (3/pi^2) * (1/2) * pi = 3 / (2 pi)
    p = 3 / (2 * np.pi)
    assert abs((y > 2).mean() - p) < 4 * np.sqrt(p * (1 - p) / len(y))
    assert abs(th.mean() - np.pi / 2) < 4 * np.pi / np.sqrt(12 * len(th))


@pytest.mark.parametrize("k", range(3))
def test_action_preserves_mu(k):
    g = random_sl(2, np.random.default_rng(k))
    rng = np.random.default_rng(100 + k)
    base = hs.sample_mu_batch(50_000, rng)
    moved = hs.act_batch(g, hs.sample_mu_batch(50_000, rng))
    for stat in (lambda r: hs.coords_batch(r)[1] > 2, lambda r: hs.coords_batch(r)[0] > 0, lambda r: hs.coords_batch(r)[2] < 1):
        a, b = stat(base).mean(), stat(moved).mean()
        assert abs(a - b) < 3 * np.sqrt((a * (1 - a) + b * (1 - b)) / 50_000) + 1e-3


def test_geodesic_flow_group_law_and_guard():
    x = hs.sample_mu(3)
    a = hs.geodesic_flow(2.5, hs.geodesic_flow(1.5, x))
    b = hs.geodesic_flow(4.0, x)
    assert abs(a.shadow - b.shadow) < 1e-8
    back = hs.geodesic_flow(-4.0, b)
    assert abs(back.shadow - x.shadow) < 1e-8
    with pytest.raises(DomainError):
        hs.geodesic_flow(600.0, x)


def test_flow_moves_shadow_at_unit_speed():
    x = hs.PointX.from_coords(0.1 + 3j, 0.0)
    z0 = shadow_of(x.representative)
    z1 = shadow_of(hs.flow_matrix(0.7) @ x.representative)
    assert hs.hyperbolic_distance(z0, z1) == pytest.approx(0.7)


def test_observable_exact_means():
    phi = hs.Observable.cusp(2.0, 0.5)
    est = hs.correlation([np.eye(2)], [phi], 200_000, 3)
    assert abs(est.value - phi.mean) < 4 * est.standard_error
    ball = hs.Observable.ball(1.6j, 0.3)
    est = hs.correlation([np.eye(2)], [ball], 200_000, 4)
    assert abs(est.value - ball.mean) < 4 * est.standard_error
    assert hs.standard_bump().mu == 0.0 and hs.fallback_bump().mu == 0.0
    centred = hs.Observable.ball(1.6j, 0.3, zero_mean=True)
    est = hs.correlation([np.eye(2)], [centred], 100_000, 5)
    assert abs(est.value) < 4 * est.standard_error


def test_observable_validation():
    with pytest.raises(InvalidInputError):
        hs.Observable.cusp(1.1, 0.5)
    with pytest.raises(InvalidInputError):
        hs.Observable.ball(0.45 + 1j, 0.3)
    with pytest.raises(InvalidInputError):
        hs.Observable.cusp(2.0, -1.0)


def test_observable_is_a_function_on_X():
    phi = hs.standard_bump()
    g = hs.sample_mu_batch(200, np.random.default_rng(9))
    for gam in GAMMAS:
        assert np.allclose(phi(g @ gam), phi(g), atol=1e-9)


def test_involution_flips_standard_bump():
    # J g J with J = diag(1, -1) commutes with the flow and negates the observable
    J = np.diag([1.0, -1.0])
    g = hs.sample_mu_batch(500, np.random.default_rng(2))
    phi = hs.standard_bump()
    assert np.allclose(phi(J @ g @ J), -phi(g), atol=1e-9)


def test_correlation_trivial_cases():
    phi = hs.Observable.constant(2.5)
    est = hs.correlation([np.eye(2), random_sl(2, np.random.default_rng(0))], [phi, phi], 1000, 0)
    assert est.value == pytest.approx(6.25) and est.standard_error == 0
    with pytest.raises(InvalidInputError):
        hs.correlation([np.eye(2)], [phi], 10, 0)
    with pytest.raises(InvalidInputError):
        hs.correlation([np.eye(2)], [phi, phi], 1000, 0)


def test_correlation_deterministic_and_worker_independent():
    phi = hs.standard_bump()
    gs = [np.eye(2), hs.flow_matrix(1.0)]
    a = hs.correlation(gs, [phi, phi], 40_000, 7).dumps()
    b = hs.correlation(gs, [phi, phi], 40_000, 7, workers=2).dumps()
    assert a == b


def test_correlation_decays_along_flow():
    phi = hs.standard_bump()
    vals = [abs(hs.correlation([np.eye(2), hs.flow_matrix(t)], [phi, phi], 50_000, 1).value) for t in (0.0, 1.0, 2.0)]
    assert vals[0] > vals[1] > vals[2]


def test_time_average_limits():
    x = hs.sample_mu(4)
    phi = hs.Observable.ball(1.6j, 0.3)
    assert hs.time_average_PT(hs.Observable.constant(3.0), 2.0, hs.GEODESIC, x) == pytest.approx(3.0)
    assert hs.time_average_PT(phi, 1e-4, hs.GEODESIC, x) == pytest.approx(hs.evaluate(phi, x), abs=1e-4)
    a = hs.time_average_PT(hs.standard_bump(), 8.0, hs.GEODESIC, x, step=0.05)
    b = hs.time_average_PT(hs.standard_bump(), 8.0, hs.GEODESIC, x, step=0.025)
    assert abs(a - b) <= 1e-3 * max(abs(b), 1e-2)
    with pytest.raises(DomainError):
        hs.time_average_PT(phi, 0.0, hs.GEODESIC, x)


def test_simpson_weights():
    w = hs.simpson_weights(4, 0.5)
    assert w.sum() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        hs.simpson_weights(3, 0.5)


def test_time_average_preserves_mean():
    phi = hs.Observable.ball(1.6j, 0.3)
    vals = hs.map_chunks(lambda r, g: hs.time_average_batch(phi, 3.0, r), 40_000, 2)
    est = hs.mean_se(vals)
    assert abs(est.value - phi.mean) < 3 * est.se + 1e-4


def test_deviation_decays_and_matches_double_integral():
    phi = hs.standard_bump()
    d1, _ = hs.deviation_DT(phi, 1.0, 4000, 0)
    d16, sq = hs.deviation_DT(phi, 16.0, 4000, 0)
    assert d16.value < d1.value
    dbl = hs.deviation_DT_double_integral(phi, 16.0, 4000, 1)
    assert abs(sq.value - dbl.value) < 3 * np.hypot(sq.se, dbl.se)
    const, _ = hs.deviation_DT(hs.Observable.constant(2.0), 2.0, 1000, 0)
    assert const.value < 1e-12


def test_derivative_of_coordinate_function():
    # d/ds y(exp(-s E21) x): exactness check against a direct finite difference
    f = lambda r: hs.coords_batch(hs.reduce_batch(r)[0])[1]
    X = np.array([[0.5, 0.0], [0.0, -0.5]])
    reps = hs.from_coords(np.array([0.0]), np.array([2.0]), np.array([0.3]))
    from scipy.linalg import expm

    direct = (f(expm(-1e-6 * X) @ reps) - f(expm(1e-6 * X) @ reps)) / 2e-6
    assert hs.derivative(f, X)(reps) == pytest.approx(direct, rel=1e-6)


def test_sobolev_norms():
    phi = hs.standard_bump()
    s = [hs.sobolev_estimate(phi, ell, 1000, 0) for ell in range(4)]
    assert all(a <= b for a, b in zip(s, s[1:]))
    c = hs.Observable.constant(2.0)
    assert hs.sobolev_estimate(c, 2, 500, 0) == pytest.approx(2.0)
    with pytest.raises(UnsupportedError):
        hs.sobolev_estimate(phi, 4)


@pytest.mark.parametrize("prop", ["N1", "N2", "N3", "N4"])
def test_norm_properties(prop):
    rep = hs.norm_property_check(prop, 20, seed=11)
    assert rep.passed and np.isfinite(rep.max_ratio)
    if prop == "N3":
        assert 0 < rep.slope < 10


def test_norm_property_guards():
    with pytest.raises(InvalidInputError):
        hs.norm_property_check("N5")
    with pytest.raises(InvalidInputError):
        hs.norm_property_check("N1", trials=5)


def test_N2_constant_observable_has_zero_difference():
    c = hs.Observable.constant(1.0)
    g = random_sl(2, np.random.default_rng(0))
    assert hs.sup_norm(lambda r: hs.translate(c, g)(r) - c(r)) == 0.0


def test_map_chunks_layout():
    sizes = hs.chunk_sizes(40_000)
    assert sum(sizes) == 40_000 and sizes[0] == hs.CHUNK
    a = hs.map_chunks(lambda r, g: r[:, 0, 0], 40_000, 3)
    b = hs.map_chunks(lambda r, g: r[:, 0, 0], 40_000, 3, workers=3)
    assert np.array_equal(a, b)
