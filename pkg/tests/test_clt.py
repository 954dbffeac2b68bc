import json

import numpy as np
import pytest

from mixlab import clt, homspace as hs
from mixlab.cumulants import Partition
from mixlab.errors import DomainError, InvalidInputError, UnsupportedError


@pytest.fixture(scope="module")
def sigma():
    return clt.variance_sigma2(hs.standard_bump(), 20.0, 20_000, 3)


def test_ft_of_constant():
    reps = hs.sample_mu_batch(5, np.random.default_rng(0))
    vals = clt.ft_values(hs.Observable.constant(2.0), [1.0, 4.0], reps)
    assert np.allclose(vals, 2.0 * np.sqrt([2.0, 8.0]))
    one = clt.ft_values(hs.Observable.constant(2.0), [4.0], reps, one_sided=True)
    assert np.allclose(one, 2.0 * 2.0)


def test_ft_shared_grid_matches_separate_grids():
    phi = hs.standard_bump()
    reps = hs.sample_mu_batch(50, np.random.default_rng(1))
    shared = clt.ft_values(phi, [1.0, 3.0], reps)
    odd = clt.ft_values(phi, [1.0, 3.0, 2.95], reps)[:, :2]
    assert np.allclose(shared, odd, atol=1e-6)
    x = hs.PointX(reps[0])
    assert clt.normalized_average_Ft(x, phi, 3.0) == pytest.approx(shared[0, 1])


def test_ft_guards():
    reps = hs.sample_mu_batch(2, np.random.default_rng(0))
    with pytest.raises(DomainError):
        clt.ft_values(hs.standard_bump(), [500.0], reps)


def test_grouped_jackknife_of_mean(rng):
    x = rng.normal(size=20_000)
    full, se = clt.grouped_jackknife(np.mean, x)
    assert full == pytest.approx(x.mean())
    assert se == pytest.approx(x.std() / np.sqrt(len(x)), rel=0.4)


def test_fit_envelope_recovers_rate():
    ts = np.array([1.0, 2.0, 4.0, 8.0])
    C, delta = clt.fit_envelope(ts, 3.0 * np.exp(-0.7 * ts) * (-1) ** np.arange(4))
    assert delta == pytest.approx(0.7) and C == pytest.approx(3.0)


def test_variance_guards():
    with pytest.raises(InvalidInputError):
        clt.variance_sigma2(hs.standard_bump(), 10.0, 1000, 0)
    with pytest.raises(InvalidInputError):
        clt.variance_sigma2(hs.Observable.ball(1.6j, 0.3), 40.0, 1000, 0)


def test_variance_of_standard_bump(sigma):
    assert not sigma.degenerate
    assert sigma.value == pytest.approx(0.257, abs=4 * sigma.standard_error + 0.01)
    assert sigma.correlations[0] > abs(sigma.correlations[-1])
    assert sigma.tail_bound < sigma.standard_error


def test_clt_report_and_exports(sigma):
    rep = clt.clt_run(hs.standard_bump(), 10.0, 2000, 5, sigma=sigma)
    assert abs(rep.mean) < 3 * rep.mean_se
    assert rep.passes["cum3"] and rep.passes["cum4"]
    assert rep.ks < 0.06
    hist = rep.histogram_csv().splitlines()
    assert hist[0] == "left,right,count" and len(hist) == 65
    assert len(rep.samples_csv().splitlines()) == 2001
    assert json.loads(rep.dumps())["samples"] == 2000


def test_clt_is_deterministic_across_workers(sigma):
    a = clt.clt_run(hs.standard_bump(), 4.0, 20_000, 9, sigma=sigma)
    b = clt.clt_run(hs.standard_bump(), 4.0, 20_000, 9, sigma=sigma, workers=2)
    assert a.dumps() == b.dumps()
    assert np.array_equal(a.values, b.values)


def test_clt_guards(sigma):
    with pytest.raises(InvalidInputError):
        clt.clt_run(hs.standard_bump(), 10.0, 100, 0, sigma=sigma)
    with pytest.raises(InvalidInputError):
        clt.clt_run(hs.Observable.ball(1.6j, 0.3), 10.0, 2000, 0, sigma=sigma)


def test_degenerate_flag():
    s = clt.SigmaEstimate(1e-4, 1e-4, 40.0, 0.0, 0.0, 1.0, (), ())
    assert s.degenerate
    rep = clt._report(1.0, np.random.default_rng(0).normal(size=1000), s)
    assert rep.degenerate and not rep.passes["ks"]


def test_folner_properties():
    rep = clt.growth_and_folner_check([2.0, 4.0, 8.0, 16.0], shifts=(0.5, 1.0))
    assert rep.growth_decreasing and rep.overlaps_increasing
    assert rep.overlaps[1.0][0] == pytest.approx(0.75)
    with pytest.raises(InvalidInputError):
        clt.growth_and_folner_check([4.0, 2.0])


def test_clustered_cumulant_vanishes():
    h = np.array([0.0, 0.3, 30.0, 30.2])
    Q = Partition(((0, 1), (2, 3)))
    rep = clt.clustered_cumulant_check(h, Q, 0.5, 10.0, hs.standard_bump(), 40_000, 1)
    assert rep.member
    assert abs(rep.cumulant) < 3 * rep.standard_error + 1e-4


def test_clustered_cumulant_nonzero_when_clustered():
    h = np.array([0.0, 0.1])
    rep = clt.clustered_cumulant_check(h, Partition.one_block(2), 1.0, 1.0, hs.standard_bump(), 20_000, 1)
    assert rep.cumulant > 5 * rep.standard_error


def test_clustered_cumulant_guards():
    phi = hs.standard_bump()
    with pytest.raises(InvalidInputError):
        clt.clustered_cumulant_check(np.array([0.0, 1.0]), Partition(((0,), (1,))), 0.5, 5.0, phi, 1000, 0)
    with pytest.raises(UnsupportedError):
        clt.clustered_cumulant_check(np.arange(5.0) * 20, Partition.singletons(5), 0.5, 5.0, phi, 1000, 0)
