"""Central limit behaviour of geodesic-flow averages on SL(2, R)/SL(2, Z).

F_t(x) = (2t)^{-1/2} int_{-t}^{t} phi(g_s x) ds with g_s = diag(e^{s/2}, e^{-s/2}),
the geodesic subgroup carrying the unit-speed metric |s - u| so that
B_t = [-t, t] has volume 2t.
"""

from dataclasses import dataclass, field
from itertools import combinations
import csv
import io
import json

import numpy as np
from scipy import stats

from .cumulants import classify_tuple, cumulant_from_moments, empirical_cumulants
from .errors import DomainError, InvalidInputError, UnsupportedError
from .homspace import (
    FLOW_STEP,
    GEODESIC,
    Observable,
    flow_matrix,
    map_chunks,
    orbit_values,
    simpson_weights,
)

T_MAX = 400.0
JACKKNIFE_GROUPS = 20
HIST_BINS = 64


# ---------------------------------------------------------------- F_t


def _simpson_sum(vals, h):
    n = len(vals) - 1
    return simpson_weights(n, h) @ vals


def _shared_grid(ts, step):
    k = [t / (2 * step) for t in ts]
    return all(abs(x - round(x)) < 1e-9 and round(x) >= 1 for x in k)


def ft_values(phi, ts, reps, step=FLOW_STEP, one_sided=False):
    """F_t for every t in ``ts`` at each representative; shape (n, len(ts)).

    When every t is a multiple of 2 * step a single orbit over [-max t, max t]
    serves all of them.
    """
    ts = [float(t) for t in ts]
    if any(not 0 < t <= T_MAX for t in ts):
        raise DomainError(f"t must lie in (0, {T_MAX}]")
    reps = np.asarray(reps, dtype=float)
    out = np.empty((len(reps), len(ts)))
    if _shared_grid(ts, step):
        n = int(round(max(ts) / step))
        fwd = orbit_values(phi, reps, GEODESIC, step, n)
        bwd = None if one_sided else orbit_values(phi, reps, -GEODESIC, step, n)
        for j, t in enumerate(ts):
            m = int(round(t / step))
            total = _simpson_sum(fwd[: m + 1], step)
            if not one_sided:
                total = total + _simpson_sum(bwd[: m + 1], step)
            out[:, j] = total / np.sqrt(t if one_sided else 2 * t)
        return out
    for j, t in enumerate(ts):
        m = max(2, 2 * int(np.ceil(t / (2 * step) - 1e-12)))
        h = t / m
        total = _simpson_sum(orbit_values(phi, reps, GEODESIC, h, m), h)
        if not one_sided:
            total = total + _simpson_sum(orbit_values(phi, reps, -GEODESIC, h, m), h)
        out[:, j] = total / np.sqrt(t if one_sided else 2 * t)
    return out


def normalized_average_Ft(x, phi, t, step=FLOW_STEP, one_sided=False):
    """F_t at one point; ``one_sided`` gives t^{-1/2} int_0^t phi(g_s x) ds."""
    return float(ft_values(phi, [t], x.representative[None], step, one_sided)[0, 0])


# ---------------------------------------------------------------- statistics helpers


def grouped_jackknife(stat, data, groups=JACKKNIFE_GROUPS):
    """Delete-a-group jackknife standard error of ``stat(data)`` over contiguous groups."""
    data = np.asarray(data)
    n = len(data)
    edges = np.linspace(0, n, groups + 1).astype(int)
    full = np.asarray(stat(data), dtype=float)
    loo = []
    for g in range(groups):
        keep = np.r_[0 : edges[g], edges[g + 1] : n]
        loo.append(np.asarray(stat(data[keep]), dtype=float))
    loo = np.array(loo)
    se = np.sqrt((groups - 1) / groups * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return full, se


def fit_envelope(ts, values):
    """Envelope C e^{-delta t} over |values|: delta from a log-linear fit, C the smallest dominating constant."""
    ts = np.asarray(ts, dtype=float)
    a = np.abs(np.asarray(values, dtype=float))
    a = np.maximum(a, 1e-300)
    slope = np.polyfit(ts, np.log(a), 1)[0]
    delta = -float(slope)
    C = float(np.max(a * np.exp(delta * ts)))
    return C, delta


def _require_zero_mean(phi):
    if isinstance(phi, Observable) and abs(phi.mu) > 0:
        raise InvalidInputError("the observable must have zero mean")


# ---------------------------------------------------------------- sigma^2


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    standard_error: float
    S: float
    tail_bound: float
    envelope_C: float
    envelope_delta: float
    lags: tuple
    correlations: tuple

    @property
    def degenerate(self):
        return self.value <= 2 * self.standard_error

    def to_json(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["lags"] = list(self.lags)
        d["correlations"] = list(self.correlations)
        d["degenerate"] = bool(self.degenerate)
        return d


def variance_sigma2(phi, S, samples, seed, step=0.5, workers=1):
    """sigma(phi)^2 = int_{-S}^{S} <g_s . phi, phi> ds by the trapezoid rule.

    Each mu-sample x contributes phi(x) times the trapezoid sum of
    phi(g_s x) over the lag grid, so the standard error is the sample
    standard deviation of those products over sqrt(samples). The tail
    beyond S is bounded with an exponential envelope fitted to |c(s)|.
    """
    _require_zero_mean(phi)
    if S < 20:
        raise InvalidInputError("S >= 20 required")
    n = int(round(S / step))
    w = np.full(n + 1, step)
    w[0] = w[-1] = step / 2

    def fn(reps, rng):
        f = orbit_values(phi, reps, GEODESIC, step, n)
        b = orbit_values(phi, reps, -GEODESIC, step, n)
        lag = (f[0][None, :] * f).T  # contributions to c(s) at s = 0, step, ..., S
        # each half-trapezoid gives s = 0 weight step/2, so it is counted once overall
        y = f[0] * (w @ f + w @ b)
        return np.column_stack([y, lag])

    out = map_chunks(fn, samples, seed, workers, stream=1)
    y = out[:, 0]
    c = out[:, 1:].mean(axis=0)
    c_se = out[:, 1:].std(axis=0, ddof=1) / np.sqrt(len(out))
    lags = np.arange(n + 1) * step
    val = float(y.mean())
    se = float(y.std(ddof=1) / np.sqrt(len(y)))
    sig = (lags >= 1.0) & (np.abs(c) > 2 * c_se)
    if sig.sum() >= 2:
        C, delta = fit_envelope(lags[sig], c[sig])
    else:
        C, delta = 0.0, float("inf")
    tail = 2 * C * np.exp(-delta * S) / delta if delta > 0 and np.isfinite(delta) else (0.0 if C == 0 else float("inf"))
    return SigmaEstimate(val, se, float(S), float(tail), float(C), float(delta), tuple(lags.tolist()), tuple(c.tolist()))


# ---------------------------------------------------------------- CLT runs


@dataclass(frozen=True)
class CltReport:
    t: float
    samples: int
    mean: float
    mean_se: float
    variance: float
    second_moment: float
    second_moment_se: float
    cumulants: dict
    cumulant_se: dict
    sigma2: float
    sigma2_se: float
    ks: float
    degenerate: bool
    passes: dict
    values: np.ndarray = field(repr=False, compare=False)

    def to_json(self):
        return {
            "t": self.t,
            "samples": self.samples,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "variance": self.variance,
            "second_moment": self.second_moment,
            "second_moment_se": self.second_moment_se,
            "cumulants": {str(k): v for k, v in self.cumulants.items()},
            "cumulant_se": {str(k): v for k, v in self.cumulant_se.items()},
            "sigma2": self.sigma2,
            "sigma2_se": self.sigma2_se,
            "ks": self.ks,
            "degenerate": self.degenerate,
            "passes": self.passes,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    def samples_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "F_t"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    def histogram_csv(self, bins=HIST_BINS):
        """Counts in ``bins`` equal bins over [-4 sigma, 4 sigma]."""
        s = np.sqrt(self.sigma2) if self.sigma2 > 0 else max(float(np.std(self.values)), 1e-12)
        edges = np.linspace(-4 * s, 4 * s, bins + 1)
        counts, _ = np.histogram(self.values, edges)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["left", "right", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        return buf.getvalue()


def _cumulant_stat(x):
    c = empirical_cumulants(x, (2, 3, 4, 5))
    return [c[3], c[4], c[5]]


def _report(t, vals, sigma):
    n = len(vals)
    mean = float(vals.mean())
    mean_se = float(vals.std(ddof=1) / np.sqrt(n))
    sq = vals ** 2
    m2, m2_se = float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n))
    if np.all(vals == 0):
        cum = {3: 0.0, 4: 0.0, 5: 0.0}
        cse = {3: 0.0, 4: 0.0, 5: 0.0}
    else:
        full, se = grouped_jackknife(_cumulant_stat, vals)
        cum = {3: float(full[0]), 4: float(full[1]), 5: float(full[2])}
        cse = {3: float(se[0]), 4: float(se[1]), 5: float(se[2])}
    degenerate = bool(sigma.degenerate)
    ks = float("nan") if degenerate else float(stats.kstest(vals, "norm", args=(0.0, np.sqrt(sigma.value))).statistic)
    passes = {
        "mean": bool(abs(mean) <= 3 * mean_se) if mean_se > 0 else mean == 0,
        "second_moment": bool(abs(m2 - sigma.value) <= 3 * np.hypot(m2_se, sigma.standard_error)),
        "cum3": bool(abs(cum[3]) <= 3 * cse[3]),
        "cum4": bool(abs(cum[4]) <= 3 * cse[4]),
        "ks": bool(not degenerate and ks < 0.03),
    }
    return CltReport(
        float(t), n, mean, mean_se, float(vals.var(ddof=1)) if n > 1 else 0.0, m2, m2_se,
        cum, cse, sigma.value, sigma.standard_error, ks, degenerate, passes, vals,
    )


def clt_series(phi, ts, N, seed, S=40.0, sigma_samples=100_000, workers=1, sigma=None, step=FLOW_STEP):
    """CLT reports for several t from one set of mu-samples and one orbit per sample."""
    _require_zero_mean(phi)
    if N < 1000:
        raise InvalidInputError("N >= 10^3 required")
    if sigma is None:
        sigma = variance_sigma2(phi, S, sigma_samples, seed, workers=workers)
    vals = map_chunks(lambda reps, rng: ft_values(phi, ts, reps, step), N, seed, workers)
    return [_report(t, vals[:, j].copy(), sigma) for j, t in enumerate(ts)], sigma


def clt_run(phi, t, N, seed, S=40.0, sigma_samples=100_000, workers=1, sigma=None):
    """Sample F_t under mu and compare with the normal law of variance sigma(phi)^2."""
    reports, _ = clt_series(phi, [t], N, seed, S, sigma_samples, workers, sigma)
    return reports[0]


# ---------------------------------------------------------------- averaging sets


@dataclass(frozen=True)
class FolnerReport:
    t_grid: tuple
    growth: tuple
    growth_decreasing: bool
    shifts: tuple
    overlaps: dict
    overlaps_increasing: bool

    def to_json(self):
        return {
            "t": list(self.t_grid),
            "growth": list(self.growth),
            "growth_decreasing": self.growth_decreasing,
            "shifts": list(self.shifts),
            "overlaps": {repr(k): list(v) for k, v in self.overlaps.items()},
            "overlaps_increasing": self.overlaps_increasing,
        }


def growth_and_folner_check(t_grid, shifts=(1.0,)):
    """log vol(B_t) / t = log(2t)/t and vol(B_t cap (B_t - s)) / vol(B_t) = (2t - |s|)/(2t)."""
    ts = [float(t) for t in t_grid]
    if not ts or np.any(np.diff(ts) <= 0) or ts[0] <= 0:
        raise InvalidInputError("t grid must be positive and increasing")
    # log(2t)/t decreases once t >= e/2
    growth = tuple(float(np.log(2 * t) / t) for t in ts)
    over = {float(s): tuple(max(0.0, (2 * t - abs(s)) / (2 * t)) for t in ts) for s in shifts}
    return FolnerReport(
        tuple(ts), growth, bool(np.all(np.diff(growth) < 0)),
        tuple(float(s) for s in shifts), over, bool(all(np.all(np.diff(v) >= 0) for v in over.values())),
    )


# ---------------------------------------------------------------- clustered cumulants


@dataclass(frozen=True)
class ClusterReport:
    r: int
    cumulant: float
    standard_error: float
    dQ_max: float
    dQ_min: float
    member: bool

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _translates(h):
    arr = np.asarray(h, dtype=float) if not hasattr(h, "elements") else None
    if arr is not None and arr.ndim == 1:
        return [np.linalg.inv(flow_matrix(s)) for s in arr]
    return [np.linalg.inv(np.asarray(g.entries if hasattr(g, "entries") else g, dtype=float)) for g in h]


def _joint_cumulant(V):
    r = V.shape[1]
    m = {frozenset(): 1.0}
    for k in range(1, r + 1):
        for I in combinations(range(r), k):
            m[frozenset(I)] = float(np.prod(V[:, list(I)], axis=1).mean())
    return cumulant_from_moments(m, r)


def clustered_cumulant_check(h, Q, alpha, beta, phi, samples, seed, workers=1):
    """Joint cumulant of (h_1 . phi, ..., h_r . phi) for h in Delta_Q(alpha, beta).

    ``h`` is a 1-D array of geodesic times or a tuple of group elements.
    Moments of all index subsets come from one mu-sample; the standard
    error is a grouped jackknife.
    """
    r = len(h)
    if r > 4:
        raise UnsupportedError("r <= 4")
    c = classify_tuple(h, Q, alpha, beta)
    if not c.member:
        raise InvalidInputError("h is not in Delta_Q(alpha, beta)")
    invs = _translates(h)

    def fn(reps, rng):
        return np.column_stack([phi(gi @ reps) for gi in invs])

    V = map_chunks(fn, samples, seed, workers, stream=2)
    cum, se = grouped_jackknife(_joint_cumulant, V)
    return ClusterReport(r, float(cum), float(se), c.dQ_max, c.dQ_min, c.member)
