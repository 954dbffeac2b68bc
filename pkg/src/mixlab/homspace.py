"""The homogeneous space X = SL(2, R) / SL(2, Z).

A point gG is stored through a representative g. Because Gamma acts on the
right, the upper-half-plane shadow of gGamma is the Gamma-orbit of
g^{-1} i; a representative is *reduced* when z = g^{-1} i lies in the
standard fundamental domain F = {|Re z| <= 1/2, |z| >= 1}. Writing
g^{-1} = u(x) a(sqrt y) k(theta) gives the coordinates (x, y, theta) with
theta defined modulo pi (the element -I of Gamma shifts it by pi).

The invariant probability measure mu is (3 / pi^2) dx dy / y^2 d theta on
F x [0, pi). Left translation x -> h x is the action; the geodesic flow is
left multiplication by diag(e^{t/2}, e^{-t/2}), which moves the shadow at
unit hyperbolic speed.

Batch functions work on stacks of representatives of shape (n, 2, 2).
"""

from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import json
import multiprocessing as mp

import numpy as np
from scipy import integrate, linalg

from .errors import DomainError, InvalidInputError, UnsupportedError
from .group_core import GroupElement, as_matrix, lie_basis

FD_TOL = 1e-12
COVOLUME = np.pi ** 2 / 3  # vol(G / Gamma) for the Cartan Haar normalization
MAX_REDUCTION_STEPS = 10_000
CHUNK = 16_384
FLOW_STEP = 0.05
MAX_FLOW_TIME = 500.0

Estimate = namedtuple("Estimate", ["value", "se"])

GEODESIC = np.diag([0.5, -0.5])  # generator of the geodesic flow
SOBOLEV_BASIS = lie_basis(2)


# ---------------------------------------------------------------- reduction


def _inv2(m):
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    out[..., 1, 1] = m[..., 0, 0]
    return out


def reduce_batch(reps):
    """Reduce representatives so that their shadows lie in F.

    Returns ``(reduced, steps)``: each reduced[j] = reps[j] @ gamma_j for some
    gamma_j in SL(2, Z), and steps[j] counts translations plus inversions.
    """
    g = np.array(reps, dtype=float, copy=True)
    single = g.ndim == 2
    if single:
        g = g[None]
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    g /= np.sqrt(det)[:, None, None]
    h = _inv2(g)
    steps = np.zeros(len(h), dtype=np.int64)
    for _ in range(MAX_REDUCTION_STEPS):
        a, b, c, d = h[:, 0, 0], h[:, 0, 1], h[:, 1, 0], h[:, 1, 1]
        q = c * c + d * d
        x = (a * c + b * d) / q
        shift = np.where(np.abs(x) > 0.5 + FD_TOL, np.round(x), 0.0)
        moved = shift != 0
        if moved.any():
            h[:, 0, 0] -= shift * c
            h[:, 0, 1] -= shift * d
            steps += moved
            a, b = h[:, 0, 0], h[:, 0, 1]
            x = x - shift
        # |z|^2 = (a^2 + b^2) / (c^2 + d^2) for z = h i
        inside = (a * a + b * b) < (1.0 - FD_TOL) * q
        if inside.any():
            # z -> -1/z, i.e. h -> S h with S = [[0, -1], [1, 0]]
            top = h[inside, 0, :].copy()
            h[inside, 0, :] = -h[inside, 1, :]
            h[inside, 1, :] = top
            steps += inside
        if not moved.any() and not inside.any():
            break
    else:
        raise RuntimeError("modular reduction did not converge")
    out = _inv2(h)
    if single:
        return out[0], int(steps[0])
    return out, steps


def coords_batch(reps):
    """(x, y, theta) of the shadow of each *reduced* representative."""
    h = _inv2(np.asarray(reps, dtype=float))
    a, b, c, d = h[..., 0, 0], h[..., 0, 1], h[..., 1, 0], h[..., 1, 1]
    q = c * c + d * d
    x = (a * c + b * d) / q
    y = 1.0 / q
    theta = np.arctan2(c, d) % np.pi
    return x, y, theta


def from_coords(x, y, theta):
    """Representatives g with g^{-1} = u(x) a(sqrt y) k(theta)."""
    x, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, theta)))
    r = np.sqrt(y)
    c, s = np.cos(theta), np.sin(theta)
    # u(x) a(r) = [[r, x/r], [0, 1/r]]; times k(theta)
    h = np.empty(x.shape + (2, 2))
    h[..., 0, 0] = r * c + x / r * s
    h[..., 0, 1] = -r * s + x / r * c
    h[..., 1, 0] = s / r
    h[..., 1, 1] = c / r
    return _inv2(h)


def hyperbolic_distance(z1, z2):
    z1, z2 = np.asarray(z1), np.asarray(z2)
    return np.arccosh(1.0 + np.abs(z1 - z2) ** 2 / (2.0 * z1.imag * z2.imag))


def in_fundamental_domain(z, tol=FD_TOL):
    z = np.asarray(z)
    return (np.abs(z.real) <= 0.5 + tol) & (np.abs(z) >= 1.0 - tol)


# ---------------------------------------------------------------- points


@dataclass(frozen=True)
class PointX:
    """A point of X stored as a reduced representative."""

    representative: np.ndarray
    word_length: int = 0

    def __post_init__(self):
        m = np.array(as_matrix(self.representative), dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "representative", m)

    @property
    def shadow(self):
        x, y, _ = coords_batch(self.representative)
        return complex(x, y)

    @property
    def angle(self):
        return float(coords_batch(self.representative)[2])

    @classmethod
    def from_coords(cls, z, theta=0.0):
        return reduce(from_coords(np.real(z), np.imag(z), theta))

    def to_json(self):
        return {"representative": self.representative.tolist(), "word_length": self.word_length}


def reduce(g):
    """The reduced point of X with representative ``g``."""
    m = as_matrix(g)
    if m.shape != (2, 2):
        raise InvalidInputError("X is built over SL(2, R)")
    GroupElement(m)
    red, steps = reduce_batch(m)
    return PointX(red, steps)


def sample_mu_batch(n, rng):
    """n points distributed by mu, as reduced representatives.

    y has density proportional to y^-2 on [sqrt(3)/2, inf) (inverse CDF);
    x is uniform on [-1/2, 1/2] and pairs with x^2 + y^2 < 1 are rejected.
    """
    y0 = np.sqrt(3.0) / 2.0
    xs, ys = [], []
    have = 0
    while have < n:
        m = int((n - have) * 1.15) + 16
        u = 1.0 - rng.random(m)
        y = y0 / u
        x = rng.random(m) - 0.5
        ok = x * x + y * y >= 1.0
        xs.append(x[ok])
        ys.append(y[ok])
        have += int(ok.sum())
    x = np.concatenate(xs)[:n]
    y = np.concatenate(ys)[:n]
    theta = rng.random(n) * np.pi
    return from_coords(x, y, theta)


def sample_mu(seed):
    rng = np.random.default_rng(seed)
    return PointX(sample_mu_batch(1, rng)[0], 0)


def act_batch(g, reps):
    red, _ = reduce_batch(as_matrix(g) @ reps)
    return red


def act(g, x):
    """g . x as a reduced point."""
    return reduce(as_matrix(g) @ x.representative)


def flow_matrix(t):
    return np.diag([np.exp(t / 2.0), np.exp(-t / 2.0)])


def geodesic_flow_batch(t, reps, unit=1.0):
    if abs(t) > MAX_FLOW_TIME:
        raise DomainError(f"|t| <= {MAX_FLOW_TIME} required")
    n = int(np.ceil(abs(t) / unit))
    out = np.asarray(reps, dtype=float)
    if n == 0:
        return reduce_batch(out)[0]
    step = flow_matrix(t / n)
    for _ in range(n):
        out, _ = reduce_batch(step @ out)
    return out


def geodesic_flow(t, x):
    """Flow x for time t, re-reducing after every unit of time."""
    out = geodesic_flow_batch(t, x.representative[None])[0]
    return PointX(out, 0)


# ---------------------------------------------------------------- observables


def bump(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere; peak value 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def _boundary_distance(z):
    # hyperbolic distance from z to the three geodesics bounding F
    d_left = np.arcsinh(abs(z.real + 0.5) / z.imag)
    d_right = np.arcsinh(abs(z.real - 0.5) / z.imag)
    d_arc = np.arcsinh(abs(abs(z) ** 2 - 1.0) / (2.0 * z.imag))
    return min(d_left, d_right, d_arc)


@dataclass(frozen=True)
class Observable:
    """Smooth function on X: radial bump times an angular harmonic.

    profile "cusp": bump((log y - log y0) / w), supported in the horoball
      region y > 1 where the only identifications are integer translations;
    profile "ball": bump(d(z, z0) / w) for a hyperbolic ball inside F;
    profile "constant": the constant ``amplitude``.
    The angular factor is cos(2 m (theta - theta0)), well defined since
    theta is taken mod pi. With ``zero_mean`` the exact mu-mean is removed.
    """

    center: PointX
    radial_width: float
    harmonic: int = 0
    profile: str = "cusp"
    zero_mean: bool = False
    amplitude: float = 1.0
    mean: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.profile not in ("cusp", "ball", "constant"):
            raise InvalidInputError(f"unknown profile {self.profile!r}")
        if self.radial_width <= 0:
            raise InvalidInputError("radial width must be positive")
        if self.harmonic < 0:
            raise InvalidInputError("harmonic must be >= 0")
        z0 = self.center.shadow
        if self.profile == "cusp" and np.log(z0.imag) - self.radial_width < 0.01:
            raise InvalidInputError("cusp bump must be supported in y > 1")
        if self.profile == "ball":
            if not in_fundamental_domain(z0) or _boundary_distance(z0) <= self.radial_width:
                raise InvalidInputError("ball bump must sit inside the fundamental domain")
        object.__setattr__(self, "mean", self._exact_integral() * self.amplitude)

    # -- constructors
    @classmethod
    def cusp(cls, y0=2.0, width=0.6, harmonic=0, theta0=0.0, zero_mean=False, amplitude=1.0):
        return cls(PointX.from_coords(complex(0.0, y0), theta0), width, harmonic, "cusp", zero_mean, amplitude)

    @classmethod
    def ball(cls, z0=complex(0.0, 1.6), width=0.3, harmonic=0, theta0=0.0, zero_mean=False, amplitude=1.0):
        return cls(PointX.from_coords(z0, theta0), width, harmonic, "ball", zero_mean, amplitude)

    @classmethod
    def constant(cls, value=1.0):
        return cls(PointX.from_coords(2j), 1.0, 0, "constant", False, value)

    @property
    def theta0(self):
        return self.center.angle

    def _exact_integral(self):
        if self.profile == "constant":
            return 1.0
        if self.harmonic > 0:
            return 0.0
        w = self.radial_width
        if self.profile == "cusp":
            c = np.log(self.center.shadow.imag)
            # int_F bump dA = int bump((u - c)/w) e^{-u} du with u = log y
            area, _ = integrate.quad(lambda u: bump((u - c) / w) * np.exp(-u), c - w, c + w, epsabs=1e-14)
        else:
            area, _ = integrate.quad(lambda r: bump(r / w) * np.sinh(r) * 2 * np.pi, 0.0, w, epsabs=1e-14)
        # mu = (3/pi^2) dA d theta over theta in [0, pi)
        return 3.0 / np.pi * area

    def values_at(self, x, y, theta):
        """Evaluate at reduced coordinates (no reduction performed)."""
        if self.profile == "constant":
            return np.full(np.shape(x), self.amplitude, dtype=float)
        if self.profile == "cusp":
            rad = bump((np.log(y) - np.log(self.center.shadow.imag)) / self.radial_width)
        else:
            rad = bump(hyperbolic_distance(x + 1j * y, self.center.shadow) / self.radial_width)
        if self.harmonic:
            rad = rad * np.cos(2 * self.harmonic * (theta - self.theta0))
        val = self.amplitude * rad
        if self.zero_mean:
            val = val - self.mean
        return val

    def __call__(self, reps):
        red, _ = reduce_batch(reps)
        return self.values_at(*coords_batch(red))

    @property
    def mu(self):
        """Exact mu-integral of the observable as evaluated."""
        return 0.0 if self.zero_mean else self.mean

    def to_json(self):
        return {
            "profile": self.profile,
            "center": [self.center.shadow.real, self.center.shadow.imag, self.theta0],
            "radial_width": self.radial_width,
            "harmonic": self.harmonic,
            "zero_mean": self.zero_mean,
            "amplitude": self.amplitude,
        }


def standard_bump():
    """Default zero-mean observable: cusp band around y = 2 times sin(2 theta).

    The phase theta0 = pi/4 makes the observable odd under the flow-commuting
    involution g -> J g J, J = diag(1, -1), so averages along the flow have
    symmetric laws. The cos(2 theta) phase has a nearly degenerate variance.
    """
    return Observable.cusp(y0=2.0, width=0.6, harmonic=1, theta0=np.pi / 4)


def fallback_bump():
    """Second choice when the standard bump's variance estimate is degenerate."""
    return Observable.cusp(y0=2.0, width=0.6, harmonic=2, theta0=0.0)


def evaluate(phi, x):
    return float(phi(x.representative[None])[0])


def translate(f, g):
    """The function g . f : x -> f(g^{-1} x)."""
    ginv = np.linalg.inv(as_matrix(g))
    return lambda reps: f(ginv @ reps)


def product(*fs):
    def f(reps):
        out = np.ones(len(reps))
        for fi in fs:
            out = out * fi(reps)
        return out

    return f


# ---------------------------------------------------------------- Monte Carlo plumbing


def chunk_rng(seed, index, stream=0):
    """Per-chunk generator: a fixed function of (seed, chunk index, stream)."""
    key = [int(seed), int(index)] + ([int(stream)] if stream else [])
    return np.random.default_rng(key)


def chunk_sizes(samples, chunk=CHUNK):
    n_full, rest = divmod(int(samples), chunk)
    return [chunk] * n_full + ([rest] if rest else [])


def map_chunks(fn, samples, seed, workers=1, chunk=CHUNK, stream=0):
    """Apply ``fn(reps_chunk, rng)`` to mu-samples in fixed chunks.

    Chunks and their seeds depend only on (samples, seed, chunk), so the
    concatenated result is identical for any worker count.
    """
    global _TASK
    sizes = chunk_sizes(samples, chunk)
    jobs = [(seed, i, n, stream) for i, n in enumerate(sizes)]
    _TASK = fn
    try:
        if workers > 1 and len(jobs) > 1 and "fork" in mp.get_all_start_methods():
            # forked workers inherit _TASK, so closures need not be picklable
            with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as ex:
                parts = list(ex.map(_run_chunk, jobs))
        else:
            parts = [_run_chunk(j) for j in jobs]
    finally:
        _TASK = None
    return np.concatenate(parts, axis=0)


_TASK = None


def _run_chunk(job):
    seed, index, n, stream = job
    rng = chunk_rng(seed, index, stream)
    reps = sample_mu_batch(n, rng)
    return _TASK(reps, rng)


def mean_se(values):
    v = np.asarray(values, dtype=float)
    n = len(v)
    return Estimate(float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(n)) if n > 1 else float("nan"))


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    standard_error: float
    samples: int
    tuple: tuple

    def to_json(self):
        return {
            "value": self.value,
            "standard_error": self.standard_error,
            "samples": self.samples,
            "tuple": [np.asarray(g).tolist() for g in self.tuple],
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def correlation(gs, phis, samples, seed, workers=1):
    """Monte Carlo estimate of int_X prod_i phi_i(g_i^{-1} x) d mu(x)."""
    mats = [as_matrix(g) for g in gs]
    if len(mats) != len(phis):
        raise InvalidInputError("need one observable per group element")
    if samples < 1000:
        raise InvalidInputError("at least 10^3 samples")
    invs = [np.linalg.inv(m) for m in mats]

    def fn(reps, rng):
        out = np.ones(len(reps))
        for gi, phi in zip(invs, phis):
            out *= phi(gi @ reps)
        return out

    vals = map_chunks(fn, samples, seed, workers)
    est = mean_se(vals)
    return CorrelationEstimate(est.value, est.se, int(samples), tuple(mats))


# ---------------------------------------------------------------- orbit averages


def orbit(reps, Z, times_step, n_steps):
    """Points exp(k h Z) x for k = 0..n_steps, stepping with reduction.

    Returns an array of shape (n_steps + 1, n, 2, 2).
    """
    E = linalg.expm(times_step * np.asarray(Z, dtype=float))
    out = np.empty((n_steps + 1,) + np.shape(reps))
    cur = reduce_batch(np.asarray(reps, dtype=float))[0]
    out[0] = cur
    for k in range(1, n_steps + 1):
        cur = reduce_batch(E @ cur)[0]
        out[k] = cur
    return out


def simpson_weights(n, h):
    if n % 2:
        raise ValueError("Simpson needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def orbit_values(f, reps, Z, h, n_steps):
    """f evaluated along the orbit, shape (n_steps + 1, n)."""
    E = linalg.expm(h * np.asarray(Z, dtype=float))
    cur = reduce_batch(np.asarray(reps, dtype=float))[0]
    vals = np.empty((n_steps + 1, len(cur)))
    vals[0] = f(cur)
    for k in range(1, n_steps + 1):
        cur = reduce_batch(E @ cur)[0]
        vals[k] = f(cur)
    return vals


def _simpson_grid(T, step):
    n = max(2, 2 * int(np.ceil(T / (2 * step) - 1e-12)))
    return n, T / n


def time_average_batch(f, T, reps, Z=GEODESIC, step=FLOW_STEP):
    """(1/T) int_0^T f(exp(tZ) x) dt by composite Simpson, for each x."""
    if T <= 0:
        raise DomainError("T must be positive")
    if T * np.linalg.norm(Z, 2) > MAX_FLOW_TIME:
        raise DomainError("orbit too long")
    n, h = _simpson_grid(T, step)
    vals = orbit_values(f, reps, Z, h, n)
    return simpson_weights(n, h) @ vals / T


def time_average_PT(phi, T, subgroup, x, step=FLOW_STEP):
    """P_T phi at a single point along the one-parameter subgroup exp(t Z)."""
    return float(time_average_batch(phi, T, x.representative[None], subgroup, step)[0])


def deviation_DT(phi, T, samples, seed, Z=GEODESIC, step=FLOW_STEP, workers=1):
    """L^2(mu) norm of P_T phi - mu(phi), with a delta-method standard error."""
    m = phi.mu if isinstance(phi, Observable) else 0.0

    def fn(reps, rng):
        return (time_average_batch(phi, T, reps, Z, step) - m) ** 2

    sq = mean_se(map_chunks(fn, samples, seed, workers))
    val = np.sqrt(max(sq.value, 0.0))
    se = sq.se / (2 * val) if val > 0 else sq.se ** 0.5
    return Estimate(float(val), float(se)), sq


def deviation_DT_double_integral(phi, T, samples, seed, Z=GEODESIC, step=FLOW_STEP, workers=1):
    """D_T^2 via (1/T^2) int_0^T int_0^T (C(s - t) - mu(phi)^2) ds dt.

    By invariance C(-u) = C(u), so this is (2/T^2) int_0^T (T - u)(C(u) - m^2) du
    with C(u) = mu(phi . phi(exp(uZ) .)) estimated along sampled orbits.
    """
    m = phi.mu if isinstance(phi, Observable) else 0.0
    n, h = _simpson_grid(T, step)
    u = np.arange(n + 1) * h
    w = simpson_weights(n, h) * (T - u) * 2.0 / T ** 2

    def fn(reps, rng):
        vals = orbit_values(phi, reps, Z, h, n)
        return w @ (vals[0][None, :] * vals) - m * m

    return mean_se(map_chunks(fn, samples, seed, workers))


# ---------------------------------------------------------------- Sobolev norms


def derivative(f, X, h=1e-3):
    """pi(X) f: x -> d/ds f(exp(-sX) x) at s = 0, Richardson-extrapolated."""
    X = np.asarray(X, dtype=float)
    E = {k: linalg.expm(k * h * X) for k in (-2, -1, 1, 2)}

    def df(reps):
        d1 = (f(E[-1] @ reps) - f(E[1] @ reps)) / (2 * h)
        d2 = (f(E[-2] @ reps) - f(E[2] @ reps)) / (4 * h)
        return (4 * d1 - d2) / 3

    return df


def sobolev_estimate(phi, ell, samples=2000, seed=0, h=1e-3, basis=SOBOLEV_BASIS):
    """S_ell(phi)^2 = sum over words of length <= ell of ||pi(X_i1)...pi(X_ik) phi||^2.

    Norms are L^2(mu) Monte Carlo averages on a common sample; the
    cumulative sum over word lengths makes S_0 <= S_1 <= S_2 <= S_3.
    """
    if ell not in (0, 1, 2, 3):
        raise UnsupportedError("Sobolev orders 0..3 only")
    rng = np.random.default_rng([int(seed), 0x50B])
    reps = sample_mu_batch(samples, rng)
    total = 0.0
    level = [phi]
    total += float(np.mean(phi(reps) ** 2))
    for _ in range(ell):
        level = [derivative(f, X, h) for f in level for X in basis]
        total += sum(float(np.mean(f(reps) ** 2)) for f in level)
    return float(np.sqrt(total))


def sup_norm(f, samples=20000, seed=0):
    """Empirical sup |f| over mu-samples (a lower bound for the L^inf norm)."""
    reps = sample_mu_batch(samples, np.random.default_rng([int(seed), 0x5A9]))
    return float(np.max(np.abs(f(reps))))


# ---------------------------------------------------------------- norm properties

# Frozen regression constants for norm_property_check, measured with seeds
# 0..4 and 20 trials and then given a factor ~3 of headroom.
NORM_BOUNDS = {"N1": 0.1, "N2": 0.75, "N3": 3.0, "N4": 0.005}
NORM_SAMPLES = 2000


def random_observable(rng):
    """A random cusp or ball bump with a random harmonic and phase."""
    m = int(rng.integers(0, 3))
    th = float(rng.uniform(0, np.pi))
    if rng.random() < 0.5:
        return Observable.cusp(float(rng.uniform(1.6, 3.0)), float(rng.uniform(0.3, 0.45)), m, th)
    z0 = complex(rng.uniform(-0.05, 0.05), rng.uniform(1.3, 1.7))
    return Observable.ball(z0, float(rng.uniform(0.15, 0.22)), m, th)


def random_group_element(rng, max_norm=10.0):
    """k a(s) k' with operator norm s uniform in log on [1, max_norm]."""
    s = float(np.exp(rng.uniform(0, np.log(max_norm))))
    k1, k2 = rng.uniform(0, 2 * np.pi, 2)
    c1, s1, c2, s2 = np.cos(k1), np.sin(k1), np.cos(k2), np.sin(k2)
    return np.array([[c1, -s1], [s1, c1]]) @ np.diag([s, 1 / s]) @ np.array([[c2, -s2], [s2, c2]])


@dataclass(frozen=True)
class NormReport:
    property: str
    ratios: tuple
    max_ratio: float
    bound: float
    passed: bool
    slope: float = float("nan")

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def norm_property_check(prop, trials=20, seed=0):
    """Empirical ratios for the Sobolev-norm properties N1..N4.

    N1: sup|phi| / S_2(phi).
    N2: sup|g.phi - phi| / (||g - e|| S_2(phi)) for g near and far from e.
    N3: S_1(g.phi) / (||g||^2 S_1(phi)); ``slope`` is the log-log slope of
        S_1(g.phi) / S_1(phi) against ||g||.
    N4: S_1(phi1 phi2) / (S_2(phi1) S_2(phi2)).
    S_l is estimated on a fixed sample of NORM_SAMPLES points.
    """
    if prop not in NORM_BOUNDS:
        raise InvalidInputError("property must be one of N1..N4")
    if trials < 20:
        raise InvalidInputError("at least 20 trials")
    rng = np.random.default_rng([int(seed), int(prop[1])])
    ratios, xs, ys = [], [], []
    for k in range(trials):
        s = int(rng.integers(0, 2**31))
        phi = random_observable(rng)
        if prop == "N1":
            ratios.append(sup_norm(phi, seed=s) / sobolev_estimate(phi, 2, NORM_SAMPLES, s))
        elif prop == "N2":
            if k % 2:
                g = random_group_element(rng)
            else:
                g = linalg.expm(np.tensordot(0.05 * rng.normal(size=3), SOBOLEV_BASIS, 1))
            dist = np.linalg.norm(g - np.eye(2), 2)
            diff = sup_norm(lambda r: translate(phi, g)(r) - phi(r), seed=s)
            ratios.append(diff / (dist * sobolev_estimate(phi, 2, NORM_SAMPLES, s)))
        elif prop == "N3":
            g = random_group_element(rng)
            n = np.linalg.norm(g, 2)
            q = sobolev_estimate(translate(phi, g), 1, NORM_SAMPLES, s) / sobolev_estimate(phi, 1, NORM_SAMPLES, s)
            ratios.append(q / n**2)
            xs.append(np.log(n))
            ys.append(np.log(q))
        else:
            psi = random_observable(rng)
            num = sobolev_estimate(product(phi, psi), 1, NORM_SAMPLES, s)
            ratios.append(num / (sobolev_estimate(phi, 2, NORM_SAMPLES, s) * sobolev_estimate(psi, 2, NORM_SAMPLES, s)))
    slope = float(np.polyfit(xs, ys, 1)[0]) if xs else float("nan")
    mx = float(max(ratios))
    return NormReport(prop, tuple(float(r) for r in ratios), mx, NORM_BOUNDS[prop], bool(np.isfinite(mx) and mx <= NORM_BOUNDS[prop]), slope)
