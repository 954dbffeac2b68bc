"""The Harish-Chandra function on SL(2, R) and matrix-coefficient bounds.

Everything here works in the Cartan coordinates
g = k(theta1) a(s) k(theta2), where Haar measure is
(s^2 - s^-2) d theta1 (ds/s) d theta2 and K carries the probability
measure d theta / 2 pi.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, InvalidInputError, ResourceError, UnsupportedError
from .group_core import _as_diagonal, as_matrix, k_rot

XI_TOL = 1e-10


def xi_sl2(t):
    """Xi(a(t)) = (1/2pi) int_0^{2pi} (t^-2 cos^2 + t^2 sin^2)^(-1/2) d theta."""
    if t < 1:
        raise DomainError("xi_sl2 is defined on A+ (t >= 1)")
    if t == 1:
        return 1.0
    A, B = t ** -2, t ** 2

    def f(th):
        return (A * np.cos(th) ** 2 + B * np.sin(th) ** 2) ** -0.5

    # the integrand peaks sharply at theta = 0 when t is large; split there
    knee = min(np.pi / 2, 8.0 / (t * t))
    q1, _ = integrate.quad(f, 0.0, knee, epsabs=XI_TOL / 10, epsrel=1e-13, limit=200)
    q2, _ = integrate.quad(f, knee, np.pi / 2, epsabs=XI_TOL / 10, epsrel=1e-13, limit=200)
    # four quarter-periods, normalized by 2 pi
    return 4.0 * (q1 + q2) / (2 * np.pi)


def xi_general(g):
    """Xi(g) = int_K Delta(a(k g))^{-1/2} dk for g in SL(2, R).

    Uses the Iwasawa decomposition of k(theta) g directly; this is an
    independent route to the same number as :func:`xi_sl2`.
    """
    m = as_matrix(g)
    if m.shape != (2, 2):
        raise UnsupportedError("xi_general is implemented for d = 2")
    # for k g = u a(s) k', the bottom row of k g has norm 1/s, so
    # Delta(a)^{-1/2} = s = 1 / |bottom row of k(theta) g|
    def f(th):
        row = np.sin(th) * m[0] + np.cos(th) * m[1]
        return 1.0 / np.hypot(row[0], row[1])

    sv = np.linalg.svd(m, compute_uv=False)
    pts = None
    if sv[0] > 4:
        # locate the peak (row of k g aligned with the short singular direction)
        grid = np.linspace(0, 2 * np.pi, 2049)
        vals = np.array([f(th) for th in grid])
        pts = [grid[np.argmax(vals)]]
        pts.append((pts[0] + np.pi) % (2 * np.pi))
        pts = sorted(pts)
    val, _ = integrate.quad(f, 0.0, 2 * np.pi, points=pts, epsabs=1e-11, epsrel=1e-12, limit=400)
    return val / (2 * np.pi)


def sector_angle(s, t):
    """Angle bound 2 arcsin(s^2 / t) for the two exceptional sectors."""
    if not s > 1:
        raise DomainError("need s > 1")
    if t < s * s:
        raise DomainError("bound is vacuous for t < s^2")
    return 2.0 * np.arcsin(s * s / t)


def decay_exponent_bound(a, eps=0.01):
    """(max_{i != j} a_i / a_j)^(-1/4 + eps) for a in A+ of SL(d), d >= 3."""
    a = _as_diagonal(a)
    if len(a) < 3:
        raise UnsupportedError("the higher-rank bound needs d >= 3")
    if np.any(a <= 0):
        raise InvalidInputError("diagonal must be positive")
    ratio = a.max() / a.min()
    return float(ratio ** (-0.25 + eps))


# ---------------------------------------------------------------- K-bi-invariant functions


@dataclass(frozen=True)
class KBiInvariantFunction:
    """f(k1 a(s) k2) = profile(s) on [1, t_max], zero beyond t_max."""

    knots: tuple
    values: tuple
    slopes: tuple

    def __post_init__(self):
        if self.knots[0] != 1.0:
            raise InvalidInputError("profile must start at s = 1")
        if self.values[-1] != 0.0:
            raise InvalidInputError("profile must vanish at t_max")
        if np.any(np.diff(self.knots) <= 0):
            raise InvalidInputError("knots must increase")
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.knots, self.values, self.slopes))

    @property
    def t_max(self):
        return self.knots[-1]

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 1.0) & (s < self.t_max)
        return np.where(inside, self._spline(np.clip(s, 1.0, self.t_max)), 0.0)

    def __call__(self, g):
        """Evaluate on a matrix or a stack of matrices."""
        m = np.asarray(as_matrix(g))
        return self.profile(np.linalg.svd(m, compute_uv=False)[..., 0])

    @classmethod
    def random(cls, rng, t_max=None, n_knots=5):
        """Nonnegative piecewise-cubic C^1 bump on [1, t_max], t_max <= 8."""
        if t_max is None:
            t_max = rng.uniform(2.0, 8.0)
        if t_max > 8.0:
            raise ResourceError("t_max <= 8 keeps the coefficient integrals affordable")
        knots = np.linspace(1.0, t_max, n_knots)
        values = rng.uniform(0.1, 1.0, n_knots)
        values[-1] = 0.0
        slopes = rng.uniform(-1.0, 1.0, n_knots) * 0.2
        slopes[-1] = 0.0
        slopes[0] = 0.0
        # keep the Hermite pieces nonnegative
        values[:-1] = np.maximum(values[:-1], 0.2)
        return cls(tuple(knots), tuple(values), tuple(slopes))


def top_singular_sq(s, theta, t):
    """sigma_1^2 of a(s) k(theta) a(t), in closed form (det = 1)."""
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    fro = (s * t) ** 2 * c2 + (s / t) ** 2 * s2 + (t / s) ** 2 * s2 + (s * t) ** -2 * c2
    return (fro + np.sqrt(np.maximum(fro * fro - 4.0, 0.0))) / 2.0


def l2_norm_sq(f):
    """||f||_2^2 for a K-bi-invariant f with the Cartan Haar normalization."""
    val, _ = integrate.quad(
        lambda s: f.profile(s) ** 2 * (s * s - 1 / (s * s)) / s,
        1.0, f.t_max, points=list(f.knots[1:-1]), epsabs=1e-13, epsrel=1e-11, limit=400,
    )
    return (2 * np.pi) ** 2 * val


def _gl_panels(edges, n_panels, order=8):
    """Composite Gauss-Legendre nodes/weights over consecutive edge intervals."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(lo, hi, n_panels + 1)
        a, b = cuts[:-1, None], cuts[1:, None]
        nodes.append(((b - a) / 2 * x + (a + b) / 2).ravel())
        weights.append(((b - a) / 2 * w).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _theta_support(s, t, T):
    """[lo, hi] in [0, pi/2] where sigma_1(a(s) k(theta) a(t)) < T, per s.

    ||.||_F^2 = B + (A - B) cos^2 theta with A = (st)^2 + (st)^-2 and
    B = (s/t)^2 + (t/s)^2, and sigma_1 < T iff ||.||_F^2 < T^2 + T^-2.
    """
    A = (s * t) ** 2 + (s * t) ** -2
    B = (s / t) ** 2 + (t / s) ** 2
    F = T * T + T ** -2
    lo = np.zeros_like(s)
    hi = np.full_like(s, np.pi / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        cut = np.arccos(np.sqrt(np.clip((F - B) / (A - B), 0.0, 1.0)))
    partial = (np.minimum(A, B) < F) & (np.maximum(A, B) > F)
    lo = np.where(partial & (A > B), cut, lo)
    hi = np.where(partial & (A < B), cut, hi)
    empty = np.minimum(A, B) >= F
    return lo, np.where(empty, lo, hi)


def _coeff_on_grid(phi, psi, t, n, block=256):
    T = phi.t_max
    cuts = [x for x in (t / T, T / t) if 1.0 < x < psi.t_max]
    s, ws = _gl_panels(np.unique(np.r_[psi.knots, cuts]), n)
    u, wu = _gl_panels(np.array([0.0, 1.0]), 4 * n)
    lo, hi = _theta_support(s, t, T)
    radial = psi.profile(s) * (s * s - 1 / (s * s)) / s
    total = 0.0
    for k in range(0, len(s), block):
        sl = slice(k, k + block)
        span = (hi[sl] - lo[sl])[:, None]
        th = lo[sl, None] + span * u[None, :]
        sig = np.sqrt(top_singular_sq(s[sl, None], th, t))
        inner = (phi.profile(sig) * span) @ wu
        total += float(np.sum(ws[sl] * radial[sl] * inner))
    return (2 * np.pi) * 4.0 * total


def regular_coeff(phi, psi, t, rtol=1e-4, max_panels=512):
    """<lambda(a(t)) phi, psi> = int_G phi(g a(t)) psi(g) dg.

    For g = k1 a(s) k2, phi(g a(t)) depends only on (s, theta2), so the
    theta1 integral contributes 2 pi. The theta2 range reduces to
    [0, pi/2] via k(theta + pi) = -k(theta) and conjugation by diag(1, -1).
    For each s the theta nodes cover only the interval where phi can be
    nonzero. Composite Gauss-Legendre panels are doubled until two
    successive values agree to ``rtol / 10``.
    """
    if t < 1:
        raise DomainError("t >= 1 expected")
    if max(phi.t_max, psi.t_max) > 8.0:
        raise ResourceError("supports beyond t_max = 8 exceed the quadrature budget")
    # sigma_1(g a(t)) >= t / s, so the supports cannot meet
    if t >= phi.t_max * psi.t_max:
        return 0.0
    n = 8
    prev = _coeff_on_grid(phi, psi, t, n)
    while True:
        n *= 2
        if n > max_panels:
            raise ResourceError("panel budget exhausted before convergence")
        cur = _coeff_on_grid(phi, psi, t, n)
        if abs(cur - prev) <= rtol / 10 * max(abs(cur), 1e-12 * l2_norm_sq(psi)):
            return cur
        prev = cur


def herz_bound(phi, psi, t):
    """Right-hand side Xi(a(t)) ||phi||_2 ||psi||_2."""
    return xi_sl2(t) * np.sqrt(l2_norm_sq(phi) * l2_norm_sq(psi))


def bi_k_translate(g, th1, th2):
    return k_rot(th1) @ as_matrix(g) @ k_rot(th2)
