"""Integer points of SL(d, R), counting in Frobenius balls and lattice configurations.

Norm balls are B_t = {g : ||g||_F < t}. Haar measure on SL(2, R) is the
Cartan measure (s^2 - s^-2) d theta1 (ds / s) d theta2, for which
vol(B_t) = 2 pi^2 (t^2 - 2) and vol(SL(2, R) / SL(2, Z)) = pi^2 / 3.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import gcd, isqrt
import csv
import io

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, InvalidInputError, ResourceError
from .group_core import (
    GroupTuple,
    a_diag,
    ball_radial_max,
    cartan_decompose,
    k_rot,
    riemannian_distance,
    sample_ball_batch,
)
from .homspace import COVOLUME, Estimate, chunk_rng, chunk_sizes, hyperbolic_distance, sample_mu_batch

T_CAP = {2: 80.0, 3: 5.0}
D_CAP = 30.0
# Cartan measure / Iwasawa measure (Delta(a) du da dk, da = d tau / tau); see matching_constant()
HAAR_MATCH = 2.0


# ---------------------------------------------------------------- lattice elements


@dataclass(frozen=True)
class LatticeElement:
    """An integer matrix of determinant exactly one."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.entries)
        if _int_det(rows) != 1:
            raise InvalidInputError("lattice element must have determinant 1")
        object.__setattr__(self, "entries", rows)

    def matrix(self):
        return np.array(self.entries, dtype=float)

    @property
    def norm_sq(self):
        return sum(x * x for row in self.entries for x in row)


def _int_det(rows):
    if len(rows) == 2:
        (a, b), (c, d) = rows
        return a * d - b * c
    (a, b, c), (d, e, f), (g, h, i) = rows
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


# ---------------------------------------------------------------- enumeration


def _scan_sl2_rows(args):
    t, a_vals = args
    t2 = t * t
    m = int(np.ceil(t))
    rng = np.arange(-m, m + 1, dtype=np.int64)
    B, C = np.meshgrid(rng, rng, indexing="ij")
    B, C = B.ravel(), C.ravel()
    out = []
    for a in a_vals:
        base = a * a + B * B + C * C
        keep = base < t2
        b, c = B[keep], C[keep]
        if a == 0:
            pair = b * c == -1
            b, c = b[pair], c[pair]
            dm = int(np.ceil(t))
            ds = np.arange(-dm, dm + 1, dtype=np.int64)
            bb, dd = np.repeat(b, len(ds)), np.tile(ds, len(b))
            cc = np.repeat(c, len(ds))
            ok = 0 + bb * bb + cc * cc + dd * dd < t2
            rows = np.stack([np.zeros(ok.sum(), dtype=np.int64), bb[ok], cc[ok], dd[ok]], axis=1)
        else:
            num = 1 + b * c
            div = num % a == 0
            b, c, num = b[div], c[div], num[div]
            d = num // a
            ok = a * a + b * b + c * c + d * d < t2
            rows = np.stack([np.full(ok.sum(), a, dtype=np.int64), b[ok], c[ok], d[ok]], axis=1)
        out.append(rows)
    return np.concatenate(out) if out else np.zeros((0, 4), dtype=np.int64)


def _sort_rows(rows):
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def _enumerate_sl2(t, workers=1):
    m = int(np.ceil(t))
    a_all = list(range(-m, m + 1))
    if workers > 1:
        parts = [a_all[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_scan_sl2_rows, [(t, p) for p in parts]))
    else:
        rows = [_scan_sl2_rows((t, a_all))]
    rows = _sort_rows(np.concatenate(rows))
    return rows.reshape(-1, 2, 2)


def _enumerate_sl3(t):
    t2 = t * t
    m = int(np.ceil(t))
    r = np.arange(-m, m + 1, dtype=np.int64)
    V = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    nv = (V * V).sum(1)
    keep = (nv > 0) & (nv < t2)
    V, nv = V[keep], nv[keep]
    out = []
    for i in range(len(V)):
        r1 = V[i]
        m2 = nv + nv[i] < t2 - 1
        R2 = V[m2]
        n2 = nv[m2]
        Cx = np.cross(r1[None, :], R2)
        dots = Cx @ V.T
        hit = (dots == 1) & ((nv[i] + n2)[:, None] + nv[None, :] < t2)
        j2, j3 = np.nonzero(hit)
        if len(j2):
            mats = np.stack([np.broadcast_to(r1, (len(j2), 3)), R2[j2], V[j3]], axis=1)
            out.append(mats.reshape(-1, 9))
    if not out:
        return np.zeros((0, 3, 3), dtype=np.int64)
    rows = _sort_rows(np.concatenate(out))
    return rows.reshape(-1, 3, 3)


def enumerate_lattice_array(t, d=2, workers=1):
    """All gamma in SL(d, Z) with ||gamma||_F < t as an integer array, sorted lexicographically."""
    if d not in T_CAP:
        raise InvalidInputError("d must be 2 or 3")
    if t > T_CAP[d]:
        raise ResourceError(f"t <= {T_CAP[d]} for d = {d}")
    if t < np.sqrt(d):
        raise DomainError(f"t >= sqrt({d}) required")
    return _enumerate_sl2(t, workers) if d == 2 else _enumerate_sl3(t)


def enumerate_lattice_ball(t, d=2, workers=1):
    """The elements of Gamma in B_t as LatticeElement objects (lexicographic order)."""
    return [LatticeElement(m.tolist()) for m in enumerate_lattice_array(t, d, workers)]


def _ext_gcd(a, b):
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def enumerate_sl2_by_columns(t):
    """Second strategy: primitive first columns (a, c) and the lines of second columns.

    For a primitive column, the solutions of a d - b c = 1 are
    (b, d) = (b0, d0) + k (a, c); the norm bound is a quadratic in k.
    """
    t2 = t * t
    m = int(np.ceil(t))
    rows = []
    for a in range(-m, m + 1):
        for c in range(-m, m + 1):
            n1 = a * a + c * c
            if n1 == 0 or n1 + 1 >= t2 or gcd(a, c) != 1:
                continue
            _, x, y = _ext_gcd(a, c)  # a x + c y = 1
            d0, b0 = x, -y
            # n1 + (b0 + k a)^2 + (d0 + k c)^2 < t^2
            A = n1
            Bq = 2 * (a * b0 + c * d0)
            Cq = b0 * b0 + d0 * d0 + n1 - t2
            disc = Bq * Bq - 4 * A * Cq
            if disc < 0:
                continue
            lo = int(np.floor((-Bq - np.sqrt(disc)) / (2 * A))) - 1
            hi = int(np.ceil((-Bq + np.sqrt(disc)) / (2 * A))) + 1
            for k in range(lo, hi + 1):
                b, d = b0 + k * a, d0 + k * c
                if n1 + b * b + d * d < t2:
                    rows.append((a, b, c, d))
    arr = np.array(sorted(rows), dtype=np.int64).reshape(-1, 4)
    return arr.reshape(-1, 2, 2)


# ---------------------------------------------------------------- volumes


def ball_volume_sl2(t):
    """vol(B_t) = (2 pi)^2 [(s*^2 + s*^-2)/2 - 1] = 2 pi^2 (t^2 - 2); zero for t <= sqrt 2."""
    if t <= np.sqrt(2.0):
        return 0.0
    s = ball_radial_max(t)
    return (2 * np.pi) ** 2 * ((s * s + 1 / (s * s)) / 2 - 1)


def ball_volume_quadrature(t):
    """(2 pi)^2 times the radial integral of (s^2 - s^-2)/s over [1, s*]."""
    if t <= np.sqrt(2.0):
        return 0.0
    val, _ = integrate.quad(lambda s: (s * s - 1 / (s * s)) / s, 1.0, ball_radial_max(t), epsabs=0, epsrel=1e-13)
    return (2 * np.pi) ** 2 * val


def iwasawa_ball_volume(t):
    """Measure of B_t in the Iwasawa normalization Delta(a) du da dk.

    For g = u(x) a(tau) k, ||g||_F^2 = tau^2 + (x^2 + 1) / tau^2, so the x-slice
    has length 2 sqrt(t^2 tau^2 - tau^4 - 1) and the density is tau^-3.
    """
    if t <= np.sqrt(2.0):
        return 0.0
    t2 = t * t
    root = np.sqrt(t2 * t2 - 4.0)
    lo, hi = np.sqrt((t2 - root) / 2), np.sqrt((t2 + root) / 2)

    def f(tau):
        return 2.0 * np.sqrt(max(t2 * tau * tau - tau ** 4 - 1.0, 0.0)) / tau ** 3

    val, _ = integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=200)
    return 2 * np.pi * val


def matching_constant(t=2.0):
    """Ratio of the Cartan to the Iwasawa measure of B_t."""
    return ball_volume_quadrature(t) / iwasawa_ball_volume(t)


@dataclass(frozen=True)
class CovolumeEstimate:
    value: float
    standard_error: float
    samples: int
    matching_constant: float = HAAR_MATCH


def covolume_estimate(samples, seed):
    """Monte Carlo volume of SL(2, R)/SL(2, Z) in the Cartan normalization.

    The fundamental domain {|x| <= 1/2, x^2 + tau^4 >= 1} x [0, pi) carries
    tau^-3 dx d tau d theta; with v = tau^-2 this is dx dv d theta / 2 on
    {0 < v <= (1 - x^2)^-1/2}, sampled by hit-or-miss in a box.
    """
    if samples < 10_000:
        raise InvalidInputError("at least 10^4 samples")
    hits = 0
    for i, n in enumerate(chunk_sizes(samples)):
        rng = chunk_rng(seed, i)
        x = rng.random(n) - 0.5
        v = rng.random(n) * (2 / np.sqrt(3.0))
        hits += int(np.count_nonzero(v <= 1.0 / np.sqrt(1.0 - x * x)))
    p = hits / samples
    box = np.pi * 0.5 * (2 / np.sqrt(3.0))
    val = HAAR_MATCH * box * p
    se = HAAR_MATCH * box * np.sqrt(p * (1 - p) / samples)
    return CovolumeEstimate(float(val), float(se), int(samples))


# ---------------------------------------------------------------- counting


@dataclass(frozen=True)
class CountReport:
    t_grid: tuple
    counts: tuple
    volumes: tuple
    ratios: tuple
    ratio_limit: float
    drift: float

    def rows(self):
        return list(zip(self.t_grid, self.counts, self.volumes, self.ratios))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "count", "volume", "ratio"])
        for t, c, v, r in self.rows():
            w.writerow([repr(float(t)), int(c), repr(float(v)), repr(float(r))])
        return buf.getvalue()

    def to_json(self):
        return {
            "t": list(self.t_grid),
            "count": list(self.counts),
            "volume": list(self.volumes),
            "ratio": list(self.ratios),
            "ratio_limit": self.ratio_limit,
            "drift": self.drift,
        }


def count_ratio_experiment(t_grid, workers=1):
    """|Gamma cap B_t| / vol(B_t) along an increasing grid (one enumeration at max t)."""
    ts = [float(t) for t in t_grid]
    if not ts or np.any(np.diff(ts) <= 0):
        raise InvalidInputError("t grid must be nonempty and increasing")
    if ts[0] <= np.sqrt(2.0):
        raise DomainError("grid must start above sqrt 2")
    mats = enumerate_lattice_array(ts[-1], 2, workers)
    n2 = (mats.reshape(len(mats), -1) ** 2).sum(1)
    counts = tuple(int(np.count_nonzero(n2 < t * t)) for t in ts)
    vols = tuple(ball_volume_sl2(t) for t in ts)
    ratios = tuple(c / v for c, v in zip(counts, vols))
    drift = abs(ratios[-1] - ratios[-2]) / ratios[-2] if len(ratios) > 1 else float("nan")
    return CountReport(tuple(ts), counts, vols, ratios, ratios[-1], float(drift))


# ---------------------------------------------------------------- well-roundedness


@dataclass(frozen=True)
class WellRoundedReport:
    t: float
    rho: float
    delta: float
    volume: float
    outer_bound: float
    inner_bound: float
    mc_plus: float
    mc_plus_se: float
    mc_minus: float
    mc_minus_se: float
    holds: bool
    holds_mc: bool
    pairs: int
    note: str = "B_t^+/- from 64 sampled pairs; verdict uses the enclosures B_{t e^(+-sqrt2 rho)}"

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _sample_O(rho, n, rng):
    # elements with d(g, e) <= rho: k(th1) a(s) k(th2), sqrt2 log s <= rho
    s = np.exp(rng.random(n) * rho / np.sqrt(2.0))
    s[: max(1, n // 4)] = np.exp(rho / np.sqrt(2.0))  # boundary elements matter most
    out = np.empty((n, 2, 2))
    for j in range(n):
        out[j] = k_rot(rng.uniform(0, 2 * np.pi)) @ a_diag(s[j]) @ k_rot(rng.uniform(0, 2 * np.pi))
    return out


def well_rounded_check(t, rho, delta, samples=20_000, seed=0, pairs=64):
    """delta-sandwich delta^-1 m(B_t^+) <= m(B_t) <= delta m(B_t^-) for the ball O_rho.

    B_t^+ is the union and B_t^- the intersection of g1 B_t g2 over g1, g2
    in O_rho. Since ||g||_op <= e^{rho / sqrt 2} on O_rho, B_t^+ sits inside
    B_{t e^{sqrt2 rho}} and B_t^- contains B_{t e^{-sqrt2 rho}}; the verdict
    uses these enclosures. Monte Carlo over sampled pairs is reported too.
    """
    if not delta > 1:
        raise InvalidInputError("delta > 1 required")
    if rho < 0:
        raise InvalidInputError("rho >= 0 required")
    vol = ball_volume_sl2(t)
    f = np.exp(np.sqrt(2.0) * rho)
    outer = ball_volume_sl2(t * f)
    inner = ball_volume_sl2(t / f)
    holds = bool(vol > 0 and inner > 0 and outer <= delta * vol and vol <= delta * inner)

    rng = np.random.default_rng([int(seed), 0x0B])
    g1 = _sample_O(rho, pairs, rng)
    g2 = _sample_O(rho, pairs, rng)
    g1[0] = np.eye(2)
    g2[0] = np.eye(2)
    g1i, g2i = np.linalg.inv(g1), np.linalg.inv(g2)

    def inside(b):
        # b in g1 B_t g2  <=>  ||g1^-1 b g2^-1|| < t ; shape (n, pairs)
        prod = np.einsum("pij,njk,pkl->npil", g1i, b, g2i)
        return (prod ** 2).sum(axis=(2, 3)) < t * t

    b_out = sample_ball_batch(t * f, samples, rng) if t * f > np.sqrt(2) else np.zeros((0, 2, 2))
    frac_plus = inside(b_out).any(axis=1).mean() if len(b_out) else 0.0
    b_in = sample_ball_batch(t, samples, rng) if t > np.sqrt(2) else np.zeros((0, 2, 2))
    frac_minus = inside(b_in).all(axis=1).mean() if len(b_in) else 0.0
    mp, mm = outer * frac_plus, vol * frac_minus
    mp_se = outer * np.sqrt(frac_plus * (1 - frac_plus) / max(samples, 1))
    mm_se = vol * np.sqrt(frac_minus * (1 - frac_minus) / max(samples, 1))
    holds_mc = bool(mm > 0 and mp <= delta * vol and vol <= delta * mm)
    return WellRoundedReport(
        float(t), float(rho), float(delta), vol, outer, inner,
        float(mp), float(mp_se), float(mm), float(mm_se), holds, holds_mc, int(pairs),
    )


# ---------------------------------------------------------------- counting functional


@dataclass(frozen=True)
class CrosscheckReport:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    diff: float
    combined_se: float

    @property
    def within_3se(self):
        return abs(self.diff) <= 3 * self.combined_se

    def to_json(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["within_3se"] = self.within_3se
        return d


def _lattice_count(g1, g2, t, gammas):
    """F_t(g1, g2) = #{gamma : ||g1 gamma g2^-1||_F < t} for paired stacks.

    ||A gamma B||_F^2 is the quadratic form of (B B^T) kron (A^T A) on the
    column-stacked gamma.
    """
    B = np.linalg.inv(g2)
    K = np.einsum("nik,njl->nijkl", B @ np.swapaxes(B, 1, 2), np.swapaxes(g1, 1, 2) @ g1).reshape(-1, 4, 4)
    v = np.swapaxes(gammas, 1, 2).reshape(-1, 4)  # vec = stacked columns
    out = np.zeros(len(g1), dtype=np.int64)
    for s in range(0, len(g1), 256):
        q = np.einsum("gi,nij,gj->ng", v, K[s : s + 256], v, optimize=True)
        out[s : s + 256] = (q < t * t).sum(axis=1)
    return out


def counting_functional_crosscheck(t, phi, samples, seed):
    """<F_t, phi x phi> against (1/covol) int_{B_t} <pi(b) phi, phi> dm(b).

    Both sides use the probability measure mu on X, which is where the
    factor 1 / vol(G / Gamma) enters. lhs averages F_t(x1, x2) phi(x1) phi(x2)
    over independent mu-pairs; rhs averages phi(b^-1 x) phi(x) over Haar b in
    B_t and mu-distributed x, scaled by vol(B_t) / covol.
    """
    rng = np.random.default_rng([int(seed), 0xF7])
    x1 = sample_mu_batch(samples, rng)
    x2 = sample_mu_batch(samples, rng)
    f1, f2 = phi(x1), phi(x2)
    live = (f1 != 0) & (f2 != 0)
    vals = np.zeros(samples)
    if live.any() and t > np.sqrt(2.0):
        a, b = x1[live], x2[live]
        # ||g1 gamma g2^-1|| >= ||gamma|| / (||g1^-1||_op ||g2||_op)
        reach = t * np.linalg.norm(np.linalg.inv(a), 2, axis=(1, 2)).max() * np.linalg.norm(b, 2, axis=(1, 2)).max()
        if reach > T_CAP[2]:
            raise ResourceError("observable support too large for the lattice list")
        gammas = enumerate_lattice_array(max(reach, 1.5), 2).astype(float)
        vals[live] = _lattice_count(a, b, t, gammas) * f1[live] * f2[live]
    lhs = Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples)))

    if t > np.sqrt(2.0):
        bb = sample_ball_batch(t, samples, rng)
        x = sample_mu_batch(samples, rng)
        scale = ball_volume_sl2(t) / COVOLUME
        r = scale * phi(np.linalg.inv(bb) @ x) * phi(x)
        rhs = Estimate(float(r.mean()), float(r.std(ddof=1) / np.sqrt(samples)))
    else:
        rhs = Estimate(0.0, 0.0)
    return CrosscheckReport(lhs.value, lhs.se, rhs.value, rhs.se, lhs.value - rhs.value, float(np.hypot(lhs.se, rhs.se)))


# ---------------------------------------------------------------- the distance set


def _two_squares(n):
    """All (p, q) with p, q >= 0 and p^2 + q^2 = n."""
    if n < 0:
        return []
    p = np.arange(0, isqrt(n) + 1, dtype=np.int64)
    rem = n - p * p
    q = np.floor(np.sqrt(rem.astype(float))).astype(np.int64)
    q = np.where((q + 1) * (q + 1) <= rem, q + 1, q)
    q = np.where(q * q > rem, q - 1, q)
    ok = q * q == rem
    return list(zip(p[ok].tolist(), q[ok].tolist()))


def quadruple_for_norm(n):
    """An integer (a, b, c, d) with ad - bc = 1 and a^2 + b^2 + c^2 + d^2 = n, or None.

    (a + d)^2 + (b - c)^2 = n + 2 and (a - d)^2 + (b + c)^2 = n - 2, so we
    need representations r^2 + s^2 = n + 2, p^2 + q^2 = n - 2 with matching
    parities; then a = (r + p)/2, d = (r - p)/2, b = (q + s)/2, c = (q - s)/2.
    """
    if n < 2:
        return None
    lows = _two_squares(n - 2)
    if not lows:
        return None
    highs = _two_squares(n + 2)
    for r, s in highs:
        for p, q in lows:
            if (r - p) % 2 == 0 and (s - q) % 2 == 0:
                a, d, b, c = (r + p) // 2, (r - p) // 2, (q + s) // 2, (q - s) // 2
                assert a * d - b * c == 1 and a * a + b * b + c * c + d * d == n
                return a, b, c, d
    return None


@dataclass(frozen=True)
class DistanceSetResult:
    found: bool
    delta: float
    quadruple: tuple
    error: float
    checked: int

    def to_json(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def distance_set_approximation(D, eps):
    """The element of Delta = {arccosh(n / 2)} closest to D, n = ||gamma||_F^2.

    Norms n are visited in increasing order of |arccosh(n/2) - D|, so the
    first representable one is the minimizer over all integer quadruples;
    the search stops once the next candidate is farther than eps.
    """
    if not D > 0:
        raise InvalidInputError("D > 0 required")
    if D > D_CAP:
        raise ResourceError(f"D <= {D_CAP} keeps the norms within exact integer range")
    target = 2 * np.cosh(D)
    lo = max(2, int(np.floor(target)))
    hi = lo + 1

    def dist(n):
        return abs(float(np.arccosh(n / 2.0)) - D)

    checked = 0
    while True:
        if lo >= 2 and dist(lo) <= dist(hi):
            n = lo
            lo -= 1
        else:
            n = hi
            hi += 1
        err = dist(n)
        if err >= eps:
            return DistanceSetResult(False, float("nan"), (), err, checked)
        checked += 1
        quad = quadruple_for_norm(n)
        if quad is not None:
            return DistanceSetResult(True, float(np.arccosh(n / 2.0)), quad, err, checked)


# ---------------------------------------------------------------- configurations


@dataclass(frozen=True)
class ConfigResult:
    found: bool
    gammas: tuple
    g: np.ndarray
    max_distance: float
    method: str
    partial: bool = False

    def to_json(self):
        return {
            "found": self.found,
            "gammas": [np.asarray(x).astype(int).tolist() for x in self.gammas],
            "g": None if self.g is None else np.asarray(self.g).tolist(),
            "max_distance": self.max_distance,
            "method": self.method,
            "partial": self.partial,
        }


def _max_dist(gs, g, gammas):
    return max(riemannian_distance(gi, g @ ga) for gi, ga in zip(gs, gammas))


def _as_integer(m, tol=1e-9):
    r = np.round(m)
    if np.all(np.abs(m - r) <= tol) and round(np.linalg.det(r)) == 1:
        return r
    return None


def _g_from_params(p):
    x, ly, th = p
    return np.array([[1.0, x], [0.0, 1.0]]) @ a_diag(np.exp(ly / 2)) @ k_rot(th)


def approximate_configuration(gs, eps, search_radius=12.0, restarts=50, seed=0, max_combos=2000):
    """Find g in G and gamma_i in SL(2, Z) with d(g_i, g gamma_i) < eps.

    Lattice tuples are solved exactly with g = e. For r = 2 the problem
    reduces to the distance set: with h = g_1^-1 g_2 = k a(s) k', pick gamma
    with arccosh(||gamma||^2 / 2) close to 2 log s and split the error
    along the geodesic. Larger r uses candidates from the lattice ball,
    pairwise distance pruning and Nelder-Mead over g with restarts.
    """
    if not isinstance(gs, GroupTuple):
        gs = GroupTuple(tuple(gs))
    if gs[0].dim != 2:
        raise InvalidInputError("configurations are searched in SL(2, R)")
    if not eps > 0:
        raise InvalidInputError("eps > 0 required")
    ms = [g.entries for g in gs]

    ints = [_as_integer(m) for m in ms]
    if all(x is not None for x in ints):
        return ConfigResult(True, tuple(ints), np.eye(2), 0.0, "lattice")

    if len(ms) == 2:
        return _config_pair(ms, eps)
    return _config_search(ms, eps, search_radius, restarts, seed, max_combos)


def _config_pair(ms, eps):
    h = np.linalg.solve(ms[0], ms[1])
    cc = cartan_decompose(h)
    s = cc.a[0, 0]
    D = 2 * np.log(s)  # hyperbolic distance between g_1 i and g_2 i
    res = distance_set_approximation(max(D, 1e-12), 2 * np.sqrt(2.0) * eps) if D <= D_CAP else None
    if res is None or not res.quadruple:
        return ConfigResult(False, (), None, float("inf"), "distance-set")
    gamma = np.array(res.quadruple, dtype=float).reshape(2, 2)
    cg = cartan_decompose(gamma)
    s2 = cg.a[0, 0]
    # g = g_1 k a(u) k_gamma^-1 with u splitting the radial mismatch evenly
    u = np.sqrt(s / s2)
    g = ms[0] @ cc.k1 @ a_diag(u) @ np.linalg.inv(cg.k1)
    gammas = (np.eye(2), gamma)
    md = _max_dist(ms, g, gammas)
    return ConfigResult(bool(md < eps), gammas, g, float(md), "distance-set")


def _config_search(ms, eps, radius, restarts, seed, max_combos):
    rng = np.random.default_rng(seed)
    r = len(ms)
    pts = []
    for m in ms:
        z = (m[0, 0] * 1j + m[0, 1]) / (m[1, 0] * 1j + m[1, 1])
        pts.append(z)
    pts = np.array(pts)
    cand = enumerate_lattice_array(radius, 2).astype(float)
    wz = (cand[:, 0, 0] * 1j + cand[:, 0, 1]) / (cand[:, 1, 0] * 1j + cand[:, 1, 1])
    tol = 2 * np.sqrt(2.0) * eps
    D = hyperbolic_distance(pts[:, None], pts[None, :])
    d0 = hyperbolic_distance(1j, wz)
    pools = [np.nonzero(np.abs(d0 - D[0, j]) < tol)[0] for j in range(1, r)]
    combos = []
    partial = False

    def extend(chosen, j):
        nonlocal partial
        if len(combos) >= max_combos:
            partial = True
            return
        if j == r:
            combos.append(tuple(chosen))
            return
        for c in pools[j - 1]:
            if all(abs(hyperbolic_distance(wz[c], wz[k]) - D[jj + 1, j]) < tol for jj, k in enumerate(chosen)):
                extend(chosen + [c], j + 1)

    extend([], 1)
    best = (np.inf, None, None)
    for combo in combos:
        gammas = [np.eye(2)] + [cand[c] for c in combo]

        def obj(p):
            return _max_dist(ms, _g_from_params(p), gammas)

        z1 = pts[0]
        start = np.array([z1.real, np.log(z1.imag), 0.0])
        for k in range(restarts):
            x0 = start if k == 0 else start + rng.normal(scale=[0.1, 0.1, np.pi], size=3)
            sol = optimize.minimize(obj, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            if sol.fun < best[0]:
                best = (float(sol.fun), _g_from_params(sol.x), gammas)
            if best[0] < eps:
                break
        if best[0] < eps:
            break
    md, g, gammas = best
    return ConfigResult(bool(md < eps), tuple(gammas) if gammas else (), g, md, "search", partial)
