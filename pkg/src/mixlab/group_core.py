"""Matrix-group arithmetic for SL(d, R).

Decompositions (Cartan KA+K and Iwasawa UAK), the adjoint operator norm,
a left-invariant distance, Haar densities on SL(2, R), Haar sampling of
Frobenius balls and the pairwise statistics of tuples of group elements.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, InvalidInputError

DET_RTOL = 1e-9
RECON_TOL = 1e-8
GOLDEN_TOL = 1e-10


@dataclass(frozen=True)
class GroupElement:
    """A real d x d matrix of determinant one."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InvalidInputError(f"expected a square matrix of size >= 2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix entries must be finite")
        det = np.linalg.det(m)
        if abs(det - 1.0) > DET_RTOL * max(1.0, np.abs(m).max() ** m.shape[0]):
            raise InvalidInputError(f"determinant {det!r} is not 1")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self):
        return self.entries.shape[0]

    def inverse(self):
        return GroupElement(np.linalg.inv(self.entries))

    def __matmul__(self, other):
        return GroupElement(self.entries @ as_matrix(other))

    @classmethod
    def identity(cls, d=2):
        return cls(np.eye(d))

    @classmethod
    def normalized(cls, m):
        """Rescale an invertible matrix with positive determinant to det 1."""
        m = np.asarray(m, dtype=float)
        det = np.linalg.det(m)
        if not det > 0:
            raise InvalidInputError("need a positive determinant to normalize")
        return cls(m / det ** (1.0 / m.shape[0]))


def as_matrix(g):
    """Return the float matrix behind a GroupElement or array-like."""
    if isinstance(g, GroupElement):
        return g.entries
    m = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix entries must be finite")
    return m


def _as_diagonal(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        a = np.diag(a)
    return a


def k_rot(theta):
    """The rotation k(theta) of SO(2)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def a_diag(t):
    """The diagonal element a(t) = diag(t, 1/t)."""
    return np.diag([t, 1.0 / t])


def u_shear(x):
    return np.array([[1.0, x], [0.0, 1.0]])


def random_sl(d, rng, n=None, scale=1.0):
    """Random det-1 matrices: Gaussian entries, sign-fixed and renormalized."""
    shape = (d, d) if n is None else (n, d, d)
    m = rng.normal(scale=scale, size=shape)
    det = np.linalg.det(m)
    # flip one row where the determinant is negative
    flip = det < 0
    if n is None:
        if flip:
            m[0] = -m[0]
            det = -det
        return m / det ** (1.0 / d)
    m[flip, 0, :] *= -1
    det = np.abs(det)
    return m / det[:, None, None] ** (1.0 / d)


# ---------------------------------------------------------------- decompositions


@dataclass(frozen=True)
class CartanCoords:
    k1: np.ndarray
    a: np.ndarray
    k2: np.ndarray

    @property
    def singular_values(self):
        return np.diag(self.a).copy()

    def reconstruct(self):
        return self.k1 @ self.a @ self.k2


@dataclass(frozen=True)
class IwasawaCoords:
    u: np.ndarray
    a: np.ndarray
    k: np.ndarray

    def reconstruct(self):
        return self.u @ self.a @ self.k


def cartan_decompose(g):
    """Factor ``g = k1 @ a @ k2`` with k1, k2 in SO(d) and a in A+.

    The diagonal of ``a`` holds the singular values of ``g`` in
    nonincreasing order. Ties are returned as LAPACK orders them.
    """
    m = as_matrix(g)
    u, s, vt = np.linalg.svd(m)
    if np.linalg.det(u) < 0:
        u[:, -1] *= -1
        vt[-1, :] *= -1
    return CartanCoords(k1=u, a=np.diag(s), k2=vt)


def iwasawa_decompose(g):
    """Factor ``g = u @ a @ k``: u unit upper triangular, a > 0 diagonal, k in SO(d)."""
    m = as_matrix(g)
    r, q = linalg.rq(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = r * signs[None, :]
    q = signs[:, None] * q
    diag = np.diag(r).copy()
    u = r / diag[None, :]
    return IwasawaCoords(u=u, a=np.diag(diag), k=q)


def simple_roots(a):
    """Return (a_1/a_2, ..., a_{d-1}/a_d) for a positive diagonal element."""
    a = _as_diagonal(a)
    if np.any(a <= 0):
        raise InvalidInputError("diagonal entries must be positive")
    return list(a[:-1] / a[1:])


def root_contraction_check(a, i):
    """True iff a_l / a_k >= a_i / a_{i+1} for every l <= i < k (1-indexed i)."""
    a = _as_diagonal(a)
    d = len(a)
    if not 1 <= i <= d - 1:
        raise InvalidInputError(f"root index {i} outside 1..{d - 1}")
    if np.any(a <= 0):
        raise InvalidInputError("diagonal entries must be positive")
    if np.any(np.diff(a) > 0):
        raise InvalidInputError("diagonal must be nonincreasing (an element of A+)")
    alpha = a[i - 1] / a[i]
    ratios = a[:i, None] / a[None, i:]
    return bool(np.all(ratios >= alpha * (1 - 1e-12)))


# ---------------------------------------------------------------- Lie algebra


def lie_basis(d):
    """Frobenius-orthonormal basis of sl(d): diagonal part first, then E_ij.

    For d = 2 this is (diag(1,-1)/sqrt 2, E12, E21).
    """
    basis = []
    for k in range(1, d):
        h = np.zeros((d, d))
        h[np.arange(k), np.arange(k)] = 1.0
        h[k, k] = -k
        basis.append(h / np.sqrt(k * (k + 1)))
    for i in range(d):
        for j in range(d):
            if i != j:
                e = np.zeros((d, d))
                e[i, j] = 1.0
                basis.append(e)
    return np.array(basis)


def ad_matrix(g):
    """Matrix of Z -> g Z g^{-1} on sl(d) in the basis of :func:`lie_basis`."""
    m = as_matrix(g)
    basis = lie_basis(m.shape[0])
    conj = m @ basis @ np.linalg.inv(m)
    return np.einsum("kij,lij->kl", basis, conj)


def adjoint_norm(g):
    """Operator norm of Ad(g) on sl(d); always >= 1."""
    return float(np.linalg.norm(ad_matrix(g), 2))


def riemannian_distance(g, h):
    """Left-invariant distance: l2 norm of the log singular values of g^{-1} h.

    It vanishes on SO(d), so on G it is the pullback of the symmetric-space
    distance on G/K (for d = 2: hyperbolic distance / sqrt 2).
    """
    m = np.linalg.solve(as_matrix(g), as_matrix(h))
    s = np.linalg.svd(m, compute_uv=False)
    return float(np.linalg.norm(np.log(s)))


# log ||g||_F / d(g, e) lies in this bracket whenever d(g, e) >= 1 and d <= 3:
# max log sv / ||log sv|| is in [1/sqrt 6, sqrt(2/3)] and the Frobenius
# norm adds at most log(3)/2
NORM_METRIC_BRACKET = (0.4, 1.4)


def norm_metric_ratio(g):
    """log ||g||_F / d(g, e); None when g is within distance 1 of K."""
    m = as_matrix(g)
    d = riemannian_distance(np.eye(m.shape[0]), m)
    if d < 1:
        return None
    return float(np.log(np.linalg.norm(m)) / d)


def pairwise_distances(gs):
    """Symmetric matrix of riemannian_distance over a tuple."""
    ms = [as_matrix(g) for g in gs]
    r = len(ms)
    out = np.zeros((r, r))
    for i in range(r):
        for j in range(i + 1, r):
            out[i, j] = out[j, i] = riemannian_distance(ms[i], ms[j])
    return out


# ---------------------------------------------------------------- Haar on SL(2)


def haar_cartan_density_sl2(t):
    """Radial Haar density t^2 - t^-2 w.r.t. d theta1 (dt/t) d theta2."""
    if t < 1:
        raise DomainError("Cartan parameter must satisfy t >= 1")
    return t * t - 1.0 / (t * t)


def modular_function_sl2(t):
    """Modular function of the group UA at a(t): t^-2."""
    if t <= 0:
        raise DomainError("t must be positive")
    return 1.0 / (t * t)


def ball_radial_max(t):
    """Largest Cartan parameter s with s^2 + s^-2 = t^2 (Frobenius ball edge)."""
    c = t * t
    return np.sqrt((c + np.sqrt(c * c - 4.0)) / 2.0)


def sample_ball_batch(t, n, rng):
    """Haar-distributed samples from B_t = {||g||_F < t} in SL(2, R).

    The radial part is drawn by inverting the CDF of (s^2 - s^-2)/s on
    [1, s*], whose antiderivative is (s^2 + s^-2)/2; angles are uniform.
    """
    if not t > np.sqrt(2.0):
        raise DomainError("B_t is empty (null) for t <= sqrt(2)")
    u = rng.random(n)
    th1 = rng.uniform(0.0, 2 * np.pi, n)
    th2 = rng.uniform(0.0, 2 * np.pi, n)
    c = 2.0 + u * (t * t - 2.0)
    s = np.sqrt((c + np.sqrt(np.maximum(c * c - 4.0, 0.0))) / 2.0)
    k1 = _k_batch(th1)
    k2 = _k_batch(th2)
    a = np.zeros((n, 2, 2))
    a[:, 0, 0] = s
    a[:, 1, 1] = 1.0 / s
    return k1 @ a @ k2


def sample_ball(t, seed):
    """One Haar-distributed element of B_t, deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    return GroupElement(sample_ball_batch(t, 1, rng)[0])


def _k_batch(theta):
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


# ---------------------------------------------------------------- tuples


@dataclass(frozen=True)
class GroupTuple:
    elements: tuple

    def __post_init__(self):
        els = tuple(g if isinstance(g, GroupElement) else GroupElement(g) for g in self.elements)
        if len(els) < 2:
            raise InvalidInputError("a tuple needs r >= 2 elements")
        if len({g.dim for g in els}) != 1:
            raise InvalidInputError("all elements must share the same dimension")
        object.__setattr__(self, "elements", els)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


@dataclass(frozen=True)
class TupleStats:
    N: float
    D: float
    width: float
    weights: np.ndarray
    order: tuple
    Q: float
    anchor: int
    Z: np.ndarray


def _nilpotent(phi):
    # k(phi) E12 k(phi)^T: the unit nilpotents of sl(2) up to sign
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[-c * s, c * c], [-s * s, c * s]])


def max_nilpotent_direction(g, grid=64):
    """Unit nilpotent Z maximizing ||Ad(g) Z|| for g in SL(2, R).

    Coarse scan of the nilpotent circle followed by golden-section
    refinement of the best bracket; ties go to the smallest angle.
    """
    m = as_matrix(g)
    minv = np.linalg.inv(m)

    def f(phi):
        return np.linalg.norm(m @ _nilpotent(phi) @ minv)

    phis = np.arange(grid) * (np.pi / grid)
    vals = np.array([f(p) for p in phis])
    j = int(np.argmax(vals))
    step = np.pi / grid
    lo, hi = phis[j] - step, phis[j] + step
    invphi = (np.sqrt(5) - 1) / 2
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > GOLDEN_TOL:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
    phi = ((lo + hi) / 2) % np.pi
    return _nilpotent(phi), float(f(phi))


def _top_direction(g):
    # top right-singular vector of Ad(g), mapped back to a matrix
    ad = ad_matrix(g)
    _, s, vt = np.linalg.svd(ad)
    basis = lie_basis(as_matrix(g).shape[0])
    return np.einsum("k,kij->ij", vt[0], basis), float(s[0])


def tuple_stats(gs):
    """N, D, width and the ordered weights w_1 >= ... >= w_r of a tuple.

    The weights follow the construction used to pick averaging subgroups:
    take the pair (i1, s) realizing Q = max ||g_i^{-1} g_j|| together with a
    unit nilpotent Z attaining it, then w_j = ||Ad(g_j^{-1} g_s) Z|| / Q,
    sorted nonincreasing (``order`` records the relabeling).
    """
    if not isinstance(gs, GroupTuple):
        gs = GroupTuple(tuple(gs))
    ms = [g.entries for g in gs]
    r = len(ms)
    d = ms[0].shape[0]
    norms = np.zeros((r, r))
    for i in range(r):
        for j in range(r):
            if i != j:
                norms[i, j] = adjoint_norm(np.linalg.solve(ms[i], ms[j]))
    off = ~np.eye(r, dtype=bool)
    N = float(norms[off].min())
    Q = float(norms[off].max())
    i1, s = np.unravel_index(np.argmax(np.where(off, norms, -np.inf)), norms.shape)
    rel = np.linalg.solve(ms[i1], ms[s])
    if d == 2:
        Z, top = max_nilpotent_direction(rel)
    else:
        Z, top = _top_direction(rel)
    raw = np.array(
        [np.linalg.norm(np.linalg.solve(ms[j], ms[s]) @ Z @ np.linalg.solve(ms[s], ms[j])) for j in range(r)]
    )
    order = tuple(int(j) for j in np.argsort(-raw, kind="stable"))
    weights = raw[list(order)] / top
    dist = pairwise_distances(ms)
    D = float(dist[off].min())
    return TupleStats(N=N, D=D, width=D, weights=weights, order=order, Q=Q, anchor=int(s), Z=Z)
