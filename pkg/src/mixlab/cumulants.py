"""Set partitions, joint cumulants and the scale bookkeeping behind them.

Indices are 0-based: a partition of r items partitions {0, ..., r-1}.
Moment functionals map frozensets of indices to reals with the empty set
mapped to 1.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import factorial
import json

import numpy as np

from .errors import InvalidInputError, ResourceError
from .group_core import GroupTuple, as_matrix, pairwise_distances

MAX_R = 10


# ---------------------------------------------------------------- partitions


@dataclass(frozen=True)
class Partition:
    """Blocks as sorted tuples, ordered by least element."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        if any(len(b) == 0 for b in blocks):
            raise InvalidInputError("blocks must be nonempty")
        flat = [i for b in blocks for i in b]
        if len(flat) != len(set(flat)):
            raise InvalidInputError("blocks must be disjoint")
        object.__setattr__(self, "blocks", blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def support(self):
        return frozenset(i for b in self.blocks for i in b)

    def covers(self, r):
        return self.support == frozenset(range(r))

    @classmethod
    def singletons(cls, r):
        return cls(tuple((i,) for i in range(r)))

    @classmethod
    def one_block(cls, r):
        return cls((tuple(range(r)),))

    def is_coarser_than(self, other):
        """True if every block of ``other`` sits inside a block of self."""
        return all(any(set(b) <= set(c) for c in self.blocks) for b in other.blocks)

    def to_json(self):
        return [list(b) for b in self.blocks]


def _rgs(r):
    # restricted growth strings a_0 = 0, a_k <= 1 + max(a_0..a_{k-1})
    a = [0] * r
    m = [0] * r  # prefix maxima
    while True:
        yield tuple(a)
        k = r - 1
        while k > 0 and a[k] == m[k - 1] + 1:
            k -= 1
        if k == 0:
            return
        a[k] += 1
        m[k] = max(m[k - 1], a[k])
        for j in range(k + 1, r):
            a[j] = 0
            m[j] = m[k]


@lru_cache(maxsize=None)
def _partitions_cached(r):
    out = []
    for s in _rgs(r):
        blocks = [[] for _ in range(max(s) + 1)]
        for i, b in enumerate(s):
            blocks[b].append(i)
        out.append(Partition(tuple(tuple(b) for b in blocks)))
    return tuple(out)


def enumerate_partitions(r):
    """All set partitions of {0..r-1} (Bell(r) of them), 1 <= r <= 10."""
    if r < 1:
        raise InvalidInputError("r >= 1 required")
    if r > MAX_R:
        raise ResourceError(f"partition enumeration is capped at r = {MAX_R}")
    return list(_partitions_cached(r))


def partitions_of(items):
    """Set partitions of an arbitrary index collection."""
    items = tuple(sorted(items))
    if not items:
        return [Partition(())]
    return [Partition(tuple(tuple(items[i] for i in b) for b in p.blocks)) for p in enumerate_partitions(len(items))]


def _mobius(k):
    return (-1) ** (k - 1) * factorial(k - 1)


# ---------------------------------------------------------------- moments and cumulants


class MomentFunctional(dict):
    """Map from frozenset(I) to the moment mu(phi_I), with {} -> 1."""

    def __init__(self, r, values):
        super().__init__()
        self.r = int(r)
        for k, v in dict(values).items():
            self[frozenset(k)] = float(v)
        self[frozenset()] = 1.0

    @classmethod
    def from_function(cls, r, f):
        vals = {frozenset(I): f(frozenset(I)) for k in range(1, r + 1) for I in combinations(range(r), k)}
        return cls(r, vals)

    def check_complete(self):
        for k in range(1, self.r + 1):
            for I in combinations(range(self.r), k):
                if frozenset(I) not in self:
                    raise InvalidInputError(f"moment for subset {set(I)} is missing")

    def to_json(self):
        items = sorted((sorted(k), v) for k, v in self.items())
        return [[k, v] for k, v in items]


def _moment(m, I):
    key = frozenset(I)
    try:
        return m[key]
    except KeyError:
        raise InvalidInputError(f"moment for subset {set(key)} is missing") from None


def cumulant_from_moments(m, r, indices=None):
    """cum = sum_P (-1)^{|P|-1} (|P|-1)! prod_{I in P} m(I).

    ``indices`` restricts to a sub-collection (default: all r indices).
    """
    idx = range(r) if indices is None else indices
    total = 0.0
    for P in partitions_of(idx):
        prod = 1.0
        for B in P:
            prod *= _moment(m, B)
        total += _mobius(len(P)) * prod
    return total


def all_cumulants(m, r):
    """Joint cumulant of every nonempty index subset."""
    return {
        frozenset(I): cumulant_from_moments(m, r, I) for k in range(1, r + 1) for I in combinations(range(r), k)
    }


def moments_from_cumulants(c, r):
    """m(I) = sum over partitions P of I of prod_{B in P} c(B)."""
    vals = {}
    for k in range(1, r + 1):
        for I in combinations(range(r), k):
            total = 0.0
            for P in partitions_of(I):
                prod = 1.0
                for B in P:
                    prod *= c[frozenset(B)]
                total += prod
            vals[frozenset(I)] = total
    return MomentFunctional(r, vals)


def product_functional(Q, r, rng):
    """Random moments that factor across Q: m(I) = prod_{J in Q} m_J(I & J)."""
    parts = {}
    for J in Q:
        for k in range(1, len(J) + 1):
            for I in combinations(J, k):
                parts[frozenset(I)] = float(rng.normal())
    parts[frozenset()] = 1.0
    blocks = [frozenset(J) for J in Q]
    return MomentFunctional.from_function(r, lambda I: float(np.prod([parts[I & J] for J in blocks])))


def conditional_cumulant(m, Q, r):
    """sum_P (-1)^{|P|-1}(|P|-1)! prod_{I in P} prod_{J in Q} m(I & J)."""
    if not Q.covers(r):
        raise InvalidInputError("Q must partition {0..r-1}")
    blocks = [frozenset(J) for J in Q]
    total = 0.0
    for P in enumerate_partitions(r):
        prod = 1.0
        for I in P:
            I = frozenset(I)
            for J in blocks:
                prod *= _moment(m, I & J)
        total += _mobius(len(P)) * prod
    return total


def empirical_cumulants(x, orders=(2, 3, 4, 5)):
    """Cumulants of a 1-D sample from its central moments.

    Uses the partition formula with m_1 = 0, so only partitions without
    singleton blocks contribute.
    """
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    top = max(orders)
    cm = {k: float(np.mean(xc ** k)) for k in range(2, top + 1)}
    cm[1] = 0.0
    out = {}
    for r in orders:
        total = 0.0
        for P in enumerate_partitions(r):
            if any(len(B) == 1 for B in P):
                continue
            prod = 1.0
            for B in P:
                prod *= cm[len(B)]
            total += _mobius(len(P)) * prod
        out[r] = total
    return out


# ---------------------------------------------------------------- clustering of tuples


def distance_matrix(h):
    """Pairwise distances for a tuple of group elements or of real times.

    A 1-D array of reals is read as points of the geodesic subgroup with
    the unit-speed metric |s - t|.
    """
    if isinstance(h, GroupTuple):
        return pairwise_distances([g.entries for g in h])
    arr = np.asarray([as_matrix(g) for g in h], dtype=float)
    if arr.ndim == 1:
        return np.abs(arr[:, None] - arr[None, :])
    return pairwise_distances(list(arr))


def _diam(dist, I):
    I = list(I)
    if len(I) < 2:
        return 0.0
    return float(dist[np.ix_(I, I)].max())


def _gap(dist, I, J):
    return float(dist[np.ix_(list(I), list(J))].min())


@dataclass(frozen=True)
class Classification:
    dQ_max: float
    dQ_min: float
    member: bool


def classify_dist(dist, Q, alpha, beta):
    dmax = max(_diam(dist, I) for I in Q)
    gaps = [_gap(dist, I, J) for I, J in combinations(Q.blocks, 2)]
    dmin = min(gaps) if gaps else float("inf")
    return Classification(dmax, dmin, bool(dmax <= alpha and dmin > beta))


def classify_tuple(h, Q, alpha, beta):
    """d^Q (largest block diameter), d_Q (smallest gap) and membership in Delta_Q(alpha, beta).

    With a single block d_Q is +inf, so membership reduces to d^Q <= alpha.
    """
    dist = distance_matrix(h)
    if not Q.covers(len(dist)):
        raise InvalidInputError("Q must partition the tuple indices")
    return classify_dist(dist, Q, alpha, beta)


def coarsen_dist(dist, Q, alpha, beta):
    c = classify_dist(dist, Q, alpha, beta)
    if len(Q) < 2 or not alpha <= beta or c.dQ_max > alpha or c.dQ_min > beta:
        raise InvalidInputError("coarsening needs |Q| >= 2, d^Q <= alpha <= beta and d_Q <= beta")
    clusters = [set(b) for b in Q.blocks]
    pairs = sorted(
        (_gap(dist, I, J), a, b) for (a, I), (b, J) in combinations(enumerate(Q.blocks), 2) if _gap(dist, I, J) <= beta
    )
    owner = list(range(len(clusters)))

    def find(k):
        while owner[k] != k:
            k = owner[k]
        return k

    for _, a, b in pairs:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        merged = clusters[ra] | clusters[rb]
        # the closest pair always merges (diameter <= 2 alpha + beta); later
        # merges are kept only while the diameter bound 3 beta survives
        if _diam(dist, merged) <= 3 * beta:
            clusters[ra] = merged
            clusters[rb] = set()
            owner[rb] = ra
    out = Partition(tuple(tuple(c) for c in clusters if c))
    assert len(out) < len(Q)
    return out


def coarsen(h, Q, alpha, beta):
    """A strictly coarser partition whose blocks have diameter <= 3 beta.

    Blocks within distance beta of one another are merged, closest pairs
    first, skipping any merge that would push a diameter beyond 3 beta.
    """
    return coarsen_dist(distance_matrix(h), Q, alpha, beta)


@dataclass(frozen=True)
class CoverLabel:
    """Either the near-diagonal set (``diagonal``) or the cell Delta_Q(alpha, beta)."""

    diagonal: bool
    Q: Partition
    j: int
    alpha: float
    beta: float

    def to_json(self):
        return {"diagonal": self.diagonal, "Q": self.Q.to_json(), "j": self.j, "alpha": self.alpha, "beta": self.beta}


def check_ladder(betas):
    b = [float(x) for x in betas]
    if len(b) < 2 or b[0] != 0.0 or not b[1] > 0:
        raise InvalidInputError("ladder must start 0 = beta_0 < beta_1")
    for j in range(1, len(b) - 1):
        if not (b[j] < 3 * b[j] <= b[j + 1]):
            raise InvalidInputError(f"ladder constraint 3 beta_{j} <= beta_{j + 1} fails")
    return b


def decompose_cover_dist(dist, betas):
    r = len(dist)
    b = check_ladder(betas)
    if len(b) != r + 1:
        raise InvalidInputError(f"need beta_0..beta_r ({r + 1} values), got {len(b)}")
    Q = Partition.singletons(r)
    for j in range(r):
        alpha = 3 * b[j]
        if len(Q) == 1:
            return CoverLabel(True, Q, j, b[r], b[r])
        c = classify_dist(dist, Q, alpha, b[j + 1])
        if c.dQ_min > b[j + 1]:
            return CoverLabel(False, Q, j, alpha, b[j + 1])
        Q = coarsen_dist(dist, Q, alpha, b[j + 1])
    return CoverLabel(True, Q, r, b[r], b[r])


def decompose_cover(h, betas):
    """Label h with a cell of the cover by Delta(beta_r) and Delta_Q(3 beta_j, beta_{j+1}).

    Starts from the all-singletons partition and coarsens until either the
    blocks are separated by more than beta_{j+1} or a single block remains.
    """
    return decompose_cover_dist(distance_matrix(h), betas)


# ---------------------------------------------------------------- scales and exponents


@dataclass(frozen=True)
class Ladder:
    betas: tuple
    c_r: float

    def to_json(self):
        return {"betas": list(self.betas), "c_r": self.c_r}


def beta_ladder(theta, delta_r, sigma_r, r):
    """beta_0 = 0, beta_{j+1} = max(3 beta_j, (theta + 3 sigma_r beta_j) / delta_r)."""
    if min(theta, delta_r, sigma_r) <= 0:
        raise InvalidInputError("parameters must be positive")
    b = [0.0]
    for _ in range(r):
        b.append(max(3 * b[-1], (theta + 3 * sigma_r * b[-1]) / delta_r))
    check_ladder(b)
    return Ladder(tuple(b), b[-1] / theta)


def _check_weights(w, q):
    w = np.asarray(w, dtype=float)
    if len(w) < 2 or abs(w[0] - 1.0) > 1e-12 or np.any(np.diff(w) > 1e-12) or w[-1] > 1.0 / q + 1e-12:
        raise InvalidInputError("weights must satisfy 1 = w_1 >= ... >= w_r, w_r <= 1/q")
    return w


def pigeonhole_scales(weights, q, theta):
    """Smallest i, then smallest p (1-based), with w_{p+1} <= q^-(i+1)theta < q^-i theta <= w_p."""
    if not q > 1:
        raise InvalidInputError("q > 1 required")
    w = _check_weights(weights, q)
    r = len(w)
    if not 0 < theta < 1.0 / (r - 1):
        raise InvalidInputError("need 0 < theta < 1/(r-1)")
    for i in range(r - 1):
        lo, hi = q ** (-(i + 1) * theta), q ** (-i * theta)
        for p in range(1, r):
            if w[p] <= lo and hi <= w[p - 1]:
                return p, i
    raise AssertionError("pigeonhole failed despite valid weights")


def scales_ok(weights, q, theta, p, i):
    return weights[p] <= q ** (-(i + 1) * theta) < q ** (-i * theta) <= weights[p - 1]


@dataclass(frozen=True)
class ExponentParams:
    tau: float
    a: float
    b: float
    r: int

    def __post_init__(self):
        if min(self.tau, self.a, self.b) <= 0 or self.r < 2:
            raise InvalidInputError("tau, a, b > 0 and r >= 2 required")


@dataclass(frozen=True)
class ExponentResult:
    tau_prime: float
    theta_star: float
    attained: bool
    T_rule: str

    def to_json(self):
        return {"tau_prime": self.tau_prime, "theta_star": self.theta_star, "attained": self.attained, "T_rule": self.T_rule}


def term_exponents(theta, i, p):
    """Decay exponents (in powers of q^-1) of the three competing terms at T = q^{(i+1/2)theta}."""
    return (theta / 2, p.tau / 2 - p.a / 2 * (i + 0.5) * theta, p.b * theta / 4)


def worst_exponent(theta, p):
    """min over i in 0..r-2 of the smallest term exponent."""
    return min(min(term_exponents(theta, i, p)) for i in range(p.r - 1))


def derive_exponent(p):
    """Best uniform exponent tau' = sup_theta min_i min(terms), theta in (0, 1/(r-1)).

    Every term is affine in theta and the worst index is i = r-2, so the
    sup is where c theta (c = min(1/2, b/4)) meets tau/2 - L theta
    (L = (a/2)(r - 3/2)), or the open endpoint 1/(r-1) if that comes first.
    """
    c = min(0.5, p.b / 4)
    L = p.a / 2 * (p.r - 1.5)
    cross = (p.tau / 2) / (c + L)
    edge = 1.0 / (p.r - 1)
    if cross < edge:
        theta, attained = cross, True
    else:
        theta, attained = edge, False
    tau_p = min(c * theta, p.tau / 2 - L * theta)
    return ExponentResult(float(tau_p), float(theta), attained, f"T = q^((i + 1/2) * {theta:.10g})")


def exponent_chain(delta, a, b, r_max):
    """tau_2 = delta and tau_r = derive_exponent(tau_{r-1}, a, b, r)."""
    if delta <= 0:
        raise InvalidInputError("delta > 0 required")
    out = [float(delta)]
    for r in range(3, r_max + 1):
        out.append(derive_exponent(ExponentParams(out[-1], a, b, r)).tau_prime)
    return out


def dumps(obj):
    return json.dumps(obj.to_json(), sort_keys=True)
