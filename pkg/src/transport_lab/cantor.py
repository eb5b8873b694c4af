"""Middle-thirds Cantor set machinery: removed intervals, the Cantor
function, smooth bump profiles vanishing exactly on the set, the primitive
f(x) = integral_0^x g, and the perturbed maps built from scaled
Cantor-Lebesgue measures.

Two bump profiles are available for g on the removed intervals:

* ``ExactProfile``: the triple-exponential bump
  exp(-exp(exp(1/(r^2 - (x-y)^2)))) on a removed interval of center y and
  half width r, with the matching triple-exponential tails outside [0, 1].
  Its interior values underflow every float (the inner exponent is already
  >= 36), so the profile is only ever evaluated in log domain, saturating to
  -inf; downstream integrability checks consume log g and log|g'/g|
  analytically.

* ``DemoProfile(peak_decay)``: a numerically tame variant, a_k * the standard
  C-infinity bump with a_k = peak_decay**k on generation-k intervals, plus a
  single-layer tail a * exp(-1/x^2) outside [0, 1].  Same qualitative
  structure (smooth off the set, 0 exactly on it, values in [0, 1)), but f
  varies visibly at machine precision, so flows and non-uniqueness demos use
  it.

All maps are evaluated through the exact ternary-digit walk of the input
(int64 arithmetic on round(x * 2^53), so the walk is bit-stable and monotone),
and inverted by plain bisection: derivatives vanish on the Cantor set, which
makes Newton steps unsafe near the flat spots.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import erfc

LOG_MAX = math.log(np.finfo(float).max)
_SQRT_PI = math.sqrt(math.pi)

_DIGIT_SHIFT = 53
_DIGIT_ONE = np.int64(1) << _DIGIT_SHIFT


# ---------------------------------------------------------------------------
# removed intervals

@dataclass(frozen=True, slots=True)
class RemovedInterval:
    k: int
    j: int
    center: float
    half_width: float


def removed_intervals(k_max):
    """All removed middle-third intervals of generations 1..k_max, in
    increasing (k, j) order; generation k holds 2^(k-1) intervals of half
    width 1/(2·3^k)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    out = []
    for k in range(1, k_max + 1):
        r = 0.5 * 3.0 ** (-k)
        scale = 3.0 ** (-k)
        n = 1 << (k - 1)
        j_idx = np.arange(n, dtype=np.int64)
        # left endpoint of the kept interval containing gap j: binary digits
        # of j-1 read as ternary digits {0,2}
        prefix = np.zeros(n)
        for bit in range(k - 1):
            digit = (j_idx >> (k - 2 - bit)) & 1
            prefix += digit * 2.0 * 3.0 ** (-(bit + 1))
        centers = prefix + 1.5 * scale
        out.extend(
            RemovedInterval(k, j + 1, float(c), r) for j, c in enumerate(centers)
        )
    return out


def removed_intervals_exact(k_max):
    """Fraction-valued (k, j, center, half_width) rows, for exactness tests."""
    rows = []
    kept = [(Fraction(0), Fraction(1))]
    for k in range(1, k_max + 1):
        nxt = []
        for j, (a, b) in enumerate(kept, start=1):
            third = (b - a) / 3
            rows.append((k, j, (a + b) / 2, third / 2))
            nxt.extend([(a, a + third), (b - third, b)])
        kept = nxt
    return rows


# ---------------------------------------------------------------------------
# ternary digit walks

def cantor_function(x):
    """Devil's staircase value by the ternary-expansion algorithm.

    The binary value of x is expanded exactly (via Fraction) to 53 ternary
    digits; the expansion is truncated at the first digit 1, digits 2 map to
    binary 1.  Out-of-range inputs are clamped with a warning.
    """
    x = float(x)
    if x < 0.0 or x > 1.0:
        warnings.warn("cantor_function input clamped to [0, 1]", stacklevel=2)
        x = min(max(x, 0.0), 1.0)
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    frac = Fraction(x)
    acc = 0
    for i in range(1, 54):
        frac *= 3
        d = int(frac)
        frac -= d
        if d == 1:
            acc = (acc << 1) | 1
            return acc / float(1 << i)
        acc = (acc << 1) | (d >> 1)
    return acc / float(_DIGIT_ONE)


def _digit_state(x):
    """int64 fixed-point state for the vectorized digit walk on [0, 1]."""
    x = np.asarray(x, dtype=float)
    num = np.rint(np.clip(x, 0.0, 1.0) * float(_DIGIT_ONE)).astype(np.int64)
    return np.minimum(num, _DIGIT_ONE - 1)


def cantor_cumulative(x, depth=48):
    """Vectorized Cantor function, clamped to 0 below 0 and 1 above 1.

    Operates on the ternary digits of round(x * 2^53) / 2^53, so it is a
    monotone, bit-stable staircase; agrees with `cantor_function` up to the
    2^-53 input rounding.  Points that land in a removed interval leave the
    walk early (compaction keeps the per-level work proportional to the
    surviving dust fraction).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    shape = np.atleast_1d(x).shape
    flat = np.atleast_1d(x).ravel()
    val = np.zeros_like(flat, dtype=float)
    idx = np.flatnonzero((flat > 0.0) & (flat < 1.0))
    num = _digit_state(flat[idx])
    acc = np.zeros(idx.shape, dtype=float)
    for i in range(1, depth + 1):
        if idx.size == 0:
            break
        num = num * 3
        d = (num >> _DIGIT_SHIFT).astype(np.int64)
        num = num - (d << _DIGIT_SHIFT)
        hit = d == 1
        acc[hit | (d == 2)] += 2.0 ** (-i)
        if np.any(hit):
            val[idx[hit]] = acc[hit]
            keep = ~hit
            idx, num, acc = idx[keep], num[keep], acc[keep]
    val[idx] = acc
    val[flat >= 1.0] = 1.0
    val = val.reshape(shape)
    return float(val[0]) if scalar else val


def locate_removed(x, depth=48):
    """Containing removed interval of each point of [0, 1].

    Returns (k, y, r, u): generation (0 where the point is in the Cantor set,
    at depth resolution, or outside (0,1)), center, half width, and the
    relative offset u = (x - y)/r in (-1, 1).  u is read off the integer
    remainder of the digit walk, so it stays exact at every depth (a float
    subtraction x - y loses all precision once r approaches the ulp of x).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    shape = np.atleast_1d(x).shape
    flat = np.atleast_1d(x).ravel()
    k = np.zeros(flat.shape, dtype=np.int64)
    y = np.zeros_like(flat, dtype=float)
    r = np.zeros_like(flat, dtype=float)
    u = np.zeros_like(flat, dtype=float)
    idx = np.flatnonzero((flat > 0.0) & (flat < 1.0))
    num = _digit_state(flat[idx])
    left = np.zeros(idx.shape, dtype=float)
    for i in range(1, depth + 1):
        if idx.size == 0:
            break
        num = num * 3
        d = (num >> _DIGIT_SHIFT).astype(np.int64)
        num = num - (d << _DIGIT_SHIFT)
        scale = 3.0 ** (-i)
        hit = d == 1
        if np.any(hit):
            tgt = idx[hit]
            k[tgt] = i
            y[tgt] = left[hit] + 1.5 * scale
            r[tgt] = 0.5 * scale
            # the remainder is the exact position inside the gap: u = 2 rem - 1
            u[tgt] = (2 * num[hit] - _DIGIT_ONE) / float(_DIGIT_ONE)
            keep = ~hit
            idx, num, left = idx[keep], num[keep], left[keep]
            d = d[keep]
        left[d == 2] += 2.0 * scale
    k = k.reshape(shape)
    y = y.reshape(shape)
    r = r.reshape(shape)
    u = u.reshape(shape)
    if scalar:
        return int(k[0]), float(y[0]), float(r[0]), float(u[0])
    return k, y, r, u


# ---------------------------------------------------------------------------
# bump profiles

def bump_shape(u):
    """exp(1 - 1/(1-u^2)) on (-1, 1), zero outside; peak 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


_BUMP_PANELS = 64
_BUMP_GAUSS = 16
_bump_nodes, _bump_wts = np.polynomial.legendre.leggauss(_BUMP_GAUSS)
_bump_edges = np.linspace(-1.0, 1.0, _BUMP_PANELS + 1)
_bump_cumulative = None
BUMP_MASS = None


def _bump_panel_partial(lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[..., None] + half[..., None] * _bump_nodes
    return half * np.sum(_bump_wts * bump_shape(pts), axis=-1)


def _init_bump_tables():
    global _bump_cumulative, BUMP_MASS
    partial = _bump_panel_partial(_bump_edges[:-1], _bump_edges[1:])
    _bump_cumulative = np.concatenate([[0.0], np.cumsum(partial)])
    BUMP_MASS = float(_bump_cumulative[-1])


_init_bump_tables()


def bump_cdf(u):
    """Normalized cumulative of `bump_shape`: 0 at -1, 1 at +1."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    idx = np.minimum(
        ((u + 1.0) / 2.0 * _BUMP_PANELS).astype(np.int64), _BUMP_PANELS - 1
    )
    lo = _bump_edges[idx]
    return (_bump_cumulative[idx] + _bump_panel_partial(lo, u)) / BUMP_MASS


def _gauss_panel_integral(fn, edges, n=32):
    nodes, wts = np.polynomial.legendre.leggauss(n)
    lo = np.asarray(edges[:-1])
    hi = np.asarray(edges[1:])
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * nodes
    return float(np.sum(half[:, None] * wts * fn(pts)))


class DemoProfile:
    """Numerically tame bump family: a^k-scaled standard bumps on
    generation-k intervals, tail a * exp(-1/x^2) outside [0, 1]."""

    name = "demo"

    def __init__(self, peak_decay=0.5):
        if not 0.0 < peak_decay < 1.0:
            raise ValueError("peak_decay must be in (0, 1)")
        self.peak_decay = float(peak_decay)

    # per-interval mass of one generation-k bump times count bookkeeping:
    # m_k = a^k * r_k * BUMP_MASS with r_k = 1/(2*3^k)
    def interval_mass(self, k):
        a = self.peak_decay
        return BUMP_MASS * 0.5 * (a / 3.0) ** k

    def subtree_mass(self, k):
        # total bump mass inside one kept interval of level k
        a = self.peak_decay
        q = 2.0 * a / 3.0
        return BUMP_MASS * 0.25 * (a / 3.0) ** k * q / (1.0 - q)

    def log_bump(self, u, r, k):
        with np.errstate(divide="ignore"):
            return k * math.log(self.peak_decay) + 1.0 - 1.0 / (1.0 - u * u)

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        v = np.where(x < 0.0, -x, x - 1.0)
        with np.errstate(divide="ignore"):
            return math.log(self.peak_decay) - 1.0 / (v * v)

    def ratio_bump(self, u, r, k):
        # g'/g = -2u / (r (1-u^2)^2)
        sign = -np.sign(u)
        with np.errstate(divide="ignore"):
            logmag = np.log(2.0 * np.abs(u) / r) - 2.0 * np.log1p(-u * u)
        return sign, logmag

    def ratio_tail(self, x):
        # g'/g = 2/x^3 (left), 2/(x-1)^3 (right)
        x = np.asarray(x, dtype=float)
        v = np.where(x < 0.0, -x, x - 1.0)
        sign = np.where(x < 0.0, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            logmag = np.log(2.0) - 3.0 * np.log(v)
        return sign, logmag

    def tail_integral(self, v):
        # integral_0^v a e^{-1/s^2} ds = a (v e^{-1/v^2} - sqrt(pi) erfc(1/v))
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            out = v * np.exp(-1.0 / (v * v)) - _SQRT_PI * erfc(1.0 / np.where(v > 0, v, np.inf))
        return self.peak_decay * np.where(v > 0.0, out, 0.0)


class ExactProfile:
    """Triple-exponential bumps; log-domain only, saturating to -inf."""

    name = "exact"

    def __init__(self, quad_depth=24):
        self.quad_depth = int(quad_depth)

    def interval_mass(self, k):
        # true masses are below exp(-exp(e^36)); they underflow to exactly 0
        return 0.0

    def subtree_mass(self, k):
        return 0.0

    def log_bump(self, u, r, k):
        with np.errstate(divide="ignore", over="ignore"):
            w = 1.0 / (r * r * (1.0 - u * u))
            ew = np.exp(w)
            return np.where(ew > LOG_MAX, -np.inf, -np.exp(np.minimum(ew, LOG_MAX)))

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        v = np.where(x < 0.0, -x, x - 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            ew = np.exp(1.0 / (v * v))
            return np.where(ew > LOG_MAX, -np.inf, -np.exp(np.minimum(ew, LOG_MAX)))

    def ratio_bump(self, u, r, k):
        # |g'/g| = exp(exp(w)) exp(w) 2|x-y| w^2 with w = 1/(r^2-(x-y)^2)
        sign = -np.sign(u)
        with np.errstate(divide="ignore", over="ignore"):
            w = 1.0 / (r * r * (1.0 - u * u))
            logmag = np.exp(w) + w + np.log(2.0 * np.abs(u) * r * w * w)
        return sign, logmag

    def ratio_tail(self, x):
        x = np.asarray(x, dtype=float)
        v = np.where(x < 0.0, -x, x - 1.0)
        sign = np.where(x < 0.0, -1.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            w = 1.0 / (v * v)
            logmag = np.exp(w) + w + np.log(2.0) - 3.0 * np.log(v)
        return sign, logmag

    def tail_integral(self, v):
        # integral_0^v exp(-exp(exp(1/s^2))) ds; integrand underflows below
        # s ~ 0.73, panel quadrature beyond
        v = np.asarray(v, dtype=float)

        def one(vv):
            if vv <= 0.7:
                return 0.0
            edges = [0.7]
            step = 0.1
            while edges[-1] < vv:
                edges.append(min(edges[-1] + step, vv))
                step = min(step * 1.5, 4.0)
            fn = lambda s: np.exp(self.log_tail(-s))
            return _gauss_panel_integral(fn, np.asarray(edges), n=max(8, self.quad_depth))

        if v.ndim == 0:
            return one(float(v))
        return np.asarray([one(float(t)) for t in v.ravel()]).reshape(v.shape)


def g_log(x, profile, boundary=True):
    """log g(x): -inf on the Cantor set and wherever g underflows.

    On a removed interval the containing (k, y, r) is located by the digit
    walk and the profile's bump formula is applied; outside [0, 1] the tail
    term is used when `boundary` is set, otherwise g is 0 there.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.full(x.shape, -np.inf)
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        k, y, r, u = locate_removed(x[inside])
        gap = k > 0
        if np.any(gap):
            vals = profile.log_bump(u[gap], r[gap], k[gap])
            tmp = np.full(int(np.count_nonzero(inside)), -np.inf)
            tmp[gap] = vals
            out[inside] = tmp
    if boundary:
        outside = (x < 0.0) | (x > 1.0)
        if np.any(outside):
            out[outside] = profile.log_tail(x[outside])
    return float(out[0]) if scalar else out


def g_ratio_log(x, profile, boundary=True):
    """Signed log of g'(x)/g(x): (sign, log magnitude); sign 0 with -inf
    magnitude on the Cantor set, at bump centers, and where g = 0."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    sign = np.zeros(x.shape)
    logmag = np.full(x.shape, -np.inf)
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        k, y, r, u = locate_removed(x[inside])
        gap = k > 0
        if np.any(gap):
            s, lm = profile.ratio_bump(u[gap], r[gap], k[gap])
            tmp_s = np.zeros(int(np.count_nonzero(inside)))
            tmp_l = np.full(int(np.count_nonzero(inside)), -np.inf)
            tmp_s[gap] = s
            tmp_l[gap] = lm
            sign[inside] = tmp_s
            logmag[inside] = tmp_l
    if boundary:
        outside = (x < 0.0) | (x > 1.0)
        if np.any(outside):
            s, lm = profile.ratio_tail(x[outside])
            sign[outside] = s
            logmag[outside] = lm
    sign[np.isneginf(logmag)] = 0.0
    if scalar:
        return float(sign[0]), float(logmag[0])
    return sign, logmag


def g_prime(x, profile, boundary=True):
    """g'(x) directly (Demo profile use; Exact underflows to 0)."""
    sign, logmag = g_ratio_log(x, profile, boundary)
    lg = g_log(x, profile, boundary)
    with np.errstate(invalid="ignore"):
        out = sign * np.exp(np.where(np.isneginf(logmag), -np.inf, lg + logmag))
    return out


# ---------------------------------------------------------------------------
# monotone maps

class MonotoneMap:
    """Strictly increasing continuous scalar map with a bisection inverse.

    `forward` must accept arrays.  The inverse is plain bisection (no Newton:
    the derivative vanishes on the Cantor set), either on the full domain or
    on a per-point bracket.
    """

    def __init__(
        self,
        forward,
        domain,
        derivative=None,
        inverse_fn=None,
        bracket=None,
        inverse_tol=1e-13,
        bisect_iters=60,
    ):
        self._forward = forward
        self.domain = (float(domain[0]), float(domain[1]))
        self._derivative = derivative
        self._inverse_fn = inverse_fn
        self._bracket = bracket
        self.inverse_tol = float(inverse_tol)
        self.bisect_iters = int(bisect_iters)
        self.range = (
            float(np.asarray(forward(np.asarray(self.domain[0])))),
            float(np.asarray(forward(np.asarray(self.domain[1])))),
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._forward(x)
        return float(out) if np.ndim(out) == 0 else out

    forward = __call__

    def derivative(self, x):
        if self._derivative is None:
            raise NotImplementedError("map has no derivative evaluator")
        x = np.asarray(x, dtype=float)
        out = self._derivative(x)
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        pad = self.inverse_tol * (1.0 + abs(self.range[0]) + abs(self.range[1]))
        if np.any(y < self.range[0] - pad) or np.any(y > self.range[1] + pad):
            raise ValueError("inverse query outside the range of the map")
        if self._inverse_fn is not None:
            out = self._inverse_fn(y)
            return float(out[0]) if scalar else out
        if self._bracket is not None:
            lo, hi = self._bracket(y)
            lo = np.broadcast_to(np.asarray(lo, float), y.shape).copy()
            hi = np.broadcast_to(np.asarray(hi, float), y.shape).copy()
        else:
            lo = np.full(y.shape, self.domain[0])
            hi = np.full(y.shape, self.domain[1])
        mid = 0.5 * (lo + hi)
        for _ in range(self.bisect_iters):
            mid = 0.5 * (lo + hi)
            below = self._forward(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        mid = 0.5 * (lo + hi)
        return float(mid[0]) if scalar else mid


def _demo_f01(x, profile):
    """f(x) = integral_0^x g for x in [0, 1], Demo profile, by the digit walk.

    Per level the walk adds the masses of the removed intervals and kept
    subtrees strictly left of x (geometric closed forms in the generation),
    and ends with the partial bump CDF inside the containing gap.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shape = x.shape
    flat = x.ravel()
    total = np.zeros_like(flat)
    idx = np.flatnonzero((flat > 0.0) & (flat < 1.0))
    num = _digit_state(flat[idx])
    nu = np.zeros(idx.shape, dtype=np.int64)  # kept intervals strictly left
    acc = np.zeros(idx.shape, dtype=float)
    depth = 40
    for i in range(1, depth + 1):
        if idx.size == 0:
            break
        num = num * 3
        d = (num >> _DIGIT_SHIFT).astype(np.int64)
        num = num - (d << _DIGIT_SHIFT)
        m_i = profile.interval_mass(i)
        s_i = profile.subtree_mass(i)
        hit = d == 1
        if np.any(hit):
            u = (2 * num[hit] - _DIGIT_ONE) / float(_DIGIT_ONE)
            total[idx[hit]] = (
                acc[hit] + nu[hit] * m_i + (2 * nu[hit] + 1) * s_i + bump_cdf(u) * m_i
            )
            keep = ~hit
            idx, num, nu, acc = idx[keep], num[keep], nu[keep], acc[keep]
            d = d[keep]
        two = (d == 2).astype(np.int64)
        acc += (nu + two) * m_i
        nu = 2 * nu + two
    total[idx] = acc + nu * profile.subtree_mass(depth)
    total[flat >= 1.0] = profile.subtree_mass(0)
    return total.reshape(shape)


def f_map(profile, quad_depth=24, domain=(-8.0, 9.0)):
    """The primitive f(x) = integral_0^x g(t) dt as a MonotoneMap.

    Forward evaluation walks the ternary digits and uses the cached bump
    cumulative (and the closed-form tail integral); the derivative is
    exp(g_log); the inverse is bisection.  For the Exact profile f is flat to
    machine precision on [0, 1] (every interior bump mass underflows), so
    inverse queries there return some point of the numerical preimage.
    """
    if isinstance(profile, ExactProfile):
        profile = ExactProfile(quad_depth)
    total01 = profile.subtree_mass(0)

    def forward(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        neg = x < 0.0
        pos = x > 1.0
        mid = ~neg & ~pos
        if np.any(neg):
            out[neg] = -profile.tail_integral(-x[neg])
        if np.any(mid):
            out[mid] = _demo_f01(x[mid], profile)
        if np.any(pos):
            out[pos] = total01 + profile.tail_integral(x[pos] - 1.0)
        return out

    return MonotoneMap(
        forward,
        domain,
        derivative=lambda x: np.exp(g_log(x, profile, boundary=True)),
    )


def h_inverse_descent(s, theta, depth=44):
    """Exact inverse of h(x) = x + theta C(x) by walking the construction tree.

    h translates every removed interval rigidly by theta times the local
    Cantor-function value, so the inverse descends the kept-interval tree of
    the image: once s falls in a translated gap, tau = s - theta c is exact.
    Points still in the (measure theta) image of the dust after `depth`
    levels are resolved to the left endpoint of the surviving interval
    (width 3^-depth).  Agrees with the bisection inverse to bracket width.
    """
    theta = float(theta)
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    shape = np.atleast_1d(s).shape
    flat = np.atleast_1d(s).ravel()
    tau = np.empty_like(flat)
    tau[flat <= 0.0] = flat[flat <= 0.0]
    hi = flat >= 1.0 + theta
    tau[hi] = flat[hi] - theta
    if theta == 0.0:
        out = flat.reshape(shape)
        return float(out[0]) if scalar else out
    idx = np.flatnonzero((flat > 0.0) & (flat < 1.0 + theta))
    sv = flat[idx]
    a = np.zeros(idx.shape, dtype=float)      # left endpoint of kept interval
    c = np.zeros(idx.shape, dtype=float)      # Cantor value at its left end
    ell = np.ones(idx.shape, dtype=float)     # kept interval length
    for n in range(1, depth + 1):
        if idx.size == 0:
            break
        cmid = c + 2.0 ** (-n)
        gap_lo = a + ell / 3.0 + theta * cmid
        gap_hi = a + 2.0 * ell / 3.0 + theta * cmid
        in_gap = (sv >= gap_lo) & (sv <= gap_hi)
        if np.any(in_gap):
            tau[idx[in_gap]] = sv[in_gap] - theta * cmid[in_gap]
            keep = ~in_gap
            idx, sv, a, c, ell = idx[keep], sv[keep], a[keep], c[keep], ell[keep]
            gap_lo = gap_lo[keep]
            cmid = cmid[keep]
        right = sv > gap_lo  # beyond the (removed) gap: right kept child
        a = np.where(right, a + 2.0 * ell / 3.0, a)
        c = np.where(right, cmid, c)
        ell = ell / 3.0
    tau[idx] = a
    out = tau.reshape(shape)
    return float(out[0]) if scalar else out


def cantor_cumulative_map(theta, domain=(-8.0, 10.0)):
    """h(x) = x + theta * C(x) with C clamped outside [0, 1]; h(1) = 1+theta.

    Strictly increasing and continuous; the inverse bisects the per-point
    bracket [y - theta, y] (h(x) - x lies in [0, theta]).
    """
    theta = float(theta)
    if theta < 0:
        raise ValueError("theta must be nonnegative")

    def forward(x):
        x = np.asarray(x, dtype=float)
        return x + theta * cantor_cumulative(x)

    return MonotoneMap(
        forward,
        domain,
        derivative=None,
        bracket=lambda y: (y - theta, y),
        bisect_iters=80,
    )


def f_m_map(profile, theta, quad_depth=24, domain=(-8.0, 9.0), f=None):
    """Perturbed primitive for the scaled Cantor-Lebesgue measure theta * C.

    f_m(h(x)) = f(x) with h(x) = x + theta C(x): forward(s) = f(h^-1(s)),
    inverse(t) = h(f^-1(t)), derivative(s) = g(h^-1(s)) (the derivative
    transport identity f_m'(f_m^-1(t)) = f'(f^-1(t))).
    """
    if f is None:
        f = f_map(profile, quad_depth, domain)
    if theta == 0:
        return f
    h = cantor_cumulative_map(theta, domain=(domain[0] - 1, domain[1] + theta + 1))

    def forward(s):
        return f(h_inverse_descent(s, theta))

    def inverse_fn(t):
        return h(f.inverse(t))

    def derivative(s):
        return np.exp(g_log(h_inverse_descent(s, theta), profile, boundary=True))

    return MonotoneMap(
        forward,
        (domain[0], domain[1] + theta),
        derivative=derivative,
        inverse_fn=inverse_fn,
    )


def fm_derivative_identity_check(profile, theta, samples, fd_step=1e-4, seed=0):
    """Max discrepancy between a centered difference of f_m at f_m^-1(t) and
    f'(f^-1(t)), over `samples` points of the common range.

    The difference step is scaled to the containing gap width (the bump
    curvature grows like the inverse square of the gap, and the scaling
    cancels it), keeping the O(step^2) error uniform across generations.
    Points whose fiber is float-degenerate are skipped and counted: t outside
    the range, preimages in the Cantor dust beyond generation 13 (where the
    subtraction noise of the difference quotient exceeds the derivative), or
    g below 1e-8 (f numerically flat, so f^-1 is ill-posed at that t).
    Returns (max_abs_error, n_skipped).
    """
    f = f_map(profile)
    fm = f_m_map(profile, theta)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-1.5, 2.5, int(samples))
    ts = f(xs)
    in_range = (ts > fm.range[0] + 1e-9) & (ts < fm.range[1] - 1e-9)
    skipped = int(np.count_nonzero(~in_range))
    ts = ts[in_range]

    tau = f.inverse(ts)
    k, _, _, _ = locate_removed(tau)
    k = np.atleast_1d(k)
    inside = (tau > 0.0) & (tau < 1.0)
    deriv = np.exp(g_log(tau, profile, boundary=True))
    usable = (deriv > 1e-8) & (k <= 13) & ~(inside & (k == 0))
    skipped += int(np.count_nonzero(~usable))
    if not np.any(usable):
        return 0.0, skipped
    ts = ts[usable]
    rhs = deriv[usable]
    step = fd_step * 3.0 ** (-k[usable].astype(float))

    s = fm.inverse(ts)
    lhs = (fm(s + step) - fm(s - step)) / (2.0 * step)
    return float(np.max(np.abs(lhs - rhs))), skipped
