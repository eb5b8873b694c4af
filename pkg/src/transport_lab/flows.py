"""Explicit flows of the Cantor field, candidate weak solutions, the
weak-formulation residual, and the non-uniqueness demonstration.

For each scaled Cantor-Lebesgue weight theta the map
X(t, x) = (x1, f_m(t phi(x1) + f_m^-1(x2))) solves dX/dt = b(X) for the
field b = (0, phi(x1) f'(f^-1(x2))), and u(t, x) = u0(X(t, x)) solves the
transport equation du/dt - b . grad u = 0 weakly.  Distinct theta give
distinct solutions from one initial datum.

The weak residual is evaluated entirely in substituted coordinates
x2 = f_m(y2), y2 = tau + theta C(tau): every spatial integral becomes an
integral against the bump weight g(tau) d tau, discretized by per-gap
bump-mass quantile nodes (one translate of the same profile per removed
interval, so deep generations need only a couple of nodes each and the
truncation error decays like 3^-k_cut).  The divergence term is reduced by
the same integration by parts used to show the flows are weak solutions, so
the quotient g'/g never appears: the integrand carries
d2u0 * f_m'(t phi + y2) * phi * testfn, all bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .cantor import (
    DemoProfile,
    MonotoneMap,
    bump_cdf,
    bump_shape,
    f_map,
    f_m_map,
    g_log,
    h_inverse_descent,
    removed_intervals,
)
from .field import PlateauCutoff, RoughField2D, build_field

_GAUSS_CACHE = {}


def _gauss(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def _panel_nodes(edges, n):
    nodes, wts = _gauss(n)
    lo = np.asarray(edges[:-1], dtype=float)
    hi = np.asarray(edges[1:], dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = (mid[:, None] + half[:, None] * nodes).ravel()
    w = (half[:, None] * wts).ravel()
    return pts, w


def _bump(u):
    return bump_shape(u)


def _bump_d(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    s = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    out[inside] = s * (-2.0 * ui / (1.0 - ui * ui) ** 2)
    return out


# ---------------------------------------------------------------------------
# smooth compactly supported data

@dataclass
class SmoothBump2D:
    """Product bump u(x) = amp * bump((x1-c1)/s1) * bump((x2-c2)/s2)."""

    center: tuple
    scale: tuple
    amplitude: float = 1.0

    def __call__(self, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        return self.amplitude * _bump(u1) * _bump(u2)

    def d2(self, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        return self.amplitude * _bump(u1) * _bump_d(u2) / self.scale[1]

    def d1(self, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        return self.amplitude * _bump_d(u1) * _bump(u2) / self.scale[0]


@dataclass
class TestFunction2D:
    """Compactly supported C-infinity test function on [0, T) x R^2.

    Space factor: product bump.  Time factor: 1 up to t_end - t_ramp, then a
    smooth ramp to 0 at t_end (so supp in [0, t_end] with t_end < T, while
    the value at t = 0 is nonzero and the initial-data term is exercised).
    """

    center: tuple
    scale: tuple
    t_end: float
    t_ramp: float

    def time_profile(self, t):
        t = np.asarray(t, dtype=float)
        s = (self.t_end - t) / self.t_ramp
        out = np.where(t >= self.t_end, 0.0, np.where(t <= self.t_end - self.t_ramp, 1.0, bump_cdf(2.0 * np.clip(s, 0.0, 1.0) - 1.0)))
        return out

    def time_profile_dt(self, t):
        from .cantor import BUMP_MASS

        t = np.asarray(t, dtype=float)
        s = (self.t_end - t) / self.t_ramp
        ramp = (t < self.t_end) & (t > self.t_end - self.t_ramp)
        val = bump_shape(2.0 * np.clip(s, 0.0, 1.0) - 1.0) * (-2.0 / self.t_ramp) / BUMP_MASS
        return np.where(ramp, val, 0.0)

    def value(self, t, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        return self.time_profile(t) * _bump(u1) * _bump(u2)

    def dt(self, t, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        return self.time_profile_dt(t) * _bump(u1) * _bump(u2)

    def grad(self, t, x1, x2):
        u1 = (np.asarray(x1, float) - self.center[0]) / self.scale[0]
        u2 = (np.asarray(x2, float) - self.center[1]) / self.scale[1]
        tp = self.time_profile(t)
        return (
            tp * _bump_d(u1) * _bump(u2) / self.scale[0],
            tp * _bump(u1) * _bump_d(u2) / self.scale[1],
        )


def default_initial_datum(f_total, amplitude=1.0):
    """Smooth compactly supported datum, not vanishing on (0,1) x (0, inf):
    supported in x1 over (0.05, 0.95) and in x2 over (0, f(1))."""
    return SmoothBump2D((0.5, 0.5 * f_total), (0.45, 0.45 * f_total), amplitude)


def test_function_battery(n, T, f, seed=0):
    """Seeded battery of test functions inside the computational box."""
    rng = np.random.default_rng(seed)
    x2_lo, x2_hi = float(f(-1.4)), float(f(2.4))
    out = []
    for _ in range(int(n)):
        c1 = rng.uniform(-0.4, 1.4)
        s1 = rng.uniform(0.5, 1.0)
        c2 = rng.uniform(x2_lo + 0.25 * (x2_hi - x2_lo), x2_hi - 0.25 * (x2_hi - x2_lo))
        s2 = rng.uniform(0.18, 0.35) * (x2_hi - x2_lo)
        t_end = rng.uniform(0.55, 0.9) * T
        t_ramp = rng.uniform(0.35, 0.6) * t_end
        out.append(TestFunction2D((c1, c2), (s1, s2), t_end, t_ramp))
    return out


# ---------------------------------------------------------------------------
# flows

@dataclass
class FlowFamily:
    """Field plus the maps of one measure weight theta."""

    profile: object
    theta: float
    field: RoughField2D
    f: MonotoneMap
    f_m: MonotoneMap


def make_flow_family(profile, theta, f=None):
    if f is None:
        f = f_map(profile)
    fld = RoughField2D(profile, PlateauCutoff(), f)
    fm = f_m_map(profile, theta, f=f)
    return FlowFamily(profile, float(theta), fld, f, fm)


def flow_map(family: FlowFamily, t, x):
    """X(t, x) = (x1, f_m(t phi(x1) + f_m^-1(x2))); first coordinate frozen."""
    x1 = np.asarray(x[0], dtype=float)
    x2 = np.asarray(x[1], dtype=float)
    s = family.f_m.inverse(x2)
    arg = t * family.field.phi(x1) + s
    return x1, family.f_m(arg)


def solution_eval(family: FlowFamily, u0, t, x):
    """u(t, x) = u0(X(t, x))."""
    x1, x2t = flow_map(family, t, x)
    return u0(x1, x2t)


def flow_ode_residual(family: FlowFamily, t_grid, x_samples, dt=1e-4):
    """Max over samples and times of |d/dt X2 (centered) - b2(X(t, x))|."""
    x1 = np.asarray([p[0] for p in x_samples], dtype=float)
    x2 = np.asarray([p[1] for p in x_samples], dtype=float)
    s = family.f_m.inverse(x2)
    phi = family.field.phi(x1)
    worst = 0.0
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        plus = family.f_m((t + dt) * phi + s)
        minus = family.f_m((t - dt) * phi + s)
        deriv = (plus - minus) / (2.0 * dt)
        here = family.f_m(t * phi + s)
        rhs = family.field.b2(x1, here)
        worst = max(worst, float(np.max(np.abs(deriv - rhs))))
    return worst


# ---------------------------------------------------------------------------
# weak-formulation residual

def _bump_quantile_offsets(n, _cache={}):
    """Offsets u_i with bump mass (i+1/2)/n below u_i (midpoint quantiles)."""
    if n not in _cache:
        q = (np.arange(n) + 0.5) / n
        lo = np.full(n, -1.0)
        hi = np.full(n, 1.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = bump_cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        _cache[n] = 0.5 * (lo + hi)
    return _cache[n]


def _tail_quantiles(profile, span, n):
    """Quantile positions v in (0, span] of the tail weight, with the mass."""
    mass = float(profile.tail_integral(span))
    q = (np.arange(n) + 0.5) / n * mass
    lo = np.full(n, 1e-6)
    hi = np.full(n, float(span))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = profile.tail_integral(mid) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi), mass


class WeakFormGrid:
    """Precomputed quadrature state for one (family, u0, T) triple.

    tau nodes carry the bump weight in their quadrature weights, so all
    integrands evaluated on them are the bounded smooth factors.  Everything
    that does not depend on the test function (the flow values and the datum
    arrays) is computed once and shared across a battery.
    """

    def __init__(
        self,
        family: FlowFamily,
        u0: SmoothBump2D,
        T,
        k_cut=10,
        base_nodes=8,
        t_panels=8,
        t_nodes=4,
        x1_nodes=8,
        tail_span=1.8,
        tail_nodes=24,
    ):
        self.family = family
        self.u0 = u0
        self.T = float(T)
        profile = family.profile
        theta = family.theta

        taus = []
        wq = []
        cvals = []
        for iv in removed_intervals(k_cut):
            n_k = max(2, base_nodes - iv.k + 1)
            offs = _bump_quantile_offsets(n_k)
            mass = profile.interval_mass(iv.k)
            taus.append(iv.center + iv.half_width * offs)
            wq.append(np.full(n_k, mass / n_k))
            cvals.append(np.full(n_k, (2.0 * iv.j - 1.0) / 2.0**iv.k))
        v, mass = _tail_quantiles(profile, tail_span, tail_nodes)
        taus.append(-v[::-1])
        wq.append(np.full(tail_nodes, mass / tail_nodes))
        cvals.append(np.zeros(tail_nodes))
        taus.append(1.0 + v)
        wq.append(np.full(tail_nodes, mass / tail_nodes))
        cvals.append(np.ones(tail_nodes))
        self.tau = np.concatenate(taus)
        self.w_tau = np.concatenate(wq)
        cval = np.concatenate(cvals)

        self.y2 = self.tau + theta * cval
        self.fm_y2 = family.f(self.tau)  # f_m(h(tau)) = f(tau), no inversion
        self.x2_window = (float(family.f(-tail_span)), float(family.f(1.0 + tail_span)))

        self.t, self.w_t = _panel_nodes(np.linspace(0.0, self.T, t_panels + 1), t_nodes)
        self.x1, self.w_x1 = _panel_nodes(np.arange(-2.0, 4.0), x1_nodes)

        phi_x1 = family.field.phi(self.x1)
        arg = (
            self.t[:, None, None] * phi_x1[None, :, None]
            + self.y2[None, None, :]
        )
        tau_arg = h_inverse_descent(arg, theta)
        X2 = family.f(tau_arg)
        self.u_arr = u0(self.x1[None, :, None], X2)
        self.du_arr = u0.d2(self.x1[None, :, None], X2)
        self.W = np.exp(g_log(tau_arg, profile))
        self.phi_x1 = phi_x1
        self.u0_row = u0(self.x1[:, None], self.fm_y2[None, :])

    def residual_terms(self, test: TestFunction2D):
        """(time term, initial term, divergence term) of the weak identity."""
        c2, s2 = test.center[1], test.scale[1]
        lo, hi = self.x2_window
        if c2 - s2 < lo or c2 + s2 > hi:
            raise ValueError("test-function support escapes the computational box")
        if test.t_end >= self.T:
            raise ValueError("test function must be supported in [0, T)")
        u2 = (self.fm_y2 - c2) / s2
        b2v = _bump(u2)
        b1v = _bump((self.x1 - test.center[0]) / test.scale[0])
        tprof = test.time_profile(self.t)
        tprof_dt = test.time_profile_dt(self.t)

        # A = int u d_t(testfn);  B = int u0 testfn(0);  C = int u div(b testfn)
        A = np.einsum(
            "t,x,q,txq->",
            self.w_t * tprof_dt,
            self.w_x1 * b1v,
            self.w_tau * b2v,
            self.u_arr,
            optimize=True,
        )
        B = float(
            np.sum((self.w_x1 * b1v)[:, None] * (self.w_tau * b2v)[None, :] * self.u0_row)
        )
        C = -np.einsum(
            "t,x,q,txq->",
            self.w_t * tprof,
            self.w_x1 * b1v * self.phi_x1,
            self.w_tau * b2v,
            self.du_arr * self.W,
            optimize=True,
        )
        return float(A), float(B), float(C)

    def residual(self, test: TestFunction2D):
        A, B, C = self.residual_terms(test)
        return abs(-A - B + C)

    def scale(self, test: TestFunction2D):
        A, B, C = self.residual_terms(test)
        return max(abs(A), abs(B), abs(C))


def weak_residual(family: FlowFamily, u0, test, T, grid: WeakFormGrid = None, **grid_kw):
    """Absolute residual of the weak formulation for u(t,x) = u0(X(t,x))."""
    if grid is None:
        grid = WeakFormGrid(family, u0, T, **grid_kw)
    return grid.residual(test)


# ---------------------------------------------------------------------------
# non-uniqueness report

@dataclass
class NonUniquenessReport:
    profile: str
    thetas: list
    residual_matrix: list          # per theta, per test function
    residual_scales: list          # per theta, per test function
    distance_matrix: list          # pairwise L1 distances at t_probe
    flow_residuals: list           # per theta, max flow-ODE residual
    t_probe: float
    grid: tuple
    seed: int

    def max_relative_residual(self):
        worst = 0.0
        for row, srow in zip(self.residual_matrix, self.residual_scales):
            for r, s in zip(row, srow):
                worst = max(worst, r / max(s, 1e-300))
        return worst

    def min_offdiagonal_distance(self):
        n = len(self.thetas)
        vals = [
            self.distance_matrix[i][j]
            for i in range(n)
            for j in range(n)
            if i != j
        ]
        return min(vals) if vals else 0.0


def nonuniqueness_report(
    u0=None,
    theta_list=(0.0, 0.5, 1.0),
    t_probe=1.0,
    grid_shape=(220, 220),
    profile=None,
    T=2.0,
    seed=0,
    battery_size=20,
    grid_kw=None,
):
    """One initial datum, one candidate solution per theta: verifies each is
    a weak solution (residual battery) and measures pairwise L1 distances at
    t_probe.  Distinctness is measured, not asserted a priori."""
    profile = profile or DemoProfile(0.5)
    f = f_map(profile)
    if u0 is None:
        u0 = default_initial_datum(float(f(1.0)))
    battery = test_function_battery(battery_size, T, f, seed=seed)
    grid_kw = grid_kw or {}

    thetas = [float(t) for t in theta_list]
    families = [make_flow_family(profile, th, f=f) for th in thetas]

    residual_matrix = []
    residual_scales = []
    flow_res = []
    for fam in families:
        wg = WeakFormGrid(fam, u0, T, **grid_kw)
        terms = [wg.residual_terms(tf) for tf in battery]
        residual_matrix.append([abs(-a - b + c) for a, b, c in terms])
        residual_scales.append([max(abs(a), abs(b), abs(c)) for a, b, c in terms])
        rng = np.random.default_rng(seed + 1)
        xs1 = rng.uniform(-1.5, 2.5, 60)
        base = rng.uniform(0.34, 0.66, 60)  # interiors of the first gap
        xs2 = f(base)
        samples = list(zip(xs1, xs2))
        flow_res.append(flow_ode_residual(fam, np.linspace(0.0, 1.0, 5), samples))

    # pairwise L1 distances on the probe grid
    nx, ny = grid_shape
    x1g = np.linspace(-2.0, 3.0, nx)
    x2g = np.linspace(float(f(-2.0)) + 1e-9, float(f(3.0)) - 1e-9, ny)
    w1 = np.full(nx, (x1g[-1] - x1g[0]) / (nx - 1))
    w1[0] = w1[-1] = w1[0] / 2
    w2 = np.full(ny, (x2g[-1] - x2g[0]) / (ny - 1))
    w2[0] = w2[-1] = w2[0] / 2
    X1, X2 = np.meshgrid(x1g, x2g, indexing="ij")
    from .cantor import cantor_cumulative

    s_base = f.inverse(x2g)
    c_base = cantor_cumulative(s_base)
    slices = []
    for fam, th in zip(families, thetas):
        # f_m^-1(x2) = f^-1(x2) + theta C(f^-1(x2))
        smap = s_base + th * c_base
        arg = t_probe * fam.field.phi(X1) + smap[None, :]
        slices.append(u0(X1, fam.f_m(arg)))
    n = len(thetas)
    dist = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.sum(np.outer(w1, w2) * np.abs(slices[i] - slices[j])))
            dist[i][j] = dist[j][i] = d

    return NonUniquenessReport(
        profile=getattr(profile, "name", "demo"),
        thetas=thetas,
        residual_matrix=residual_matrix,
        residual_scales=residual_scales,
        distance_matrix=dist,
        flow_residuals=flow_res,
        t_probe=float(t_probe),
        grid=tuple(grid_shape),
        seed=int(seed),
    )
