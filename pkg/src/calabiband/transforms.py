"""Fiber coordinate dictionary for a momentum profile.

t(tau) = int_{tau_ref}^tau dx/phi(x) is the log-radius coordinate along the
fiber (t -> -inf at the zero section, +inf at the divisor side) and

g(tau) = 2 int_{tau_ref}^tau (x - tau0)/phi(x) dx

is the fiberwise weight entering the L2 pairing e^{-k g}.  Both are gauge
quantities: changing the gauge point tau_ref shifts each by a constant, and
every downstream ratio or difference is insensitive to the choice (the
default is tau0/2).

The chart caches prefix values of (t, g) on a 4096-node grid, geometric
toward both endpoints, and completes them with one 16-point Gauss-Legendre
panel per query, so chart evaluations carry quadrature-grade accuracy rather
than interpolation error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .numerics import find_root, gauss_legendre_panel
from .profile import MomentumProfile
from .records import VerificationRecord

__all__ = [
    "CoordinateChart",
    "build_chart",
    "t_of_tau",
    "tau_of_t",
    "g_of_tau",
    "poincare_check",
]

# Chart domain is [tau0*_EDGE_LEFT, tau0*(1 - _EDGE_RIGHT)].  The left edge
# sits at e^{-106} of the fiber area because t ~ (1/2) log tau there (forced
# by phi'(0) = 2) and inversion must cover t down to ~ -50.  The right edge
# is bounded by double precision itself: tau - tau0 loses ulp(tau0)/|tau-tau0|
# relative accuracy, so points closer than ~1e-12 tau0 carry no information.
_EDGE_LEFT = 1e-46
_EDGE_RIGHT = 1e-12


@dataclass(frozen=True)
class CoordinateChart:
    profile: MomentumProfile
    tau_ref: float
    tau_nodes: np.ndarray
    t_nodes: np.ndarray
    g_nodes: np.ndarray
    _glx: np.ndarray = field(repr=False, default=None)
    _glw: np.ndarray = field(repr=False, default=None)

    @property
    def tau_min(self):
        return float(self.tau_nodes[0])

    @property
    def tau_max(self):
        return float(self.tau_nodes[-1])

    def _eval(self, tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
        if np.any(tau < self.tau_nodes[0]) or np.any(tau > self.tau_nodes[-1]):
            raise ValueError("tau outside chart domain [%g, %g]"
                             % (self.tau_min, self.tau_max))
        return _kernels.chart_tg(tau, self.tau_nodes, self.t_nodes, self.g_nodes,
                                 self.profile.fcoeffs, self.profile.tau0,
                                 self.profile.n, self._glx, self._glw)

    def t(self, tau):
        out = self._eval(tau)[0]
        return float(out[0]) if np.isscalar(tau) or np.ndim(tau) == 0 else out

    def g(self, tau):
        out = self._eval(tau)[1]
        return float(out[0]) if np.isscalar(tau) or np.ndim(tau) == 0 else out

    def t_and_g(self, tau):
        return self._eval(tau)

    def tau_from_t(self, t):
        """Invert t(tau) by bracketed Newton on the cached chart."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.empty_like(t_arr)
        for i, tv in enumerate(t_arr):
            out[i] = self._invert_one(float(tv))
        return float(out[0]) if np.ndim(t) == 0 else out

    def _invert_one(self, tv):
        tn = self.t_nodes
        if tv <= tn[0]:
            return self.tau_min
        if tv >= tn[-1]:
            return self.tau_max
        j = int(np.searchsorted(tn, tv)) - 1
        lo, hi = self.tau_nodes[j], self.tau_nodes[j + 1]
        tau = math.sqrt(lo * hi)   # geometric midpoint suits the graded grid
        for _ in range(100):
            f = self.t(tau) - tv
            if f > 0:
                hi = tau
            else:
                lo = tau
            if abs(f) <= 1e-12 * max(1.0, abs(tv)):
                break
            step = -f * self.profile.phi(tau)   # dt/dtau = 1/phi
            nxt = tau + step
            if not (lo < nxt < hi):
                nxt = math.sqrt(lo * hi)
            if abs(nxt - tau) <= 1e-16 * abs(tau):
                tau = nxt
                break
            tau = nxt
        return tau


def build_chart(profile: MomentumProfile, tau_ref=None, nodes_per_side=2048) -> CoordinateChart:
    """Build the cached chart; tau_ref defaults to tau0/2 (pure gauge)."""
    tau0 = profile.tau0
    if tau_ref is None:
        tau_ref = 0.5 * tau0
    if not (0.0 < tau_ref < tau0):
        raise ValueError("tau_ref must lie in (0, tau0)")
    left = np.geomspace(tau0 * _EDGE_LEFT, 0.5 * tau0, nodes_per_side)
    right = tau0 - np.geomspace(tau0 * _EDGE_RIGHT, 0.5 * tau0, nodes_per_side)[::-1]
    tau_nodes = np.unique(np.concatenate([left, right[1:], [tau_ref]]))

    glx, glw = gauss_legendre_panel()
    # per-segment 16-point panels, accumulated exactly once
    a = tau_nodes[:-1]
    b = tau_nodes[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    xs = mid[:, None] + half[:, None] * glx[None, :]
    inv_phi = 1.0 / profile.phi(xs)
    seg_t = half * (inv_phi @ glw)
    seg_g = half * ((2.0 * (xs - tau0) * inv_phi) @ glw)
    t_nodes = np.concatenate([[0.0], np.cumsum(seg_t)])
    g_nodes = np.concatenate([[0.0], np.cumsum(seg_g)])

    iref = int(np.searchsorted(tau_nodes, tau_ref))
    t_nodes = t_nodes - t_nodes[iref]
    g_nodes = g_nodes - g_nodes[iref]
    return CoordinateChart(profile=profile, tau_ref=float(tau_ref),
                           tau_nodes=tau_nodes, t_nodes=t_nodes, g_nodes=g_nodes,
                           _glx=glx, _glw=glw)


def t_of_tau(chart: CoordinateChart, tau):
    return chart.t(tau)


def tau_of_t(chart: CoordinateChart, t):
    return chart.tau_from_t(t)


def g_of_tau(chart: CoordinateChart, tau):
    return chart.g(tau)


def poincare_check(chart: CoordinateChart, t_values=(1e2, 1e3, 1e4), rel_tol=0.01) -> VerificationRecord:
    """phi(tau(t)) t^2 -> 1/eta2(tau0): the fiber metric has a Poincare-type
    end.  Passes if the value at the largest t is within rel_tol of the limit."""
    prof = chart.profile
    limit = 1.0 / prof.eta2_at_tau0
    seq = []
    for t in t_values:
        tau = chart.tau_from_t(float(t))
        seq.append(prof.phi(tau) * t * t)
    resid = abs(seq[-1] / limit - 1.0)
    monotone = all(abs(seq[i + 1] - limit) <= abs(seq[i] - limit) for i in range(len(seq) - 1))
    return VerificationRecord(
        name="poincare_check", anchor="phi(tau(t)) ~ t^-2 Poincare fiber end",
        residual=resid, threshold=rel_tol,
        note="sequence %s -> limit %.9g%s" % (
            ", ".join("%.9g" % s for s in seq), limit,
            "" if monotone else " (non-monotone)"))
