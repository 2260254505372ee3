"""Momentum profile of the circle-invariant metric on the disc-bundle side.

The profile phi(tau; c) solves the constant-scalar-curvature ODE for the
Calabi ansatz on the total space of L^-1 -> D with initial data phi(0)=0,
phi'(0)=2.  Its numerator

    pbar(tau) = (1+tau)^n phi(tau) / 2
              = tau + sum_{i=2}^{n+1} S_M C(n+1,i)/(n(n+1)) tau^i
                    - sum_{i=2}^{n+2} c  C(n+2,i)/((n+1)(n+2)) tau^i

is a polynomial of degree n+2 whose coefficients are assembled in exact
rational arithmetic before any floating evaluation (the double root at tau0
makes the expanded form cancellation-prone otherwise).

c0 is the largest c keeping phi >= 0 on [0, inf); at c = c0 the numerator
factors as pbar = tau (tau - tau0)^2 f(tau) with f > 0 on [0, tau0].  tau0
is then both the smallest positive double root and the symplectic fiber
area.  For n = 1 everything is closed-form:

    c0   = S_M - 4/3 + (2/3) sqrt(4 - 6 S_M)
    tau0 = 3 (S_M - c0) / (2 c0)
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .numerics import BracketError
from .records import VerificationRecord

__all__ = [
    "ProfileParams",
    "MomentumProfile",
    "eval_phi",
    "eval_phi_derivative",
    "solve_c0",
    "factor_check",
    "eta2",
    "closed_form_c0_n1",
    "closed_form_tau0_n1",
]


@dataclass(frozen=True)
class ProfileParams:
    """Discrete input data: base dimension n and base scalar curvature S_M < 0."""

    n: int
    s_m: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer, got %r" % (self.n,))
        if not self.s_m < 0:
            raise ValueError("S_M must be negative (got %r); the S_M >= 0 branch has "
                             "infinite fiber area and is not modeled" % (self.s_m,))


def _numerator_fractions(params: ProfileParams, c) -> list:
    """Ascending coefficients of pbar as exact Fractions (c given exactly)."""
    n = params.n
    s_m = Fraction(params.s_m)
    c = Fraction(c)
    coeffs = [Fraction(0), Fraction(1)] + [Fraction(0)] * (n + 1)
    for i in range(2, n + 2):
        coeffs[i] += s_m * math.comb(n + 1, i) / Fraction(n * (n + 1))
    for i in range(2, n + 3):
        coeffs[i] -= c * math.comb(n + 2, i) / Fraction((n + 1) * (n + 2))
    return coeffs


def numerator_coeffs(params: ProfileParams, c) -> np.ndarray:
    """Float64 ascending coefficients of pbar(tau; c)."""
    return np.array([float(q) for q in _numerator_fractions(params, c)])


def _polyval_asc(coeffs, x):
    y = np.zeros_like(np.asarray(x, dtype=np.float64))
    for c in np.asarray(coeffs)[::-1]:
        y = y * x + c
    return y


def _polyder_asc(coeffs):
    c = np.asarray(coeffs, dtype=np.float64)
    return c[1:] * np.arange(1, len(c))


def eval_phi(params: ProfileParams, c, tau):
    """phi(tau; c) from the expanded rational-coefficient numerator."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    pbar = _polyval_asc(numerator_coeffs(params, c), tau)
    out = 2.0 * pbar / (1.0 + tau) ** params.n
    return float(out) if out.ndim == 0 else out


def eval_phi_derivative(params: ProfileParams, c, tau):
    """phi'(tau; c), same expanded-coefficient route as eval_phi."""
    tau = np.asarray(tau, dtype=np.float64)
    co = numerator_coeffs(params, c)
    p = _polyval_asc(co, tau)
    dp = _polyval_asc(_polyder_asc(co), tau)
    u = 1.0 + tau
    out = 2.0 * (dp * u - params.n * p) / u ** (params.n + 1)
    return float(out) if out.ndim == 0 else out


def closed_form_c0_n1(s_m: float) -> float:
    return s_m - 4.0 / 3.0 + (2.0 / 3.0) * math.sqrt(4.0 - 6.0 * s_m)


def closed_form_tau0_n1(s_m: float) -> float:
    c0 = closed_form_c0_n1(s_m)
    return 3.0 * (s_m - c0) / (2.0 * c0)


def _min_on_positive_axis(coeffs_asc):
    """Minimum of pbar over tau > 0 and its location (via roots of pbar')."""
    dco = _polyder_asc(coeffs_asc)
    roots = np.roots(dco[::-1])
    best_v, best_x = np.inf, None
    for r in roots:
        if abs(r.imag) < 1e-9 and r.real > 0:
            x = float(r.real)
            v = float(_polyval_asc(coeffs_asc, x))
            if v < best_v:
                best_v, best_x = v, x
    if best_x is None:
        # no interior critical point: pbar ~ tau > 0 near 0 and grows
        return np.inf, None
    return best_v, best_x


def _deflate(coeffs_asc, root):
    """Synthetic division of an ascending-coefficient polynomial by (x-root)."""
    c = np.asarray(coeffs_asc, dtype=np.float64)[::-1]
    out = np.empty(len(c) - 1)
    acc = 0.0
    for i, ci in enumerate(c[:-1]):
        acc = acc * root + ci
        out[i] = acc
    rem = acc * root + c[-1]
    return out[::-1].copy(), rem


@dataclass(frozen=True)
class MomentumProfile:
    """Profile at the completeness constant: c = c0, double root at tau0.

    `coeffs` are the expanded numerator coefficients at c0; `fcoeffs` the
    cofactor f of pbar = tau (tau - tau0)^2 f(tau) obtained by deflation,
    which is the representation used for evaluation near the double root.
    Immutable after construction; all evaluations are pure.
    """

    params: ProfileParams
    c: float
    c0: float
    tau0: float
    coeffs: np.ndarray
    fcoeffs: np.ndarray
    eta2_at_tau0: float
    deflation_residue: float

    # derivatives of the cofactor f, for the product-form evaluation of phi
    _dfco: np.ndarray
    _ddfco: np.ndarray

    @property
    def n(self):
        return self.params.n

    @property
    def s_m(self):
        return self.params.s_m

    def _psi_parts(self, tau):
        """(psi, psi', psi'')/2 for psi = 2 tau (tau-tau0)^2 f(tau), kept in
        product form: the (tau - tau0) factors are never expanded, so there
        is no cancellation at the double root."""
        s = tau - self.tau0
        f = _polyval_asc(self.fcoeffs, tau)
        df = _polyval_asc(self._dfco, tau)
        ddf = _polyval_asc(self._ddfco, tau)
        p = tau * s * s * f
        dp = s * (s * f + 2.0 * tau * f + tau * s * df)
        ddp = (4.0 * s * f + 2.0 * tau * f + 2.0 * s * s * df
               + 4.0 * tau * s * df + tau * s * s * ddf)
        return p, dp, ddp

    def phi(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        p, _, _ = self._psi_parts(tau)
        out = 2.0 * p / (1.0 + tau) ** self.n
        return float(out) if out.ndim == 0 else out

    def dphi(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        u = 1.0 + tau
        p, dp, _ = self._psi_parts(tau)
        n = self.n
        out = 2.0 * (dp * u - n * p) / u ** (n + 1)
        return float(out) if out.ndim == 0 else out

    def ddphi(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        u = 1.0 + tau
        p, dp, ddp = self._psi_parts(tau)
        n = self.n
        out = 2.0 * (ddp * u * u - 2.0 * n * dp * u + n * (n + 1) * p) / u ** (n + 2)
        return float(out) if out.ndim == 0 else out

    def f_cofactor(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        out = _polyval_asc(self.fcoeffs, tau)
        return float(out) if out.ndim == 0 else out

    def eta2(self, tau):
        """phi/(tau-tau0)^2 with the removable singularity filled: 2 tau f/(1+tau)^n."""
        tau = np.asarray(tau, dtype=np.float64)
        out = 2.0 * tau * _polyval_asc(self.fcoeffs, tau) / (1.0 + tau) ** self.n
        return float(out) if out.ndim == 0 else out

    def eta(self, tau):
        return 1.0 / self.eta2(tau)


def solve_c0(params: ProfileParams, c_width_rel=1e-13, newton_steps=6) -> MomentumProfile:
    """Find (c0, tau0) by bisection on c with inner minimization of pbar.

    Feasible(c) means min_{tau>0} pbar(tau; c) >= 0; pbar is pointwise
    decreasing in c for tau > 0, so the feasible set is a left half-line and
    its supremum is c0.  Search bracket [S_M (n+2), 0]: the left end is
    feasible (coefficientwise dominance) and c = 0 is infeasible for
    S_M < 0.  The bisected pair is polished by Newton on
    (pbar(tau0; c), pbar'(tau0; c)) = (0, 0) to pin the double root, then
    pbar is deflated by tau and twice by (tau - tau0) to obtain f.
    """
    n = params.n
    lo = params.s_m * (n + 2)
    hi = 0.0
    width_goal = c_width_rel * max(1.0, abs(params.s_m))
    v_lo, _ = _min_on_positive_axis(numerator_coeffs(params, lo))
    if not (v_lo >= 0 or v_lo == np.inf):
        raise BracketError("bisection bracket start c=%r is infeasible; S_M=%r"
                           % (lo, params.s_m))
    tau_star = None
    while hi - lo > width_goal:
        mid = 0.5 * (lo + hi)
        v, x = _min_on_positive_axis(numerator_coeffs(params, mid))
        if v >= 0:
            lo = mid
            tau_star = x
        else:
            hi = mid
            tau_star = x
    c0 = 0.5 * (lo + hi)
    if tau_star is None:
        raise BracketError("no interior double-root candidate located")

    # Newton polish of (c, tau) on pbar = pbar' = 0.  d pbar/dc is the exact
    # polynomial -sum C(n+2,i)/((n+1)(n+2)) tau^i.
    dc_poly = np.zeros(n + 3)
    for i in range(2, n + 3):
        dc_poly[i] = -math.comb(n + 2, i) / ((n + 1) * (n + 2))
    tau0 = tau_star
    for _ in range(newton_steps):
        co = numerator_coeffs(params, c0)
        d1 = _polyder_asc(co)
        d2 = _polyder_asc(d1)
        p = float(_polyval_asc(co, tau0))
        dp = float(_polyval_asc(d1, tau0))
        ddp = float(_polyval_asc(d2, tau0))
        dpc = float(_polyval_asc(dc_poly, tau0))
        tau0 -= dp / ddp
        c0 -= p / dpc
    co = numerator_coeffs(params, c0)

    pco, _ = _deflate(co, 0.0)            # pbar / tau (root at 0 is exact)
    q1, r1 = _deflate(pco, tau0)
    fco, r2 = _deflate(q1, tau0)
    residue = abs(r1) + abs(r2)

    eta2_at = 2.0 * tau0 * float(_polyval_asc(fco, tau0)) / (1.0 + tau0) ** n

    return MomentumProfile(params=params, c=c0, c0=c0, tau0=tau0, coeffs=co,
                           fcoeffs=fco, eta2_at_tau0=eta2_at,
                           deflation_residue=residue,
                           _dfco=_polyder_asc(fco), _ddfco=_polyder_asc(_polyder_asc(fco)))


def eta2(mp: MomentumProfile, tau):
    return mp.eta2(tau)


def factor_min(mp: MomentumProfile, grid_size=10_000, eps_rel=1e-4) -> float:
    """Minimum of the double-root cofactor f over [0, tau0].

    f is evaluated from the expanded numerator as pbar/(tau (tau-tau0)^2) on
    a grid excluding relative eps neighborhoods of the removable
    singularities at 0 and tau0, where the one-sided limits f(0) = 1/tau0^2
    (forced by phi'(0) = 2) and f(tau0) = pbar''(tau0)/(2 tau0) are used
    instead.
    """
    tau0 = mp.tau0
    grid = np.linspace(eps_rel * tau0, (1.0 - eps_rel) * tau0, grid_size)
    pbar = _polyval_asc(mp.coeffs, grid)
    fvals = pbar / (grid * (grid - tau0) ** 2)
    d2 = _polyder_asc(_polyder_asc(mp.coeffs))
    f_at_0 = 1.0 / tau0 ** 2
    f_at_tau0 = float(_polyval_asc(d2, tau0)) / (2.0 * tau0)
    return min(float(fvals.min()), f_at_0, f_at_tau0)


def factor_check(mp: MomentumProfile, grid_size=10_000, eps_rel=1e-4) -> VerificationRecord:
    """Positivity of the double-root cofactor: passes iff min f > 0."""
    if mp.c != mp.c0:
        return VerificationRecord(
            name="factor_check", anchor="phi = (2 tau/(1+tau)^n)(tau-tau0)^2 f, f > 0",
            residual=math.inf, threshold=0.0, note="not applicable: c != c0")
    min_f = factor_min(mp, grid_size, eps_rel)
    return VerificationRecord(
        name="factor_check", anchor="phi = (2 tau/(1+tau)^n)(tau-tau0)^2 f, f > 0",
        residual=-min_f, threshold=0.0, note="min f = %.6e" % min_f)
