"""Shared numerical kernel: adaptive Gauss-Kronrod quadrature (plain and
log-domain), bracketed root finding, golden-section sup-search, and central
finite differences.

All routines are pure functions of their inputs and therefore safe to call
from any number of worker threads.  Integrands are evaluated on numpy arrays
of abscissae, never point by point, so chart-backed integrands stay cheap.
"""

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

__all__ = [
    "QuadratureResult",
    "LogQuadratureResult",
    "RootResult",
    "NumericsError",
    "QuadratureError",
    "BracketError",
    "integrate",
    "integrate_logdomain",
    "find_root",
    "sup_search",
    "finite_diff",
    "gauss_legendre_panel",
]

ABS_FLOOR = 1e-300


class NumericsError(RuntimeError):
    pass


class QuadratureError(NumericsError):
    """Quadrature failure; carries the partial estimate when one exists."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BracketError(NumericsError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class LogQuadratureResult:
    """Integral of exp(logf), stored as log_value = log(integral)."""

    log_value: float
    error_estimate: float  # relative, on the scaled integral
    evaluations: int


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    bracket_width: float


# 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
_XGK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])
_GAUSS_IDX = np.arange(1, 15, 2)

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


def gauss_legendre_panel():
    """Nodes and weights of the 16-point Gauss-Legendre rule on [-1, 1]."""
    return _GL16_X, _GL16_W


def _wrap_interval(f, lo, hi):
    """Map an integral over (lo, hi), possibly semi-infinite, onto (0, 1).

    Returns (F, to_x) where F evaluates the transformed integrand on arrays
    of u in (0,1) and to_x maps u back to the original abscissa.
    """
    lo = float(lo)
    hi = float(hi)
    if math.isfinite(lo) and math.isfinite(hi):
        span = hi - lo

        def to_x(u):
            return lo + span * u

        def F(u):
            return np.asarray(f(lo + span * u), dtype=np.float64) * span

        return F, to_x
    if math.isfinite(lo) and hi == math.inf:

        def to_x(u):
            return lo + u / (1.0 - u)

        def F(u):
            w = 1.0 - u
            return np.asarray(f(lo + u / w), dtype=np.float64) / (w * w)

        return F, to_x
    if lo == -math.inf and math.isfinite(hi):

        def to_x(u):
            return hi - u / (1.0 - u)

        def F(u):
            w = 1.0 - u
            return np.asarray(f(hi - u / w), dtype=np.float64) / (w * w)

        return F, to_x
    raise ValueError("unsupported interval (%r, %r)" % (lo, hi))


def _gk_eval_batch(F, lo, hi, to_x, max_evals, state):
    """Apply G7/K15 to a batch of (transformed) intervals in one call.

    lo, hi are equal-length arrays; returns (values, errors) per interval.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    xs = c[:, None] + h[:, None] * _XGK[None, :]
    ys = F(xs.ravel())
    state["evals"] += xs.size
    if state["evals"] > max_evals:
        raise _BudgetExceeded()
    ys = np.asarray(ys, dtype=np.float64).reshape(xs.shape)
    bad = ~np.isfinite(ys)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        if np.isnan(ys[i, j]):
            raise QuadratureError("integrand returned NaN at x=%r"
                                  % (float(to_x(xs[i, j])),))
        # +-inf at an interior node: treat as an integrable spike and let
        # bisection isolate it
        ys = np.where(bad, 0.0, ys)
    k = h * (ys @ _WGK)
    g = h * (ys[:, _GAUSS_IDX] @ _WG)
    return k, np.abs(k - g)


class _BudgetExceeded(Exception):
    pass


class _Stalled(Exception):
    """An interval reached the width floor; accept the current estimate."""


def integrate(f, interval, rel_tol=1e-10, abs_floor=ABS_FLOOR, max_evals=400_000,
              initial_panels=8) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integration of f over interval=(lo, hi).

    f must accept a numpy array of abscissae and return array values.
    Semi-infinite intervals are mapped to (0,1) by x = lo + u/(1-u); a fully
    infinite interval is split at 0.  Convergence is declared when the summed
    Kronrod-Gauss discrepancy drops below rel_tol*|value| + abs_floor.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if lo == -math.inf and hi == math.inf:
        left = integrate(f, (-math.inf, 0.0), rel_tol, abs_floor, max_evals // 2, initial_panels)
        right = integrate(f, (0.0, math.inf), rel_tol, abs_floor, max_evals // 2, initial_panels)
        return QuadratureResult(left.value + right.value,
                                left.error_estimate + right.error_estimate,
                                left.evaluations + right.evaluations)
    if not lo < hi:
        raise ValueError("empty or reversed interval (%r, %r)" % (lo, hi))

    F, to_x = _wrap_interval(f, lo, hi)
    state = {"evals": 0}
    heap = []  # (-err, a, b, val)
    total_val = 0.0
    total_err = 0.0
    try:
        edges = np.linspace(0.0, 1.0, initial_panels + 1)
        vals, errs = _gk_eval_batch(F, edges[:-1], edges[1:], to_x, max_evals, state)
        for i in range(initial_panels):
            heapq.heappush(heap, (-float(errs[i]), edges[i], edges[i + 1], float(vals[i])))
        total_val = float(vals.sum())
        total_err = float(errs.sum())
        while total_err > rel_tol * abs(total_val) + abs_floor:
            # split the worst few intervals, evaluating all children at once
            batch = []
            while heap and len(batch) < 4:
                if batch and -heap[0][0] < 0.25 * (-batch[0][0]):
                    break  # remaining intervals are comparatively converged
                neg_e, a, b, v = heapq.heappop(heap)
                if b - a <= 1e-15 * max(abs(a), abs(b), 1.0):
                    heapq.heappush(heap, (neg_e * (1.0 - 1e-12), a, b, v))
                    raise _Stalled()
                batch.append((neg_e, a, b, v))
            los, his = [], []
            for _, a, b, _ in batch:
                m = 0.5 * (a + b)
                los.extend([a, m])
                his.extend([m, b])
            vals, errs = _gk_eval_batch(F, los, his, to_x, max_evals, state)
            for j, (neg_e, a, b, v) in enumerate(batch):
                v1, e1 = float(vals[2 * j]), float(errs[2 * j])
                v2, e2 = float(vals[2 * j + 1]), float(errs[2 * j + 1])
                total_val += (v1 + v2) - v
                total_err += (e1 + e2) - (-neg_e)
                heapq.heappush(heap, (-e1, los[2 * j], his[2 * j], v1))
                heapq.heappush(heap, (-e2, los[2 * j + 1], his[2 * j + 1], v2))
    except _Stalled:
        pass
    except _BudgetExceeded:
        raise QuadratureError(
            "quadrature did not converge within %d evaluations "
            "(partial value %r, error %r)" % (max_evals, total_val, total_err),
            partial=QuadratureResult(total_val, total_err, state["evals"]))
    if not math.isfinite(total_val):
        raise QuadratureError("quadrature overflowed; use integrate_logdomain for "
                              "exponential integrands", partial=None)
    return QuadratureResult(total_val, total_err, state["evals"])


def _coarse_max(logF, n_scan=257):
    u = np.linspace(0.0, 1.0, n_scan + 2)[1:-1]
    vals = logF(u)
    j = int(np.argmax(vals))
    return u, vals, j


def integrate_logdomain(logf, interval, rel_tol=1e-10, max_evals=400_000,
                        peak_hint=None, drop=None) -> LogQuadratureResult:
    """Integrate exp(logf) over interval, returning log of the integral.

    The integrand is rescaled by its interior maximum M so that the working
    integrand exp(logf - M) is O(1); the result is reported as
    log_value = M + log(integral of the scaled integrand).  The integration
    window is clipped where logf has dropped `drop` below M (default
    max(log(1/rel_tol)+12, 45)); the clipped tails of a concave exponent are
    below e^-drop in relative mass.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if lo == -math.inf and hi == math.inf:
        # scan both halves, keep the better peak, and integrate each half
        left = integrate_logdomain(logf, (-math.inf, 0.0), rel_tol, max_evals // 2,
                                   peak_hint if (peak_hint is not None and peak_hint < 0) else None, drop)
        right = integrate_logdomain(logf, (0.0, math.inf), rel_tol, max_evals // 2,
                                    peak_hint if (peak_hint is not None and peak_hint >= 0) else None, drop)
        m = max(left.log_value, right.log_value)
        val = math.exp(left.log_value - m) + math.exp(right.log_value - m)
        return LogQuadratureResult(m + math.log(val),
                                   left.error_estimate + right.error_estimate,
                                   left.evaluations + right.evaluations)

    F_dummy, to_x = _wrap_interval(lambda x: np.zeros_like(x), lo, hi)
    if math.isfinite(lo) and math.isfinite(hi):
        span = hi - lo

        def logF(u):
            return np.asarray(logf(lo + span * u), dtype=np.float64) + math.log(span)

        def from_x(x):
            return (x - lo) / span
    elif math.isfinite(lo):

        def logF(u):
            w = 1.0 - u
            return np.asarray(logf(lo + u / w), dtype=np.float64) - 2.0 * np.log(w)

        def from_x(x):
            return (x - lo) / (1.0 + (x - lo))
    else:

        def logF(u):
            w = 1.0 - u
            return np.asarray(logf(hi - u / w), dtype=np.float64) - 2.0 * np.log(w)

        def from_x(x):
            return (hi - x) / (1.0 + (hi - x))

    evals = 0
    if drop is None:
        drop = max(math.log(1.0 / rel_tol) + 12.0, 45.0)

    u_scan, v_scan, j = _coarse_max(logF)
    evals += len(u_scan)
    if peak_hint is not None:
        u_hint = float(from_x(peak_hint))
        if 0.0 < u_hint < 1.0 and float(logF(np.array([u_hint]))[0]) > v_scan[j]:
            # insert the hint into the scan ordering
            u_scan = np.append(u_scan, u_hint)
            v_scan = np.append(v_scan, float(logF(np.array([u_hint]))[0]))
            j = int(np.argmax(v_scan))
            evals += 2
    if not np.isfinite(v_scan[j]):
        raise QuadratureError("log-integrand is not finite anywhere on the scan grid")

    # golden-section refinement of the peak
    glo = u_scan[j - 1] if j > 0 else 0.0
    ghi = u_scan[j + 1] if j < len(u_scan) - 1 else 1.0
    res = sup_search(lambda u: float(logF(np.array([u]))[0]), (glo, ghi), tol=1e-12)
    evals += 200
    u_star = res.root
    M = float(logF(np.array([u_star]))[0])

    def crossing(side_lo, side_hi, increasing):
        # first u with logF(u) = M - drop between side_lo and side_hi
        def h(u):
            return float(logF(np.array([u]))[0]) - (M - drop)

        a, b = side_lo, side_hi
        if h(a) * h(b) > 0:
            return side_lo if increasing else side_hi
        r = find_root(h, (a, b), tol=1e-12)
        return r.root

    # walk the scan grid outward to bracket the drop crossing on both sides
    below_left = u_scan[(u_scan < u_star) & (v_scan < M - drop)]
    below_right = u_scan[(u_scan > u_star) & (v_scan < M - drop)]
    u_lo = crossing(below_left.max() if len(below_left) else 0.0, u_star, True)
    u_hi = crossing(u_star, below_right.min() if len(below_right) else 1.0, False)
    evals += 240

    def scaled(u):
        return np.exp(logF(u) - M)

    inner = integrate(scaled, (u_lo, u_hi), rel_tol=rel_tol, abs_floor=1e-280,
                      max_evals=max_evals, initial_panels=16)
    evals += inner.evaluations
    if inner.value <= 0:
        raise QuadratureError("scaled integrand sums to a non-positive value")
    rel_err = inner.error_estimate / inner.value + math.exp(-drop)
    return LogQuadratureResult(M + math.log(inner.value), rel_err, evals)


def find_root(f, bracket, tol=1e-12, max_iter=200) -> RootResult:
    """Brent's method on a sign-changing bracket, bisection fallback.

    Converges when |f| <= tol or the bracket width drops below
    tol * max(1, |root|).
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return RootResult(a, 0.0, 0.0)
    if fb == 0.0:
        return RootResult(b, 0.0, 0.0)
    if fa * fb > 0:
        raise BracketError("no sign change on bracket (%r, %r): f=%r, %r" % (a, b, fa, fb))
    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if fb == 0.0 or abs(b - a) <= tol * max(1.0, abs(b)):
            break
        if fa != fc and fb != fc:
            s = (a * fb * fc / ((fa - fb) * (fa - fc))
                 + b * fa * fc / ((fb - fa) * (fb - fc))
                 + c * fa * fb / ((fc - fa) * (fc - fb)))
        else:
            s = b - fb * (b - a) / (fb - fa)
        cond = ((s < min((3 * a + b) / 4, b) or s > max((3 * a + b) / 4, b))
                or abs(s - b) >= abs(e) / 2)
        if cond:
            s = 0.5 * (a + b)
            e = d = b - a
        else:
            e = d
            d = abs(s - b)
        fs = float(f(s))
        c, fc = b, fb
        if fa * fs < 0:
            b, fb = s, fs
        else:
            a, fa = s, fs
        if abs(fa) < abs(fb):
            a, b, fa, fb = b, a, fb, fa
    return RootResult(b, abs(fb), abs(b - a))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def sup_search(f, bracket, tol=1e-12, max_iter=500) -> RootResult:
    """Golden-section maximizer on a unimodal function (caller asserts
    unimodality).  Deterministic; residual reports the final bracket width."""
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise BracketError("empty bracket (%r, %r)" % (a, b))
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = float(f(x1)), float(f(x2))
    for _ in range(max_iter):
        if (b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 < f2:
            a = x1
            x1, f1 = x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = float(f(x2))
        else:
            b = x2
            x2, f2 = x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = float(f(x1))
    root = 0.5 * (a + b)
    width = b - a
    return RootResult(root, width, width)


def finite_diff(f, x0, m, h):
    """Central-difference estimate of the m-th derivative (m <= 4), O(h^2)."""
    x0 = float(x0)
    h = float(h)
    if m == 0:
        return float(f(x0))
    if m == 1:
        return (float(f(x0 + h)) - float(f(x0 - h))) / (2.0 * h)
    if m == 2:
        return (float(f(x0 + h)) - 2.0 * float(f(x0)) + float(f(x0 - h))) / h ** 2
    if m == 3:
        return (float(f(x0 + 2 * h)) - 2.0 * float(f(x0 + h))
                + 2.0 * float(f(x0 - h)) - float(f(x0 - 2 * h))) / (2.0 * h ** 3)
    if m == 4:
        return (float(f(x0 + 2 * h)) - 4.0 * float(f(x0 + h)) + 6.0 * float(f(x0))
                - 4.0 * float(f(x0 - h)) + float(f(x0 - 2 * h))) / h ** 4
    raise ValueError("finite_diff supports orders m <= 4, got m=%r" % (m,))
