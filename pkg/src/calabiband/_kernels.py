"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Two loops dominate the runtime of the whole package:

* ``chart_tg``  -- evaluation of the fiber coordinate t(tau) and the weight
  g(tau) at arbitrary points, by completing cached prefix integrals with a
  16-point Gauss-Legendre panel from the nearest grid node.  Called once per
  quadrature abscissa, i.e. ~10^5 - 10^7 times per band sweep.
* ``band_lse`` -- log-sum-exp accumulation of the per-band power series
  F(e^u) = sum_b w_b e^{c_b u} together with its first two u-derivatives
  (softmax mean and variance of c).  O(bands x grid) per diagonal entry.

Backend selection: numba is used when importable unless the environment
variable ``CALABIBAND_NO_NUMBA`` is set to 1/true/yes, in which case the
numpy implementations are used.  Both implementations are always importable
(``chart_tg_numpy`` etc.) so they can be compared and benchmarked directly;
see ``calabiband.benchmark``.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "chart_tg",
    "band_lse",
    "chart_tg_numpy",
    "band_lse_numpy",
]


def _numba_disabled() -> bool:
    return os.environ.get("CALABIBAND_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _phi_factored_numpy(x, fco, tau0, n):
    # phi = 2 x (x - tau0)^2 f(x) / (1+x)^n with f given by ascending coeffs
    f = np.zeros_like(x)
    for c in fco[::-1]:
        f = f * x + c
    return 2.0 * x * (x - tau0) ** 2 * f / (1.0 + x) ** n


def chart_tg_numpy(tau_q, tau_nodes, t_nodes, g_nodes, fco, tau0, n, glx, glw):
    """Evaluate (t, g) at the query points tau_q.

    Prefix values at the grid nodes are completed by one 16-point
    Gauss-Legendre panel from the nearest node at or below each query.
    """
    tau_q = np.asarray(tau_q, dtype=np.float64)
    idx = np.searchsorted(tau_nodes, tau_q, side="right") - 1
    idx = np.clip(idx, 0, len(tau_nodes) - 1)
    base = tau_nodes[idx]
    mid = 0.5 * (tau_q + base)
    half = 0.5 * (tau_q - base)
    xs = mid[:, None] + half[:, None] * glx[None, :]
    ph = _phi_factored_numpy(xs, fco, tau0, n)
    inv = 1.0 / ph
    t_q = t_nodes[idx] + half * (inv @ glw)
    g_q = g_nodes[idx] + half * (((2.0 * (xs - tau0)) * inv) @ glw)
    return t_q, g_q


def band_lse_numpy(logw, cvals, u, block=2048):
    """Stable evaluation of f(u) = log sum_b exp(logw_b + c_b u) and its
    first two derivatives (softmax mean and variance of c)."""
    u = np.asarray(u, dtype=np.float64)
    nu = len(u)
    f = np.empty(nu)
    fp = np.empty(nu)
    fpp = np.empty(nu)
    for lo in range(0, nu, block):
        hi = min(lo + block, nu)
        t = logw[:, None] + cvals[:, None] * u[None, lo:hi]
        m = t.max(axis=0)
        e = np.exp(t - m[None, :])
        s0 = e.sum(axis=0)
        s1 = (cvals[:, None] * e).sum(axis=0)
        s2 = (cvals[:, None] ** 2 * e).sum(axis=0)
        f[lo:hi] = m + np.log(s0)
        mean = s1 / s0
        fp[lo:hi] = mean
        fpp[lo:hi] = s2 / s0 - mean * mean
    return f, fp, fpp


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

HAVE_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, belt and braces
        HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _chart_tg_nb(tau_q, tau_nodes, t_nodes, g_nodes, fco, tau0, n, glx, glw):
        nq = tau_q.shape[0]
        t_q = np.empty(nq)
        g_q = np.empty(nq)
        nn = tau_nodes.shape[0]
        nf = fco.shape[0]
        ng = glx.shape[0]
        for q in range(nq):
            tau = tau_q[q]
            i = np.searchsorted(tau_nodes, tau) - 1
            if i < 0:
                i = 0
            if i > nn - 1:
                i = nn - 1
            base = tau_nodes[i]
            mid = 0.5 * (tau + base)
            half = 0.5 * (tau - base)
            acc_t = 0.0
            acc_g = 0.0
            for j in range(ng):
                x = mid + half * glx[j]
                fv = fco[nf - 1]
                for c in range(nf - 2, -1, -1):
                    fv = fv * x + fco[c]
                ph = 2.0 * x * (x - tau0) ** 2 * fv / (1.0 + x) ** n
                acc_t += glw[j] / ph
                acc_g += glw[j] * 2.0 * (x - tau0) / ph
            t_q[q] = t_nodes[i] + half * acc_t
            g_q[q] = g_nodes[i] + half * acc_g
        return t_q, g_q

    @njit(cache=True, nogil=True)
    def _band_lse_nb(logw, cvals, u):
        nb = logw.shape[0]
        nu = u.shape[0]
        f = np.empty(nu)
        fp = np.empty(nu)
        fpp = np.empty(nu)
        for q in range(nu):
            uu = u[q]
            m = -np.inf
            for b in range(nb):
                t = logw[b] + cvals[b] * uu
                if t > m:
                    m = t
            s0 = 0.0
            s1 = 0.0
            s2 = 0.0
            for b in range(nb):
                e = np.exp(logw[b] + cvals[b] * uu - m)
                s0 += e
                s1 += cvals[b] * e
                s2 += cvals[b] * cvals[b] * e
            f[q] = m + np.log(s0)
            mean = s1 / s0
            fp[q] = mean
            fpp[q] = s2 / s0 - mean * mean
        return f, fp, fpp

    def chart_tg(tau_q, tau_nodes, t_nodes, g_nodes, fco, tau0, n, glx, glw):
        tau_q = np.ascontiguousarray(tau_q, dtype=np.float64)
        return _chart_tg_nb(tau_q, tau_nodes, t_nodes, g_nodes, fco, tau0, n, glx, glw)

    def band_lse(logw, cvals, u):
        u = np.ascontiguousarray(u, dtype=np.float64)
        return _band_lse_nb(logw, cvals, u)

    BACKEND = "numba"
else:
    chart_tg = chart_tg_numpy
    band_lse = band_lse_numpy
    BACKEND = "numpy"
