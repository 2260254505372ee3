"""Benchmark the numba kernels against the pure-numpy fallback.

Run with ``python -m calabiband.benchmark``.  Times the two hot kernels on
realistic workloads: chart evaluation at quadrature abscissae and the
log-sum-exp band accumulation behind every diagonal entry.  Both backends
are imported directly, so the comparison works regardless of the
CALABIBAND_NO_NUMBA setting.
"""

import argparse
import math
import time

import numpy as np

from . import _kernels
from .numerics import gauss_legendre_panel
from .profile import ProfileParams, solve_c0
from .transforms import build_chart


def _time(fn, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(prog="calabiband.benchmark")
    ap.add_argument("--k", type=float, default=400.0)
    ap.add_argument("--queries", type=int, default=200_000)
    ap.add_argument("--grid", type=int, default=4600)
    args = ap.parse_args(argv)

    mp = solve_c0(ProfileParams(1, -2.0))
    chart = build_chart(mp)
    glx, glw = gauss_legendre_panel()
    rng = np.random.default_rng(0)
    tau_q = chart.tau_min + (chart.tau_max - chart.tau_min) * rng.random(args.queries)

    n_bands = int(args.k * mp.tau0)
    big_n = args.k * (1.0 + mp.tau0)
    a_idx = np.arange(1, n_bands + 1, dtype=np.float64)
    # synthetic but realistically scaled band weights
    logw = -2.0 * 16.0 * args.k * np.log(a_idx) / a_idx.mean() \
        + np.log(big_n - a_idx)
    logw -= logw.max()
    cvals = a_idx - n_bands / 3.0
    u = np.linspace(-2.0 * 6.0 * args.k / 20.0 - 36.0,
                    -2.0 * 6.0 * args.k / 20.0 + 36.0, args.grid)

    impls = [("numpy", _kernels.chart_tg_numpy, _kernels.band_lse_numpy)]
    if _kernels.HAVE_NUMBA:
        # warm the JIT before timing
        _kernels.chart_tg(tau_q[:16], chart.tau_nodes, chart.t_nodes,
                          chart.g_nodes, mp.fcoeffs, mp.tau0, mp.n, glx, glw)
        _kernels.band_lse(logw, cvals, u[:8])
        impls.append(("numba", _kernels.chart_tg, _kernels.band_lse))
    else:
        print("numba unavailable or disabled; timing the numpy path only")

    results = {}
    for name, ctg, lse in impls:
        t_chart = _time(lambda: ctg(tau_q, chart.tau_nodes, chart.t_nodes,
                                    chart.g_nodes, mp.fcoeffs, mp.tau0, mp.n,
                                    glx, glw))
        t_lse = _time(lambda: lse(logw, cvals, u))
        results[name] = (t_chart, t_lse)
        print("%-6s  chart_tg(%d queries): %8.1f ms    band_lse(%d x %d): %8.1f ms"
              % (name, args.queries, 1e3 * t_chart, n_bands, args.grid, 1e3 * t_lse))
    if "numba" in results:
        print("speedup chart_tg: %.1fx   band_lse: %.1fx"
              % (results["numpy"][0] / results["numba"][0],
                 results["numpy"][1] / results["numba"][1]))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
