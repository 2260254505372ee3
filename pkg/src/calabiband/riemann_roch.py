"""Intersection arithmetic: dimensions, volumes, the sigma invariant and the
band decomposition of the section space.

With A = (1+tau0)[D] - O(1) and A_k = kA - D, Hirzebruch-Riemann-Roch gives

    dim H_k = (a0 k^{n+1} + a1 k^n)/(n+1)! + O(k^{n-1})
    a0 = [(1+tau0)^{n+1} - 1] L^n
    a1 = -(n+1)/2 [(1+tau0)^n - 1] (L^n + L^{n-1}.K_D)

while the Fubini-Study volumes of the embedded pair are

    Vol Lhat = [(k(1+tau0)-1)^{n+1} - k^{n+1}] L^n/(n+1)!
    Vol D    = (k(1+tau0)-1)^n L^n/n!

whose expansion has b0 = a0 and b1 = -(n+1)/2 (1+tau0)^n L^n.  The invariant
sigma = (b1-a1)/a0 satisfies the cross-check c0/2 = -sigma against the
analytic side once the base curvature is normalized as
S_M = -n (L^{n-1}.K_D)/L^n; that normalization is what the identity forces
at n = 1 (the naive factor-2 Riemannian convention fails it), and it closes
the identity at n = 2, 3 as well.

Exact arithmetic (Fractions) is used whenever tau0 is rational; float tau0
switches to floating mode, flagged on the report.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .records import VerificationRecord

__all__ = [
    "GeometryData",
    "DimensionReport",
    "smcurvature",
    "chi_coefficients",
    "volumes",
    "sigma",
    "sigma_identity",
    "band_multiplicities",
    "dimension_report",
    "geometry_from_curve",
]


@dataclass(frozen=True)
class GeometryData:
    """Discrete invariants of (D, L): n, the self-intersection L^n > 0, the
    mixed number L^{n-1}.K_D, and the fiber area tau0 (Fraction => exact
    mode).  For the n = 1 toy, genus and degree give Ln = d, LK = 2g - 2."""

    n: int
    ln: float
    lk: float
    tau0: object  # Fraction (exact) or float
    genus: Optional[int] = None
    degree: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.ln > 0:
            raise ValueError("L^n must be positive (ampleness)")
        if self.genus is not None and self.genus < 2:
            raise ValueError("the curve toy requires genus >= 2 (negative curvature)")

    @property
    def exact(self):
        return isinstance(self.tau0, Fraction)


def geometry_from_curve(genus: int, degree: int, tau0) -> GeometryData:
    if degree < 1:
        raise ValueError("degree must be >= 1")
    return GeometryData(n=1, ln=degree, lk=2 * genus - 2, tau0=tau0,
                        genus=genus, degree=degree)


def smcurvature(gd: GeometryData) -> float:
    """Base scalar curvature in the normalization forced by the sigma identity."""
    return -gd.n * gd.lk / gd.ln


def _one(gd):
    return Fraction(1) if gd.exact else 1.0


def chi_coefficients(gd: GeometryData):
    """(a0, a1) of the dimension expansion, exact when tau0 is rational."""
    n = gd.n
    t1 = _one(gd) + gd.tau0
    ln = Fraction(gd.ln) if gd.exact else gd.ln
    lk = Fraction(gd.lk) if gd.exact else gd.lk
    a0 = (t1 ** (n + 1) - 1) * ln
    half = Fraction(n + 1, 2) if gd.exact else (n + 1) / 2.0
    a1 = -half * (t1 ** n - 1) * (ln + lk)
    return a0, a1


def volumes(gd: GeometryData, k):
    """(vol_Lhat, vol_D, b0, b1) at embedding power k >= 1."""
    if not k >= 1:
        raise ValueError("k must be >= 1")
    n = gd.n
    exact = gd.exact and float(k) == k and float(k).is_integer()
    if exact:
        k = Fraction(int(k))
        ln = Fraction(gd.ln)
        t1 = 1 + gd.tau0
    else:
        k = float(k)
        ln = float(gd.ln)
        t1 = 1.0 + float(gd.tau0)
    m = k * t1 - 1
    vol_lhat = (m ** (n + 1) - k ** (n + 1)) * ln / math.factorial(n + 1)
    vol_d = m ** n * ln / math.factorial(n)
    b0 = (t1 ** (n + 1) - 1) * ln
    half = Fraction(n + 1, 2) if exact else (n + 1) / 2.0
    b1 = -half * t1 ** n * ln
    return vol_lhat, vol_d, b0, b1


def sigma(gd: GeometryData):
    """sigma = (b1 - a1)/a0 via b1 - a1 = (n+1)/2 [((1+tau0)^n - 1) LK - Ln]."""
    n = gd.n
    t1 = _one(gd) + gd.tau0
    ln = Fraction(gd.ln) if gd.exact else gd.ln
    lk = Fraction(gd.lk) if gd.exact else gd.lk
    half = Fraction(n + 1, 2) if gd.exact else (n + 1) / 2.0
    a0, _ = chi_coefficients(gd)
    return half * ((t1 ** n - 1) * lk - ln) / a0


def sigma_identity(gd: GeometryData, mp) -> VerificationRecord:
    """Residual of c0/2 = -sigma linking the ODE side to the intersection
    side.  mp must be the profile solved at S_M = smcurvature(gd) with
    tau0 matching gd.tau0 for the identity to be meaningful; mismatched
    inputs simply fail with their measured residual."""
    s = float(sigma(gd))
    resid = abs(mp.c0 / 2.0 + s)
    note = "c0=%r sigma=%r" % (mp.c0, s)
    if abs(smcurvature(gd) - mp.s_m) > 1e-12 * max(1.0, abs(mp.s_m)):
        note += " (warning: S_M of profile does not match geometry)"
    if gd.n != mp.n:
        note += " (warning: n mismatch)"
    return VerificationRecord(name="sigma_identity", anchor="c0/2 = -sigma",
                              residual=resid, threshold=1e-8, note=note)


def band_multiplicities(gd: GeometryData, k) -> dict:
    """m_a = h^0(D, kA - aD) for a = 1..floor(k tau0).

    n = 1 exact mode: curve Riemann-Roch m_a = (N - a) d + 1 - g with
    N = k(1+tau0), valid while (N-a)d > 2g-2 (h^1 = 0); bands below that
    degree are outside the modeled regime and raise.  For n >= 2 the
    leading-term surrogate m_a = (N-a)^n L^n / n! is used.
    """
    if not k >= 1:
        raise ValueError("k must be >= 1")
    tau0 = float(gd.tau0)
    n_bands = int(math.floor(float(k) * tau0))
    nn = float(k) * (1.0 + tau0)
    out = {}
    if gd.n == 1:
        d = gd.ln
        g = gd.lk / 2.0 + 1.0
        exact = (gd.exact and float(k).is_integer()
                 and (Fraction(int(k)) * (1 + gd.tau0)).denominator == 1)
        for a in range(1, n_bands + 1):
            deg = (nn - a) * d
            if not deg > gd.lk:
                raise ValueError("band a=%d has degree %r <= 2g-2=%r: outside the "
                                 "vanishing regime" % (a, deg, gd.lk))
            if exact:
                out[a] = int(Fraction(int(k)) * (1 + gd.tau0) - a) * int(d) + 1 - int(round(g))
            else:
                out[a] = deg + 1.0 - g
    else:
        for a in range(1, n_bands + 1):
            out[a] = (nn - a) ** gd.n * gd.ln / math.factorial(gd.n)
    return out


@dataclass(frozen=True)
class DimensionReport:
    k: float
    dim_hk: float
    a0: object
    a1: object
    vol_lhat: float
    vol_d: float
    b0: object
    b1: object
    sigma: float
    band_multiplicities: dict = field(repr=False)
    exact_mode: bool = True
    note: str = ""


def dimension_report(gd: GeometryData, k) -> DimensionReport:
    """Assemble the full report.  dim_hk is sum(m_a) in n = 1 exact mode
    (rational tau0); otherwise the chi expansion (a0 k^{n+1} + a1 k^n)/(n+1)!
    is used, which is the asymptotic the sigma mechanism is stated in."""
    a0, a1 = chi_coefficients(gd)
    vol_lhat, vol_d, b0, b1 = volumes(gd, k)
    mults = band_multiplicities(gd, k)
    exact = gd.exact and gd.n == 1 and float(k).is_integer()
    if exact:
        dim = sum(mults.values())
        note = ""
    else:
        dim = (float(a0) * float(k) ** (gd.n + 1) + float(a1) * float(k) ** gd.n) \
            / math.factorial(gd.n + 1)
        note = "floating mode: dim from chi expansion, band sum = %r" % (
            float(sum(mults.values())),)
    return DimensionReport(k=float(k), dim_hk=dim, a0=a0, a1=a1,
                           vol_lhat=float(vol_lhat), vol_d=float(vol_d),
                           b0=b0, b1=b1, sigma=float(sigma(gd)),
                           band_multiplicities=mults, exact_mode=exact, note=note)
