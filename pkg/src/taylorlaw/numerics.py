"""Dependency-free numerical primitives.

Standard-normal quantile, 2x2 symmetric eigen-machinery, and Fisher-z
correlation intervals, implemented from elementary arithmetic so that
results are reproducible bit-for-bit across platforms.  The transcendental
helpers (``portable_log``, ``portable_exp``, ``portable_erfc``,
``portable_lgamma``) deliberately avoid libm special functions: the
vectorised kernel backends mirror them operation-for-operation, and any
libm implementation difference would otherwise leak into the simulation
streams.

Accuracy targets: the portable log/exp are correct to a few ulp, erfc to
~1e-14 relative on the range used by the normal CDF, and the refined
normal quantile to ~1e-13 absolute, far inside the 1e-9 contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, SingularityError

# Cody-Waite split of ln 2 (high part exact to 32 bits), shared with both
# kernel backends.
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
INV_LN2 = 1.4426950408889634074
SQRT_HALF = 0.70710678118654752440
INV_SQRT2 = 0.70710678118654752440
TWO_OVER_SQRT_PI = 1.1283791670955125739
INV_SQRT_PI = 0.56418958354775628695
INV_SQRT_TWO_PI = 0.39894228040143267794
HALF_LOG_TWO_PI = 0.91893853320467274178

# Reciprocal factorials 1/2! .. 1/14! for the exp kernel.
_EXP_COEF = tuple(1.0 / math.factorial(k) for k in range(2, 15))

# Stirling series coefficients B_{2k} / (2k (2k-1)).
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
)

# log(k!) arguments 0..18 have exactly representable factorials.
_MAX_EXACT_FACTORIAL = 18


def portable_log(x: float) -> float:
    """Natural logarithm from frexp plus an atanh series.

    Valid for finite x > 0; returns -inf at 0.
    """
    if x <= 0.0:
        if x == 0.0:
            return -math.inf
        raise DomainError(f"portable_log requires x > 0, got {x}")
    m, e = math.frexp(x)
    if m < SQRT_HALF:
        m *= 2.0
        e -= 1
    s = (m - 1.0) / (m + 1.0)
    z = s * s
    p = z * (1.0 / 3.0 + z * (1.0 / 5.0 + z * (1.0 / 7.0 + z * (
        1.0 / 9.0 + z * (1.0 / 11.0 + z * (1.0 / 13.0 + z * (
            1.0 / 15.0 + z * (1.0 / 17.0 + z * (1.0 / 19.0 + z * (1.0 / 21.0))))))))))
    return e * LN2_LO + (2.0 * s) * (1.0 + p) + e * LN2_HI


def portable_exp(x: float) -> float:
    """Exponential via argument reduction x = k ln2 + r and a Taylor core."""
    if x > 709.782712893384:
        return math.inf
    if x < -745.2:
        return 0.0
    k = math.floor(x * INV_LN2 + 0.5)
    r = (x - k * LN2_HI) - k * LN2_LO
    p = _EXP_COEF[12]
    for c in (
        _EXP_COEF[11], _EXP_COEF[10], _EXP_COEF[9], _EXP_COEF[8],
        _EXP_COEF[7], _EXP_COEF[6], _EXP_COEF[5], _EXP_COEF[4],
        _EXP_COEF[3], _EXP_COEF[2], _EXP_COEF[1], _EXP_COEF[0],
    ):
        p = c + r * p
    er = 1.0 + r * (1.0 + r * p)
    return math.ldexp(er, int(k))


def _erf_series(ax: float) -> float:
    # Alternating Maclaurin series for erf on [0, 1.5); 30 fixed terms.
    z = ax * ax
    g = ax
    s = ax
    for n in range(1, 30):
        g = g * (-z) / n
        s += g / (2 * n + 1)
    return TWO_OVER_SQRT_PI * s


def _erfc_cf(ax: float) -> float:
    # Gauss continued fraction for erfc on [1.5, inf), evaluated backward
    # with 64 fixed terms: erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + ...))).
    f = ax
    for k in range(64, 0, -1):
        f = ax + (0.5 * k) / f
    return portable_exp(-ax * ax) * INV_SQRT_PI / f


def portable_erfc(x: float) -> float:
    """Complementary error function, ~1e-14 relative on |x| < 9."""
    ax = abs(x)
    if ax < 1.5:
        e = 1.0 - _erf_series(ax)
    else:
        e = _erfc_cf(ax)
    return e if x >= 0.0 else 2.0 - e


def portable_lgamma(z: float) -> float:
    """log Gamma for z >= 1; exact factorials below 20, Stirling above."""
    if z < 1.0:
        raise DomainError(f"portable_lgamma requires z >= 1, got {z}")
    n = int(z)
    if float(n) == z and n - 1 <= _MAX_EXACT_FACTORIAL:
        if n <= 2:
            return 0.0
        return portable_log(float(math.factorial(n - 1)))
    # Shift small arguments up so the Stirling series is accurate.
    shift = 0.0
    zz = z
    while zz < 19.0:
        shift += portable_log(zz)
        zz += 1.0
    w = 1.0 / (zz * zz)
    series = _STIRLING[4]
    for c in (_STIRLING[3], _STIRLING[2], _STIRLING[1], _STIRLING[0]):
        series = c + w * series
    series /= zz
    return (zz - 0.5) * portable_log(zz) - zz + HALF_LOG_TWO_PI + series - shift


def normal_cdf(x: float) -> float:
    """Standard normal CDF built on ``portable_erfc``."""
    return 0.5 * portable_erfc(-x * INV_SQRT2)


def normal_pdf(x: float) -> float:
    return INV_SQRT_TWO_PI * portable_exp(-0.5 * x * x)


# Acklam's rational approximation to the inverse normal CDF
# (max relative error 1.15e-9 before refinement).
_ACK_A = (
    -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
    1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00,
)
_ACK_B = (
    -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
    6.680131188771972e+01, -1.328068155288572e+01,
)
_ACK_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
    -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00,
)
_ACK_D = (
    7.784695709041462e-03, 3.224671290700398e-01,
    2.445134137142996e+00, 3.754408661907416e+00,
)
_ACK_SPLIT = 0.02425


def _quantile_lower_half(p: float) -> float:
    # p in (0, 0.5]; returns the (non-positive) quantile.
    if p < _ACK_SPLIT:
        q = math.sqrt(-2.0 * portable_log(p))
        x = (((((_ACK_C[0] * q + _ACK_C[1]) * q + _ACK_C[2]) * q + _ACK_C[3]) * q
              + _ACK_C[4]) * q + _ACK_C[5]) / (
            (((_ACK_D[0] * q + _ACK_D[1]) * q + _ACK_D[2]) * q + _ACK_D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_ACK_A[0] * r + _ACK_A[1]) * r + _ACK_A[2]) * r + _ACK_A[3]) * r
              + _ACK_A[4]) * r + _ACK_A[5]) * q / (
            ((((_ACK_B[0] * r + _ACK_B[1]) * r + _ACK_B[2]) * r + _ACK_B[3]) * r
             + _ACK_B[4]) * r + 1.0)
    # One Newton step on the normal CDF; x <= 0 here so the CDF evaluation
    # goes through erfc at a nonnegative argument and never cancels.
    x -= (normal_cdf(x) - p) / normal_pdf(x)
    return x


def normal_quantile(p: float) -> float:
    """Quantile of the standard normal distribution.

    Rational approximation refined by one Newton step on the normal CDF;
    absolute error well below 1e-9.  Raises :class:`DomainError` outside (0, 1).
    """
    p = float(p)
    if not 0.0 < p < 1.0 or math.isnan(p):
        raise DomainError(f"normal_quantile requires 0 < p < 1, got {p}")
    if p > 0.5:
        return -_quantile_lower_half(1.0 - p)
    return _quantile_lower_half(p)


@dataclass(frozen=True)
class SymMatrix2:
    """Symmetric 2x2 matrix stored by its upper triangle."""

    a11: float
    a12: float
    a22: float

    def __post_init__(self):
        for v in (self.a11, self.a12, self.a22):
            if not math.isfinite(v):
                raise ValueError(f"SymMatrix2 entries must be finite, got {v}")

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def eigenvalues(self) -> tuple[float, float]:
        """(smallest, largest) eigenvalue, closed form."""
        half_tr = 0.5 * (self.a11 + self.a22)
        half_gap = 0.5 * math.hypot(self.a11 - self.a22, 2.0 * self.a12)
        return half_tr - half_gap, half_tr + half_gap

    def matvec(self, v: tuple[float, float]) -> tuple[float, float]:
        return (self.a11 * v[0] + self.a12 * v[1],
                self.a12 * v[0] + self.a22 * v[1])

    def quad_with(self, other: "SymMatrix2") -> float:
        """Trace of the product with another symmetric 2x2 matrix."""
        return (self.a11 * other.a11 + 2.0 * self.a12 * other.a12
                + self.a22 * other.a22)


@dataclass(frozen=True)
class Interval:
    """Closed real interval with lower <= upper."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower <= self.upper):
            raise ValueError(f"interval bounds out of order: {self.lower} > {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def pd_floor(m: SymMatrix2) -> float:
    """Scale-aware positive-definiteness floor for 2x2 matrices."""
    return 1e-12 * (m.trace + 1.0)


def min_eigenvalue(m: SymMatrix2) -> float:
    return m.eigenvalues()[0]


def sym2x2_inv_sqrt(m: SymMatrix2) -> SymMatrix2:
    """Inverse square root of a symmetric positive definite 2x2 matrix.

    Closed-form eigendecomposition; the result C satisfies C m C = I.
    Raises :class:`SingularityError` carrying the smallest eigenvalue when
    it does not exceed the scale-aware floor.
    """
    lam_min, lam_max = m.eigenvalues()
    if lam_min <= pd_floor(m):
        raise SingularityError(lam_min, what="2x2 matrix")
    if m.a12 == 0.0:
        return SymMatrix2(1.0 / math.sqrt(m.a11), 0.0, 1.0 / math.sqrt(m.a22))
    # Eigenvector for lam_max, taking the better-conditioned representation.
    v1 = (m.a12, lam_max - m.a11)
    v2 = (lam_max - m.a22, m.a12)
    v = v1 if (v1[0] * v1[0] + v1[1] * v1[1]) >= (v2[0] * v2[0] + v2[1] * v2[1]) else v2
    norm = math.hypot(v[0], v[1])
    c, s = v[0] / norm, v[1] / norm
    wmax = 1.0 / math.sqrt(lam_max)
    wmin = 1.0 / math.sqrt(lam_min)
    # C = wmax * vv' + wmin * (v_perp)(v_perp)'
    return SymMatrix2(
        wmax * c * c + wmin * s * s,
        (wmax - wmin) * c * s,
        wmax * s * s + wmin * c * c,
    )


def fisher_ci(r: float, n: int, alpha: float) -> Interval:
    """Fisher-z confidence interval for a correlation coefficient.

    tanh(arctanh(r) +- q_{1-alpha/2} / sqrt(n - 3)); requires n >= 4 and |r| < 1.
    """
    if n < 4:
        raise DomainError(f"fisher_ci requires n >= 4, got {n}")
    if not abs(r) < 1.0:
        raise DomainError(f"fisher_ci requires |r| < 1, got {r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"fisher_ci requires 0 < alpha < 1, got {alpha}")
    z = math.atanh(r)
    h = normal_quantile(1.0 - alpha / 2.0) / math.sqrt(n - 3.0)
    return Interval(math.tanh(z - h), math.tanh(z + h))
