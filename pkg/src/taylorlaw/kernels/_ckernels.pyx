# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels.

Scalar C mirrors of the portable arithmetic in ``taylorlaw.numerics`` and
of the stream in ``taylorlaw.kernels.stream``.  Operation order matches
the NumPy backend exactly (the build disables FP contraction), so both
backends emit bit-identical streams; this one is just faster.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor, frexp, ldexp, sqrt

cnp.import_array()

name = "cython"

ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 M1 = 0xBF58476D1CE4E5B9ULL
cdef u64 M2 = 0x94D049BB133111EBULL
cdef double U53 = 2.0 ** -52

cdef double LN2_HI = 6.93147180369123816490e-01
cdef double LN2_LO = 1.90821492927058770002e-10
cdef double INV_LN2 = 1.4426950408889634074
cdef double SQRT_HALF = 0.70710678118654752440
cdef double INV_SQRT2 = 0.70710678118654752440
cdef double TWO_OVER_SQRT_PI = 1.1283791670955125739
cdef double INV_SQRT_PI = 0.56418958354775628695
cdef double INV_SQRT_TWO_PI = 0.39894228040143267794
cdef double HALF_LOG_TWO_PI = 0.91893853320467274178
cdef double INF = float("inf")

# Reciprocal factorials 1/2! .. 1/14!.
cdef double[13] EXP_C
cdef double[5] STIRLING
cdef double[20] LGAMMA_TABLE

# Acklam's inverse-normal rational coefficients.
cdef double[6] ACK_A
cdef double[5] ACK_B
cdef double[6] ACK_C
cdef double[4] ACK_D
cdef double ACK_SPLIT = 0.02425


def _init_tables():
    import math
    cdef int i, n
    fact = 1.0
    for i in range(13):
        EXP_C[i] = 1.0 / math.factorial(i + 2)
    STIRLING[0] = 1.0 / 12.0
    STIRLING[1] = -1.0 / 360.0
    STIRLING[2] = 1.0 / 1260.0
    STIRLING[3] = -1.0 / 1680.0
    STIRLING[4] = 1.0 / 1188.0
    LGAMMA_TABLE[0] = 0.0
    LGAMMA_TABLE[1] = 0.0
    LGAMMA_TABLE[2] = 0.0
    for n in range(3, 20):
        LGAMMA_TABLE[n] = plog(<double>math.factorial(n - 1))
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01,
         2.445134137142996e+00, 3.754408661907416e+00)
    for i in range(6):
        ACK_A[i] = a[i]
        ACK_C[i] = c[i]
    for i in range(5):
        ACK_B[i] = b[i]
    for i in range(4):
        ACK_D[i] = d[i]


cdef inline u64 mix64(u64 x) noexcept nogil:
    x = (x ^ (x >> 30)) * M1
    x = (x ^ (x >> 27)) * M2
    return x ^ (x >> 31)


cdef inline double to_uniform(u64 b) noexcept nogil:
    return (<double>(b >> 12) + 0.5) * U53


cdef inline double stream_uniform(u64 seed, u64 index) noexcept nogil:
    return to_uniform(mix64(seed + GOLDEN * (index + 1)))


cdef double plog(double x) noexcept nogil:
    cdef int e
    cdef double m, s, z, p
    if x <= 0.0:
        return -INF
    m = frexp(x, &e)
    if m < SQRT_HALF:
        m *= 2.0
        e -= 1
    s = (m - 1.0) / (m + 1.0)
    z = s * s
    p = z * (1.0 / 3.0 + z * (1.0 / 5.0 + z * (1.0 / 7.0 + z * (
        1.0 / 9.0 + z * (1.0 / 11.0 + z * (1.0 / 13.0 + z * (
            1.0 / 15.0 + z * (1.0 / 17.0 + z * (1.0 / 19.0 + z * (1.0 / 21.0))))))))))
    return e * LN2_LO + (2.0 * s) * (1.0 + p) + e * LN2_HI


cdef double pexp(double x) noexcept nogil:
    cdef double k, r, p, er
    cdef int i
    if x > 709.782712893384:
        return INF
    if x < -745.2:
        return 0.0
    k = floor(x * INV_LN2 + 0.5)
    r = (x - k * LN2_HI) - k * LN2_LO
    p = EXP_C[12]
    for i in range(11, -1, -1):
        p = EXP_C[i] + r * p
    er = 1.0 + r * (1.0 + r * p)
    return ldexp(er, <int>k)


cdef double perfc(double x) noexcept nogil:
    cdef double ax = fabs(x)
    cdef double z, g, s, f, e
    cdef int n, k
    if ax < 1.5:
        z = ax * ax
        g = ax
        s = ax
        for n in range(1, 30):
            g = g * (-z) / n
            s += g / (2 * n + 1)
        e = 1.0 - TWO_OVER_SQRT_PI * s
    else:
        f = ax
        for k in range(64, 0, -1):
            f = ax + (0.5 * k) / f
        e = pexp(-ax * ax) * INV_SQRT_PI / f
    if x >= 0.0:
        return e
    return 2.0 - e


cdef double plgamma_int(double z) noexcept nogil:
    # lgamma on integer-valued z >= 1 (Poisson acceptance path).
    cdef double zz, w, series
    cdef int i
    if z <= 19.0:
        return LGAMMA_TABLE[<int>z]
    zz = z
    w = 1.0 / (zz * zz)
    series = STIRLING[4]
    for i in range(3, -1, -1):
        series = STIRLING[i] + w * series
    series = series / zz
    return (zz - 0.5) * plog(zz) - zz + HALF_LOG_TWO_PI + series


cdef double quantile_lower_half(double p) noexcept nogil:
    cdef double q, r, x
    if p < ACK_SPLIT:
        q = sqrt(-2.0 * plog(p))
        x = (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q
              + ACK_C[4]) * q + ACK_C[5]) / (
            (((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r
              + ACK_A[4]) * r + ACK_A[5]) * q / (
            ((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r
             + ACK_B[4]) * r + 1.0)
    x -= (0.5 * perfc(-x * INV_SQRT2) - p) / (INV_SQRT_TWO_PI * pexp(-0.5 * x * x))
    return x


cdef inline double pquantile(double p) noexcept nogil:
    if p > 0.5:
        return -quantile_lower_half(1.0 - p)
    return quantile_lower_half(p)


cdef double poisson_one(u64 seed, double rate, long first) noexcept nogil:
    cdef double u, pk, cum, k
    cdef double smu, b, a, inv_alpha, v_r, loglam, big_u, v, us, lhs
    cdef u64 idx
    if rate < 10.0:
        u = stream_uniform(seed, <u64>first)
        pk = pexp(-rate)
        cum = pk
        k = 0.0
        while u > cum and pk > 0.0:
            k += 1.0
            pk = pk * rate / k
            cum += pk
        return k
    smu = sqrt(rate)
    b = 0.931 + 2.53 * smu
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    loglam = plog(rate)
    idx = <u64>first
    while True:
        big_u = stream_uniform(seed, idx) - 0.5
        v = stream_uniform(seed, idx + 1)
        idx += 2
        us = 0.5 - fabs(big_u)
        k = floor((2.0 * a / us + b) * big_u + rate + 0.43)
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        lhs = plog(v * inv_alpha / (a / (us * us) + b))
        if lhs <= k * loglam - rate - plgamma_int(k + 1.0):
            return k


def bits(seed, start, count):
    """The counter-based stream's raw 64-bit outputs [start, start+count)."""
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 st = <u64>start
    cdef Py_ssize_t m = count
    out_arr = np.empty(m, dtype=np.uint64)
    cdef u64[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = mix64(s + GOLDEN * (st + <u64>i + 1))
    return out_arr


def uniforms(seed, start, count):
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 st = <u64>start
    cdef Py_ssize_t m = count
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = to_uniform(mix64(s + GOLDEN * (st + <u64>i + 1)))
    return out_arr


def cell_uniform(seeds, index):
    cdef u64[::1] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef u64 idx = <u64>index
    cdef Py_ssize_t m = sd.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = stream_uniform(sd[i], idx)
    return out_arr


def vlog(x):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = plog(xs[i])
    return out_arr


def vexp(x):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = pexp(xs[i])
    return out_arr


def verfc(x):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = perfc(xs[i])
    return out_arr


def normal_quantile_vec(p):
    cdef double[::1] ps = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t m = ps.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = pquantile(ps[i])
    return out_arr


def poisson_draws(seeds, rates, first_index=0):
    """Poisson counts per cell stream: inversion below rate 10, PTRS above."""
    cdef u64[::1] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef double[::1] rt = np.ascontiguousarray(rates, dtype=np.float64)
    cdef long first = first_index
    cdef Py_ssize_t m = sd.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = poisson_one(sd[i], rt[i], first)
    return out_arr


_init_tables()
