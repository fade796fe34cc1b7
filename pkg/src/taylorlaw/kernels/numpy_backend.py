"""Vectorised NumPy implementation of the sampling kernels.

Always importable; selected as fallback when the compiled extension is
missing.  Every function mirrors the scalar reference operations in
:mod:`taylorlaw.numerics` and :mod:`taylorlaw.kernels.stream` step for
step, so outputs are bit-identical to the compiled backend.
"""

from __future__ import annotations

import math

import numpy as np

from .. import numerics as nm
from . import stream

name = "numpy"

_GOLDEN = np.uint64(stream.GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -52

# log(k!) for arguments z = 1..19 of lgamma, built with the scalar
# reference so both backends share the exact table values.
_LGAMMA_TABLE = np.array(
    [0.0, 0.0, 0.0]
    + [nm.portable_log(float(math.factorial(n - 1))) for n in range(3, 20)]
)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def bits(seed: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    return _mix64(np.uint64(seed & stream.MASK64) + idx * _GOLDEN)


def _to_uniform(b: np.ndarray) -> np.ndarray:
    return ((b >> np.uint64(12)).astype(np.float64) + 0.5) * _U53


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    return _to_uniform(bits(seed, start, count))


def cell_uniform(seeds: np.ndarray, index: int) -> np.ndarray:
    """Draw the ``index``-th uniform of every per-cell stream."""
    step = np.uint64(((index + 1) * stream.GOLDEN) & stream.MASK64)
    return _to_uniform(_mix64(seeds + step))


def vlog(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        m, e = np.frexp(x)
        adjust = m < nm.SQRT_HALF
        m = np.where(adjust, m * 2.0, m)
        e = np.where(adjust, e - 1, e).astype(np.float64)
        s = (m - 1.0) / (m + 1.0)
        z = s * s
        p = z * (1.0 / 3.0 + z * (1.0 / 5.0 + z * (1.0 / 7.0 + z * (
            1.0 / 9.0 + z * (1.0 / 11.0 + z * (1.0 / 13.0 + z * (
                1.0 / 15.0 + z * (1.0 / 17.0 + z * (1.0 / 19.0 + z * (1.0 / 21.0))))))))))
        out = e * nm.LN2_LO + (2.0 * s) * (1.0 + p) + e * nm.LN2_HI
        # Mirror the scalar/compiled lanes outside the domain too.
        return np.where(x > 0.0, out, -np.inf)


_EXP_C = nm._EXP_COEF


def vexp(x: np.ndarray) -> np.ndarray:
    xx = np.clip(x, -745.2, 709.782712893384)
    k = np.floor(xx * nm.INV_LN2 + 0.5)
    r = (xx - k * nm.LN2_HI) - k * nm.LN2_LO
    p = np.full_like(r, _EXP_C[12])
    for c in (
        _EXP_C[11], _EXP_C[10], _EXP_C[9], _EXP_C[8], _EXP_C[7], _EXP_C[6],
        _EXP_C[5], _EXP_C[4], _EXP_C[3], _EXP_C[2], _EXP_C[1], _EXP_C[0],
    ):
        p = c + r * p
    er = 1.0 + r * (1.0 + r * p)
    out = np.ldexp(er, k.astype(np.int32))
    out = np.where(x > 709.782712893384, np.inf, out)
    return np.where(x < -745.2, 0.0, out)


def _erf_series(ax: np.ndarray) -> np.ndarray:
    z = ax * ax
    g = ax.copy()
    s = ax.copy()
    for n in range(1, 30):
        g = g * (-z) / n
        s = s + g / (2 * n + 1)
    return nm.TWO_OVER_SQRT_PI * s


def _erfc_cf(ax: np.ndarray) -> np.ndarray:
    f = ax.copy()
    for k in range(64, 0, -1):
        f = ax + (0.5 * k) / f
    return vexp(-ax * ax) * nm.INV_SQRT_PI / f


def verfc(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    e = np.empty_like(ax)
    small = ax < 1.5
    if small.any():
        e[small] = 1.0 - _erf_series(ax[small])
    big = ~small
    if big.any():
        e[big] = _erfc_cf(ax[big])
    return np.where(x >= 0.0, e, 2.0 - e)


def _vlgamma_int(z: np.ndarray) -> np.ndarray:
    """lgamma on integer-valued arguments >= 1 (Poisson acceptance path)."""
    out = np.empty_like(z)
    small = z <= 19.0
    if small.any():
        out[small] = _LGAMMA_TABLE[z[small].astype(np.int64)]
    big = ~small
    if big.any():
        zz = z[big]
        w = 1.0 / (zz * zz)
        series = np.full_like(zz, nm._STIRLING[4])
        for c in (nm._STIRLING[3], nm._STIRLING[2], nm._STIRLING[1], nm._STIRLING[0]):
            series = c + w * series
        series = series / zz
        out[big] = (zz - 0.5) * vlog(zz) - zz + nm.HALF_LOG_TWO_PI + series
    return out


_A = nm._ACK_A
_B = nm._ACK_B
_C = nm._ACK_C
_D = nm._ACK_D


def normal_quantile_vec(p: np.ndarray) -> np.ndarray:
    """Vectorised standard-normal quantile; assumes 0 < p < 1 elementwise."""
    upper = p > 0.5
    pl = np.where(upper, 1.0 - p, p)
    x = np.empty_like(pl)
    tail = pl < nm._ACK_SPLIT
    if tail.any():
        q = np.sqrt(-2.0 * vlog(pl[tail]))
        x[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q
                    + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    mid = ~tail
    if mid.any():
        q = pl[mid] - 0.5
        r = q * q
        x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r
                   + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    cdf = 0.5 * verfc(-x * nm.INV_SQRT2)
    pdf = nm.INV_SQRT_TWO_PI * vexp(-0.5 * x * x)
    x = x - (cdf - pl) / pdf
    return np.where(upper, -x, x)


def _poisson_inversion(seeds: np.ndarray, rates: np.ndarray, first: int) -> np.ndarray:
    u = cell_uniform(seeds, first)
    pk = vexp(-rates)
    cum = pk.copy()
    k = np.zeros_like(rates)
    active = (u > cum) & (pk > 0.0)
    while active.any():
        k[active] += 1.0
        pk[active] = pk[active] * rates[active] / k[active]
        cum[active] += pk[active]
        active = (u > cum) & (pk > 0.0)
    return k


def _poisson_ptrs(seeds: np.ndarray, rates: np.ndarray, first: int) -> np.ndarray:
    # Hoermann's transformed rejection with squeeze (PTRS), exact for
    # rate >= 10; each round consumes the next two stream uniforms.
    smu = np.sqrt(rates)
    b = 0.931 + 2.53 * smu
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    loglam = vlog(rates)
    out = np.zeros_like(rates)
    pending = np.arange(rates.size)
    idx = first
    while pending.size:
        sd = seeds[pending]
        mu = rates[pending]
        u = cell_uniform(sd, idx) - 0.5
        v = cell_uniform(sd, idx + 1)
        idx += 2
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a[pending] / us + b[pending]) * u + mu + 0.43)
        accept = (us >= 0.07) & (v <= v_r[pending])
        hard_reject = (k < 0.0) | ((us < 0.013) & (v > us))
        check = ~accept & ~hard_reject
        if check.any():
            ci = np.flatnonzero(check)
            lhs = vlog(v[ci] * inv_alpha[pending[ci]]
                       / (a[pending[ci]] / (us[ci] * us[ci]) + b[pending[ci]]))
            rhs = k[ci] * loglam[pending[ci]] - mu[ci] - _vlgamma_int(k[ci] + 1.0)
            acc2 = lhs <= rhs
            accept[ci[acc2]] = True
        out[pending[accept]] = k[accept]
        pending = pending[~accept]
    return out


def poisson_draws(seeds: np.ndarray, rates: np.ndarray, first_index: int = 0) -> np.ndarray:
    """Poisson counts, one per cell stream, starting at ``first_index``.

    Inversion below rate 10 (one uniform), PTRS above (two per round).
    """
    out = np.empty_like(rates)
    small = rates < 10.0
    if small.any():
        out[small] = _poisson_inversion(seeds[small], rates[small], first_index)
    big = ~small
    if big.any():
        out[big] = _poisson_ptrs(seeds[big], rates[big], first_index)
    return out
