"""Counter-based uniform stream: definition and scalar reference.

The generator is the SplitMix64 finalizer applied to an affine counter,
so every draw is a pure function of ``(seed, index)``:

    bits(seed, i)    = mix64(seed + GOLDEN * (i + 1))    (mod 2^64)
    uniform(seed, i) = ((bits >> 12) + 0.5) * 2^-52      in (0, 1)

Seeds for independent substreams (replicates, grid cells, panel cells) are
derived by folding integer keys through the same finalizer:

    derive(seed, k_1, ..., k_d):
        s = seed
        for k in keys:
            s = mix64(s + GOLDEN)
            s = s XOR mix64(k * GOLDEN + SALT)
        return mix64(s)

Both kernel backends implement exactly these formulas, which makes streams
reproducible bit-for-bit across platforms and backends.  The uniform map
keeps values inside [2^-53, 1 - 2^-53], safely away from 0 and 1.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SALT = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
U53 = 2.0 ** -52


def mix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood 2014)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def bits(seed: int, index: int) -> int:
    """The ``index``-th 64-bit output of the stream rooted at ``seed``."""
    return mix64((seed + GOLDEN * (index + 1)) & MASK64)


def uniform(seed: int, index: int) -> float:
    """The ``index``-th uniform draw of the stream rooted at ``seed``."""
    return ((bits(seed, index) >> 12) + 0.5) * U53


def derive(seed: int, *keys: int) -> int:
    """Derive an independent substream seed from integer keys."""
    s = seed & MASK64
    for k in keys:
        s = mix64((s + GOLDEN) & MASK64)
        s ^= mix64((k * GOLDEN + SALT) & MASK64)
    return mix64(s)
