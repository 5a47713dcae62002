"""
Counter-based pseudo-random source shared by every seeded operation.

Nothing here keeps state: each draw is a pure function of (seed, tag, key, counter), so any
table entry, link list or sweep order can be regenerated in isolation and in any language.
"""

import numpy as np
import numpy.typing as npt

MASK64 = (1 << 64) - 1

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB

UNIT_SCALE = 53
"table values carry 53 random bits: value == bits / 2**53"

LINK_TAG = 1 << 62
"stream used by random-mode link selection, keyed on the 1-based gene"

ORDER_TAG = 1 << 63
"stream used by the community sweep order, keyed on the aggregation level"


def mix64(z: int) -> int:
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIER_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIER_2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    "vectorized mix64; uint64 arithmetic wraps, which is the behaviour we want"
    z = np.asarray(z, dtype=np.uint64)

    with np.errstate(over="ignore"):
        z = z + np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULTIPLIER_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULTIPLIER_2)

    return z ^ (z >> np.uint64(31))


def unit_bits(z: int) -> int:
    return z >> (64 - UNIT_SCALE)


def unit_from_bits(z: int) -> float:
    "map a 64-bit word onto [0, 1) using its top 53 bits"
    return unit_bits(z) / 2**UNIT_SCALE


def stream_draw(seed: int, tag: int, key: int, counter: int) -> int:
    return mix64((seed & MASK64) ^ mix64(tag | (key << 32) | counter))


def shuffled_order(size: int, seed: int, level: int) -> list[int]:
    "Fisher-Yates permutation of range(size) driven by the ORDER_TAG stream"
    order = list(range(size))

    for t in range(size - 1):
        r = stream_draw(seed, ORDER_TAG, level, t)
        j = t + r % (size - t)
        order[t], order[j] = order[j], order[t]

    return order
