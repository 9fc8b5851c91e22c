"""Counter-based pseudo-random streams built on SplitMix64.

A stream is a single 64-bit unsigned state. Advancing the stream adds the
64-bit golden-ratio constant; each draw is the SplitMix64 finalizer applied
to the advanced state. Because the state after k draws is just
``state0 + k * GOLDEN (mod 2**64)``, a stream can be advanced by any number
of draws in O(1), and a block of draws is a pure elementwise function of a
counter range. That property is what lets the vectorized numpy kernels and
the compiled loop kernels consume the exact same sequence (see _kernels.py).

Independent streams are derived from a (master_seed, index) pair:

    derive_stream(m, i) = finalize((m XOR i*GOLDEN) + GOLDEN)

i.e. one SplitMix64 step applied to the XOR-combined seed. For index 0 and
master seed 0 this reproduces the published SplitMix64 test vector
0xE220A8397B1DCDAF.

All functions here are scalar, exact (arbitrary-precision ints masked to 64
bits) and dependency-free; hot loops use the mirrored kernels instead.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53; (x >> 11) * DOUBLE_UNIT is the usual uint64 -> [0, 1) double map.
DOUBLE_UNIT = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 output finalizer (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def next_u64(state: int) -> tuple[int, int]:
    """Advance the stream one step; return (new_state, 64-bit output)."""
    state = (state + GOLDEN) & MASK64
    return state, mix64(state)


def advance(state: int, draws: int) -> int:
    """State after consuming `draws` outputs, in O(1)."""
    return (state + draws * GOLDEN) & MASK64


def derive_stream(master_seed: int, index: int) -> int:
    """Derive the initial state of sub-stream `index` from a master seed.

    Distinct indices give streams with independent-looking output; the
    derivation is stable across runs and platforms. (master 0, index 0)
    maps to 0xE220A8397B1DCDAF, the first output of SplitMix64 from seed 0.
    """
    mixed = (master_seed ^ ((index * GOLDEN) & MASK64)) & MASK64
    return next_u64(mixed)[1]


def uniform(state: int) -> tuple[int, float]:
    """One double in [0, 1)."""
    state, z = next_u64(state)
    return state, (z >> 11) * DOUBLE_UNIT


def uniform_open(state: int) -> tuple[int, float]:
    """One double in (0, 1]; safe as a log() argument."""
    state, z = next_u64(state)
    return state, ((z >> 11) + 1) * DOUBLE_UNIT


def normal(state: int) -> tuple[int, float]:
    """One standard normal via Box-Muller; consumes exactly two draws."""
    state, u1 = uniform_open(state)
    state, u2 = uniform_open(state)
    return state, math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
