"""Deterministic seed derivation.

Every source of randomness in the toolkit flows from explicit integer seeds.
Sub-seeds (per tree, per tuning candidate, per fold) are derived by hashing
the base seed together with a label, never by drawing from a shared stream,
so results are independent of evaluation order and worker count.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(base: int, *parts: object) -> int:
    """Derive a 64-bit sub-seed from a base seed and a label tuple."""
    key = repr((int(base) & _MASK64,) + parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (next_state, output).

    Kept bit-identical to the C implementation in the compiled kernels so
    either backend can reproduce the other's stream.
    """
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z
