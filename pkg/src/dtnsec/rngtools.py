"""Deterministic RNG stream derivation.

Every stochastic component draws from its own named stream derived from the
run seed, so results are bit-reproducible across processes and unaffected by
PYTHONHASHSEED or by how much randomness other components consume.
"""
from __future__ import annotations

import hashlib
import random


def _key_bytes(parts: tuple) -> bytes:
    return "\x1f".join(str(p) for p in parts).encode("utf-8")


def derive_int(*parts) -> int:
    """Stable 64-bit integer from a tuple of ints/strings."""
    digest = hashlib.blake2b(_key_bytes(parts), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(*parts) -> random.Random:
    """Independent random.Random seeded from a named stream."""
    return random.Random(derive_int(*parts))


def hashed_index(n: int, *parts) -> int:
    """Uniform index in [0, n) as a pure function of the key.

    Used for forwarding decisions: the same decision situation yields the
    same draw in any counterfactual replay, regardless of what other
    decisions happened before it. 128-bit digest keeps modulo bias far
    below statistical visibility.
    """
    if n <= 0:
        raise ValueError("hashed_index needs n >= 1")
    digest = hashlib.blake2b(_key_bytes(parts), digest_size=16).digest()
    return int.from_bytes(digest, "big") % n
