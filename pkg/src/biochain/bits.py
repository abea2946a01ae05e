"""Bit-vector helpers shared across the package.

Bit vectors are 1-d numpy uint8 arrays containing only 0 and 1. Their
serialized form is an ASCII string of '0'/'1' characters, leftmost
character = index 0.
"""
from __future__ import annotations

import os

import numpy as np


def as_bits(values) -> np.ndarray:
    """Coerce to a 1-d uint8 array of 0/1, validating the contents."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d bit vector, got shape {arr.shape}")
    if arr.size and int(arr.max()) > 1:
        raise ValueError("bit vectors may only contain 0 and 1")
    return arr


def to_bitstring(bits) -> str:
    arr = as_bits(bits)
    return arr.tobytes().translate(_BIT_TO_CHAR).decode("ascii")


def from_bitstring(text: str) -> np.ndarray:
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"not a non-empty '0'/'1' string: {text!r}")
    return (np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")).astype(np.uint8)


_BIT_TO_CHAR = bytes.maketrans(bytes([0, 1]), b"01")


def random_bits(rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw `count` independent fair bits from a seeded generator."""
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def os_random_bits(count: int) -> np.ndarray:
    """Draw bits from operating-system entropy (for production commits)."""
    raw = np.frombuffer(os.urandom((count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw)[:count].astype(np.uint8)
