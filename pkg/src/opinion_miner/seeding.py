"""Seeded RNG plumbing shared by every randomized stage.

All randomness in this package flows through numpy Generator objects backed
by PCG64, so streams are reproducible across platforms and numpy releases
that keep the PCG64 bit stream stable (all of them, per numpy's policy).
Sub-stage seeds are derived by hashing rather than by drawing from a parent
generator, so adding a stage never shifts the streams of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "make_rng"]


def derive_seed(*parts: int | str) -> int:
    """Stable 64-bit seed from a tuple of ints and strings.

    Uses SHA-256, not hash(), so results do not depend on
    PYTHONHASHSEED or the platform.
    """
    h = hashlib.sha256()
    for part in parts:
        if not isinstance(part, (int, str)):
            raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    """The project-wide generator construction."""
    return np.random.Generator(np.random.PCG64(seed))
