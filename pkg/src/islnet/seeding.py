"""Deterministic sub-seed derivation: one root seed drives everything."""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *labels) -> int:
    """Stable 63-bit sub-seed from a root seed and a label path."""
    h = hashlib.sha256(str(int(root)).encode())
    for label in labels:
        h.update(b"|")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "big") >> 1
