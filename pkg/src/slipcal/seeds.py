"""Root-seed derivation: every random stream is keyed by a stage name and coordinates."""

from __future__ import annotations

import hashlib
from enum import Enum


def _token(part) -> str:
    if isinstance(part, Enum):
        part = part.value
    if isinstance(part, float) and part.is_integer():
        part = int(part)
    return f"{type(part).__name__}:{part}"


def derive_seed(root: int, *parts) -> int:
    """Stable 63-bit seed from ``root`` and any hashable labels (stage name, cell, row)."""
    text = "|".join([str(int(root))] + [_token(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1
