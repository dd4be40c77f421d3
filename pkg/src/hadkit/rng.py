"""Deterministic per-module random streams derived from one pipeline seed."""

from __future__ import annotations

import hashlib
import random


def substream(seed: int, name: str) -> random.Random:
    """A Random whose state depends only on (seed, name).

    Every module draws from its own named stream, so adding randomness in one
    stage never perturbs another stage's draws.
    """
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
