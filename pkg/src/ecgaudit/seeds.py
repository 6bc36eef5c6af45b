"""Deterministic seed derivation.

All randomness in a run flows from one root seed. Every randomized stage
derives its own child seed as SHA-256 over ``"<root>:<stage name>"``,
so adding or reordering stages never perturbs the others, and the same
(root, name) pair yields the same child on every platform.
"""

import hashlib


def child_seed(root_seed: int, name: str) -> int:
    """Derive a stable 63-bit child seed for a named stage."""
    digest = hashlib.sha256(f"{root_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
