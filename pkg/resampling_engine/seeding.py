"""
Seed derivation for independent, order-free RNG streams.
"""
import hashlib


def derive_seed(*parts) -> int:
    """32-bit seed from the SHA-256 of the joined parts."""
    key = "|".join(str(p) for p in parts)
    return int(hashlib.sha256(key.encode()).hexdigest()[:8], 16)
