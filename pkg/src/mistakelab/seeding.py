"""Deterministic randomness plumbing.

One master seed per experiment; every consumer derives its own named
substream so that, e.g., adversary labels never depend on how many random
draws a learner performed.  Derivation hashes the master seed together
with the stream labels, so traces are reproducible bit-for-bit from
(config, seed) alone.
"""

import hashlib
import random


def derive_seed(master_seed, *labels):
    """Derive a child seed from a master seed and a label path."""
    text = str(int(master_seed)) + "/" + "/".join(str(x) for x in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master_seed, *labels):
    """A `random.Random` seeded from `derive_seed(master_seed, *labels)`."""
    return random.Random(derive_seed(master_seed, *labels))
