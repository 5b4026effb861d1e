"""Counter-based random streams derived from a single integer seed.

``stream(seed, "split")`` and ``stream(seed, "dropout")`` are independent
Philox generators keyed by ``SeedSequence([seed, crc32(name), ...])``. A
stream depends only on its own key, so adding runs or streams never
perturbs existing ones.
"""
import zlib

import numpy as np


def _key(part):
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"seed components must be nonnegative, got {part}")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed, *names) -> np.random.Generator:
    entropy = [_key(seed)] + [_key(p) for p in names]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
