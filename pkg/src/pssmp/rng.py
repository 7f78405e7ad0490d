"""Deterministic stream derivation.

All randomness in the package flows through counter-based Philox
generators keyed by ``(master seed, module id, replica index)``.  Streams
with distinct keys are independent, and the same key always reproduces
the same stream, so batch experiments can be replicated bit-exactly and
parallelized per replica without coordination.
"""

from __future__ import annotations

import numpy as np

# Stable module ids; never renumber, only append.
_MODULE_IDS = {
    "levy": 1,
    "lamperti": 2,
    "conditioned": 3,
    "passage": 4,
    "bessel": 5,
    "envelope": 6,
    "lil": 7,
    "harness": 8,
}


def stream(seed: int, module: str, replica: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, module, replica)``.

    Parameters
    ----------
    seed : int
        Master seed (64-bit).
    module : str
        One of the registered module names.
    replica : int
        Replica index; distinct replicas give independent streams.
    """
    if module not in _MODULE_IDS:
        raise KeyError(f"unknown module id {module!r}")
    ss = np.random.SeedSequence(
        entropy=int(seed) & (2**64 - 1),
        spawn_key=(_MODULE_IDS[module], int(replica)),
    )
    return np.random.Generator(np.random.Philox(ss))
