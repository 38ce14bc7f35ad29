"""Deterministic random-stream derivation.

Every stochastic routine in this package draws from a stream derived from a
single master seed plus a tuple of names/indices (purpose, area, iteration,
replicate, ...).  Streams are independent of scheduling, so results are
identical whether areas are processed serially or in parallel.
"""

import hashlib

import numpy as np

__all__ = ["stream", "child_seed"]


def _entropy_words(seed, keys):
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("ascii"))
    for k in keys:
        h.update(b"\x1f")
        h.update(str(k).encode("utf-8"))
    return np.frombuffer(h.digest(), dtype=np.uint32).tolist()


def stream(seed, *keys):
    """Return a ``numpy.random.Generator`` for the sub-stream named by keys.

    Parameters
    ----------
    seed : int
        Master seed.
    *keys : str or int
        Stream name, e.g. ``("estep", em_iter, area_index)``.  The same
        (seed, keys) always yields the same generator state.
    """
    return np.random.default_rng(np.random.SeedSequence(_entropy_words(seed, keys)))


def child_seed(seed, *keys):
    """Derive an integer seed for a nested run (e.g. a per-replicate fit)."""
    return int(stream(seed, *keys).integers(0, 2**63 - 1))
