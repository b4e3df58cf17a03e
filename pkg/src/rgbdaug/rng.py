"""Seed derivation and deterministic random streams.

Every randomized stage of the pipeline draws from a PCG64 generator whose
seed is derived through ``numpy.random.SeedSequence`` spawn keys, so a
(global seed, job index, retry) triple always maps to the same stream
regardless of platform, process count, or execution order.
"""

from __future__ import annotations

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def derive_job_seed(global_seed: int, job_index: int) -> int:
    """Derive the 64-bit seed for one generation job.

    Stable across runs, platforms, and worker counts; distinct job indices
    give distinct seeds in practice (SeedSequence mixing).
    """
    ss = np.random.SeedSequence(entropy=global_seed & _U64, spawn_key=(job_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def derive_retry_seed(global_seed: int, job_index: int, retry: int) -> int:
    """Seed for the ``retry``-th culling retry of a job (retry 0 = first try)."""
    ss = np.random.SeedSequence(entropy=global_seed & _U64, spawn_key=(job_index, retry))
    return int(ss.generate_state(1, np.uint64)[0])


def derive_stream_seed(global_seed: int, tag: int) -> int:
    """Seed for a named auxiliary stream (source selection, balancing, ...)."""
    ss = np.random.SeedSequence(entropy=global_seed & _U64, spawn_key=(0x5EED, tag))
    return int(ss.generate_state(1, np.uint64)[0])


def make_generator(seed: int) -> np.random.Generator:
    """PCG64 generator for a derived 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _U64))


def hash_u32(*keys: int) -> int:
    """Small integer hash onto [0, 2^32); deterministic and order-sensitive.

    Used for per-pixel jitter patterns that must be reproducible without
    carrying generator state through the render loops.
    """
    x = 0x9E3779B97F4A7C15
    for k in keys:
        x = (x ^ (int(k) & _U64)) * 0xBF58476D1CE4E5B9 & _U64
        x ^= x >> 27
        x = x * 0x94D049BB133111EB & _U64
        x ^= x >> 31
    return x & 0xFFFFFFFF

def hash_u32_array(*keys) -> np.ndarray:
    """Vectorized hash_u32 over broadcastable integer arrays.

    Bit-for-bit identical to the scalar version for the same key tuple.
    """
    arrays = [np.asarray(k, dtype=np.int64).astype(np.uint64) for k in keys]
    shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
    x = np.full(shape, 0x9E3779B97F4A7C15, dtype=np.uint64)
    for a in arrays:
        x = (x ^ a) * np.uint64(0xBF58476D1CE4E5B9)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return (x & np.uint64(0xFFFFFFFF)).astype(np.uint32)
