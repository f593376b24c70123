"""Seed derivation.

Every random object is drawn from its own PCG64 stream. A stream is identified
by the user seed plus a tuple of integer keys, fed to
``numpy.random.SeedSequence(entropy=seed, spawn_key=keys)``. Text tags such as
``"xi"`` are turned into keys by reading their ASCII bytes as a little-endian
integer, so the stream for the sign vector of a transform sampled with seed 7
is ``SeedSequence(7, spawn_key=(tag("xi"),))``. Trial ``t`` of a Monte Carlo
run with seed ``s`` re-seeds from ``SeedSequence(s, spawn_key=(tag("trial"), t))``.
"""
from __future__ import annotations

import numpy as np

SCHEME = "pcg64-seedseq-tag-v1"


def tag(name: str) -> int:
    return int.from_bytes(name.encode("ascii"), "little")


def stream(seed: int, *keys) -> np.random.Generator:
    key = tuple(tag(k) if isinstance(k, str) else int(k) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def trial_seed(seed: int, trial: int) -> int:
    """A 64-bit seed for trial ``trial`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(tag("trial"), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def signs(rng: np.random.Generator, size) -> np.ndarray:
    """Fair +-1 entries as int8."""
    return (rng.integers(0, 2, size=size, dtype=np.int8) * 2 - 1).astype(np.int8)
