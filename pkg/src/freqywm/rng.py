"""Named, independently reproducible random streams derived from one seed."""

from __future__ import annotations

import zlib

import numpy as np

# Stream names used across the package.  Each consumer draws from its own
# stream so that, e.g., changing the selection strategy never shifts the
# insertion positions chosen for the same seed.
SECRET = "secret"
SELECTION = "selection"
PLACEMENT = "placement"
ATTACK = "attack"
SYNTH = "synth"


def substream(seed: int | None, name: str, *path: int) -> np.random.Generator:
    """Return a generator for stream ``name`` (optionally nested by ``path``).

    ``seed=None`` yields a generator seeded from OS entropy.
    """
    if seed is None:
        return np.random.default_rng()
    key = (zlib.crc32(name.encode("utf-8")), *path)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def child_seed(seed: int | None, name: str, *path: int) -> int | None:
    """Derive an integer seed for a nested component (``None`` stays ``None``)."""
    if seed is None:
        return None
    return int(substream(seed, name, *path).integers(0, 2**63 - 1))
