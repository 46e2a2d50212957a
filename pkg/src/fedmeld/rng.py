"""Deterministic random streams.

Every random draw in a run descends from one master seed through named
substreams, so a component can be re-executed in isolation and still see
the same values it would have seen inside the full run.  Stream names are
hashed with SHA-256 rather than Python's salted ``hash`` so the mapping is
stable across interpreter invocations.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _name_words(names: tuple) -> list[int]:
    text = "/".join(str(n) for n in names)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]


def substream(master_seed: int, *names: str | int) -> np.random.Generator:
    """Return a generator for the substream identified by ``names``.

    Distinct name tuples yield statistically independent streams; the same
    tuple always yields the same stream.
    """
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, *_name_words(names)])
    return np.random.default_rng(seq)
