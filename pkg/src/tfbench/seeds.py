"""Seed derivation.

Every random stream in the pipeline comes from one root seed. A stream is
named by a tuple of labels (strings or ints); the derived seed is

    SeedSequence([root, *map(label_word, labels)]).generate_state(1, uint64)[0]

where ``label_word`` maps an int to itself and a string to its CRC-32. All
generators are numpy ``PCG64``.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def _label_word(label: str | int) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & MASK64
    return zlib.crc32(str(label).encode("utf-8"))


def derive_seed(root: int, *labels: str | int) -> int:
    """Derive a 64-bit seed for the stream named by ``labels``."""
    words = [int(root) & MASK64] + [_label_word(lab) for lab in labels]
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
