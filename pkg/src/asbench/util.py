"""Shared helpers: error types, deterministic seed derivation, midranks."""
from __future__ import annotations

import hashlib

import numpy as np


class DataError(ValueError):
    """Raised when input data (archive rows, coverage, suites) is invalid."""


class ConfigError(ValueError):
    """Raised when a configuration value or file is invalid."""


def derive_seed(*parts) -> int:
    """Derive a stable 63-bit seed from a sequence of ints/strings.

    Hash-based so that independently seeded components (runs, folds,
    instances) never collide by accident and results are reproducible
    across platforms and processes.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big") >> 1


def midranks(values) -> np.ndarray:
    """Ranks 1..n with ties sharing the average of their covered positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks
