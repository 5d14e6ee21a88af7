"""Hierarchical seeded random streams.

Every draw is addressed by ``(root seed, scope..., purpose, cell_id)`` and the
position inside that stream is the receiver index (UE id or REM point index).
Streams are consumed strictly in receiver order, so adding receivers at the end
or adding cells never changes the values already drawn for other links.
"""

from __future__ import annotations

import numpy as np

# Fixed purpose labels. Never renumber: that would change every seeded result.
PURPOSES = {
    "ue_position": 1,
    "ue_state": 2,
    "los": 3,
    "shadowing": 4,
    "o2i_spread": 5,
}

SCOPE_DROP = 0
SCOPE_REM = 1


class Streams:
    """Factory of independent ``numpy.random.Generator`` objects."""

    def __init__(self, seed: int, key: tuple = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)

    def child(self, *key) -> "Streams":
        return Streams(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self, purpose: str, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key + (PURPOSES[purpose], int(index)))
        return np.random.Generator(np.random.PCG64(seq))

    @classmethod
    def for_drop(cls, seed: int, drop: int) -> "Streams":
        return cls(seed, (SCOPE_DROP, drop))

    @classmethod
    def for_rem(cls, seed: int) -> "Streams":
        return cls(seed, (SCOPE_REM,))

    def __repr__(self):
        return f"Streams(seed={self.seed}, key={self.key})"


class LinkDraws:
    """Per-cell generators consumed row by row (one row per receiver).

    ``next_uniform(purpose, n)`` returns an ``(n, n_cells)`` array; repeated calls
    continue the same streams, which lets large maps be processed in chunks.
    """

    def __init__(self, streams: Streams, cell_ids):
        self.streams = streams
        self.cell_ids = [int(c) for c in cell_ids]
        self._gens = {}

    def _gen(self, purpose, cell_id):
        key = (purpose, cell_id)
        if key not in self._gens:
            self._gens[key] = self.streams.generator(purpose, cell_id)
        return self._gens[key]

    def next_uniform(self, purpose: str, n: int) -> np.ndarray:
        out = np.empty((n, len(self.cell_ids)))
        for j, cid in enumerate(self.cell_ids):
            out[:, j] = self._gen(purpose, cid).random(n)
        return out

    def next_normal(self, purpose: str, n: int) -> np.ndarray:
        out = np.empty((n, len(self.cell_ids)))
        for j, cid in enumerate(self.cell_ids):
            out[:, j] = self._gen(purpose, cid).standard_normal(n)
        return out
