"""Seeded random substreams.

A stream is identified by ``(master_seed, substream_id)``.  The pair is
fed to :class:`numpy.random.SeedSequence` as entropy plus spawn key, so
different ids give independent PCG64 streams and the same pair always
replays the same draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

SubstreamId = Union[int, tuple]


def generator_id() -> str:
    return f"numpy.random.PCG64/SeedSequence(seed, spawn_key=(phase,)), pass i reads draws [i*n,(i+1)*n) numpy=={np.__version__}"


@dataclass
class RngStream:
    master_seed: int
    substream_id: SubstreamId = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = self.substream_id if isinstance(self.substream_id, tuple) else (self.substream_id,)
        seq = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=tuple(int(x) for x in key))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        # bit-identical to n successive uniform() calls
        return self._gen.random(n)

    def substream(self, *key: int) -> "RngStream":
        return RngStream(self.master_seed, tuple(key))
