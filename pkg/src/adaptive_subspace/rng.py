"""Counter-based random streams keyed by ``(master_seed, stream_id)``.

Every Monte Carlo trial owns one stream, so trials can be evaluated in any
order or on any worker and still produce the same bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1

# stream-id layout: purpose (16 bits) | grid point (16 bits) | trial (32 bits)
CALIBRATE = 0  # also used by Pfa sweeps, which perturb the calibration data
DETECT = 1
VALIDATE = 3


def stream_id(purpose: int, point: int, trial: int) -> int:
    if not (0 <= purpose < 1 << 16 and 0 <= point < 1 << 16 and 0 <= trial < 1 << 32):
        raise ValueError(f"stream id out of range: {(purpose, point, trial)}")
    return (purpose << 48) | (point << 32) | trial


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed & _U64, self.stream_id & _U64], dtype=np.uint64)
        counter = np.array([self.counter & _U64, 0, 0, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if hasattr(rng, "generator"):
        return rng.generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
