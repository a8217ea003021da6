"""Counter-addressable uniform streams for reproducible Monte Carlo.

Every value is a pure function of (seed, absolute position), so a run can be
partitioned across workers or resumed at any index without changing a single
draw. Positions are in units of one double; Philox advances by blocks of four
outputs, so addressing skips to the containing block and discards the
remainder.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox


def uniforms_at(seed: int, position: int, count: int) -> np.ndarray:
    """Uniform(0,1] values occupying absolute positions [position, position+count)."""
    if position < 0 or count < 0:
        raise ValueError("position and count must be nonnegative")
    bit_gen = Philox(key=seed)
    block, skip = divmod(position, 4)
    if block:
        bit_gen.advance(block)
    raw = Generator(bit_gen).random(skip + count)[skip:]
    # numpy yields [0,1); flip to (0,1] so survival-probability draws stay positive.
    return 1.0 - raw


class SeedStream:
    """A cursor over the (seed, position) uniform lattice.

    ``take``/``block`` consume values sequentially from the cursor;
    ``at`` returns an independent cursor at an absolute position.
    """

    def __init__(self, seed: int, position: int = 0):
        self.seed = int(seed)
        self.position = int(position)

    def take(self, count: int) -> np.ndarray:
        out = uniforms_at(self.seed, self.position, count)
        self.position += count
        return out

    def block(self, count: int, channels: int) -> np.ndarray:
        """Next ``count`` draws of ``channels`` uniforms each, shape (count, channels)."""
        return self.take(count * channels).reshape(count, channels)

    def uniform(self) -> float:
        return float(self.take(1)[0])

    def at(self, position: int) -> "SeedStream":
        return SeedStream(self.seed, position)

    def __repr__(self) -> str:
        return f"SeedStream(seed={self.seed}, position={self.position})"
