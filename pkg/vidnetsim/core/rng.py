"""Seeded, stream-separated random numbers.

Each stochastic model instance owns one stream identified by (seed, stream_id). The
stream is a PCG64 generator whose SeedSequence carries a 64-bit BLAKE2b digest of the
stream id as its spawn key, so adding a stream never shifts another stream's draws.
Doubles are fetched from the generator in fixed blocks and handed out one at a time;
the sequence depends only on (seed, stream_id).
"""

import hashlib

import numpy as np

BLOCK_SIZE = 4096
MAX_SEED = 2**64


def stream_key(stream_id: str) -> int:
    digest = hashlib.blake2b(stream_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    def __init__(self, seed: int, stream_id: str):
        if not 0 <= seed < MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.stream_id = stream_id
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_key(stream_id),))
        self._generator = np.random.Generator(np.random.PCG64(sequence))
        self._block: list = []
        self._pos = 0
        self.draws = 0

    def uniform(self) -> float:
        """Next value in [0, 1)."""
        if self._pos == len(self._block):
            self._block = self._generator.random(BLOCK_SIZE).tolist()
            self._pos = 0
        value = self._block[self._pos]
        self._pos += 1
        self.draws += 1
        return value

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id!r}, draws={self.draws})"


def rng_uniform(stream: RngStream) -> float:
    return stream.uniform()
