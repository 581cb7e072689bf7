"""Counter-based random streams for reproducible parallel Monte Carlo.

Every sampled path of every experiment draws from its own Philox stream
keyed by ``(master_seed, stream_index)``.  Philox is counter-based, so the
stream a path sees depends only on that key pair, never on scheduling or
worker count.  Stream indices are partitioned as ``block * 2**32 + i`` so
that distinct stages of one experiment (per-epsilon blocks, validation
suites, ...) cannot collide as long as each stage uses fewer than 2**32
paths.
"""

from __future__ import annotations

import numpy as np

#: paths per block; stream index = block * BLOCK + path_index
BLOCK = 2**32


def stream(master_seed: int, index: int) -> np.random.Generator:
    """Return the Generator for stream ``index`` under ``master_seed``."""
    key = np.array([np.uint64(master_seed % 2**64), np.uint64(index % 2**64)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def path_stream(master_seed: int, block: int, path_index: int) -> np.random.Generator:
    """Stream for path ``path_index`` of stage ``block`` of one experiment."""
    if not 0 <= path_index < BLOCK:
        raise ValueError(f"path_index {path_index} outside block capacity")
    return stream(master_seed, block * BLOCK + path_index)
