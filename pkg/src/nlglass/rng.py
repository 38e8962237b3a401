"""Counter-based random streams for reproducible quenched disorder.

Each disorder sample gets its own Philox stream keyed by (seed, sample_index),
so a sample's standard normals are bit-identical no matter in which order, in
which process, or how many times they are drawn. Bond b always consumes the
b-th normal of its sample's stream.
"""

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def normal_stream(seed: int, sample_index: int, n: int) -> np.ndarray:
    """n standard normals for one (seed, sample_index) key, bit-reproducible."""
    if sample_index < 0:
        raise ValueError("sample_index must be >= 0")
    gen = np.random.Generator(_philox(seed, sample_index))
    return gen.standard_normal(n)


def normal_block(seed: int, sample_indices, n: int) -> np.ndarray:
    """Stack of normal_stream draws, shape (n, len(sample_indices)).

    Column k is the stream for sample_indices[k]; identical to calling
    normal_stream per index.
    """
    out = np.empty((n, len(sample_indices)), dtype=np.float64)
    for k, idx in enumerate(sample_indices):
        out[:, k] = normal_stream(seed, idx, n)
    return out


def uniform_stream(seed: int, sample_index: int, n: int) -> np.ndarray:
    """n uniforms in [0,1) for one key; independent of normal_stream draws."""
    gen = np.random.Generator(_philox(seed, sample_index, lane=1))
    return gen.random(n)


def generator(seed: int, sample_index: int, lane: int = 0) -> np.random.Generator:
    """A dedicated Generator for one key; lanes separate independent uses."""
    return np.random.Generator(_philox(seed, sample_index, lane))


def _philox(seed: int, sample_index: int, lane: int = 0) -> np.random.Philox:
    # Distinct keys give statistically independent Philox streams; the lane
    # lands in the high counter word so lanes never overlap within a key.
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(sample_index)], dtype=np.uint64)
    counter = np.array([0, 0, 0, lane], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)
