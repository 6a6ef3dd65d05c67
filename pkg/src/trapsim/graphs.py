"""The three graph families: complete graphs, hypercubes, 2D tori.

Vertices are encoded as integer labels and never materialized as a global
list; every operation here is O(1) in the vertex count.  On the hypercube
the label is a bit mask of flipped spins, so label 0 is the all-(+1)
configuration that walks start from.  On the torus the label packs the two
coordinates of an L x L grid with L a power of two, which keeps wraparound
arithmetic to bit masking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("complete", "hypercube", "torus2d")

_TORUS_DX = np.array([1, -1, 0, 0], dtype=np.int64)
_TORUS_DY = np.array([0, 0, 1, -1], dtype=np.int64)
_TORUS_PACKED = (_TORUS_DX + 1) | ((_TORUS_DY + 1) << 32)


@dataclass(frozen=True)
class Topology:
    """Graph family plus its size parameter.

    complete: `size` = N vertices.
    hypercube: `size` = n, 2^n vertices of degree n.
    torus2d: `size` = n, side L = 2^n, 2^(2n) vertices of degree 4.
    """

    family: str
    size: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}")
        if self.family == "complete":
            if not (2 <= self.size <= 1 << 62):
                raise ValueError("complete graph needs 2 <= N <= 2^62")
        elif self.family == "hypercube":
            if not (1 <= self.size <= 62):
                raise ValueError("hypercube dimension must be in [1, 62]")
        else:
            if not (1 <= self.size <= 31):
                raise ValueError("torus exponent must be in [1, 31] (2^(2n) must fit 63 bits)")

    @property
    def side(self):
        if self.family != "torus2d":
            raise ValueError("side is defined for torus2d only")
        return 1 << self.size


def parse_topology(text):
    """Parse a "family:size" config string, e.g. "hypercube:20"."""
    try:
        family, _, size = text.partition(":")
        return Topology(family.strip(), int(size))
    except ValueError as exc:
        raise ValueError(f"bad topology string {text!r}: {exc}") from None


def vertex_count(top):
    if top.family == "complete":
        return top.size
    if top.family == "hypercube":
        return 1 << top.size
    return 1 << (2 * top.size)


def degree(top):
    if top.family == "complete":
        return top.size - 1
    if top.family == "hypercube":
        return top.size
    return 4


def origin(top):
    """The distinguished start vertex: label 0 in every family."""
    return 0


def pack_torus(top, x, y):
    return (int(y) << top.size) | int(x)


def unpack_torus(top, label):
    mask = top.side - 1
    return int(label) & mask, (int(label) >> top.size) & mask


def is_valid_vertex(top, label):
    return 0 <= int(label) < vertex_count(top)


def neighbors(top, v):
    """All neighbors of v as a list.  O(degree); meant for small-graph oracles."""
    v = int(v)
    if top.family == "complete":
        return [w for w in range(top.size) if w != v]
    if top.family == "hypercube":
        return [v ^ (1 << i) for i in range(top.size)]
    x, y = unpack_torus(top, v)
    lmask = top.side - 1
    return [
        pack_torus(top, (x + 1) & lmask, y),
        pack_torus(top, (x - 1) & lmask, y),
        pack_torus(top, x, (y + 1) & lmask),
        pack_torus(top, x, (y - 1) & lmask),
    ]


def sample_neighbor(top, v, rng):
    """Uniform neighbor of v; never v itself."""
    v = int(v)
    if top.family == "complete":
        w = int(rng.integers(0, top.size - 1))
        return w + 1 if w >= v else w
    if top.family == "hypercube":
        return v ^ (1 << int(rng.integers(0, top.size)))
    lmask = top.side - 1
    x, y = unpack_torus(top, v)
    d = int(rng.integers(0, 4))
    x = (x + int(_TORUS_DX[d])) & lmask
    y = (y + int(_TORUS_DY[d])) & lmask
    return pack_torus(top, x, y)


def popcount64(arr):
    """Bit population count on a uint64 array (SWAR reduction)."""
    x = np.asarray(arr, dtype=np.uint64)
    m1 = np.uint64(0x5555555555555555)
    m2 = np.uint64(0x3333333333333333)
    m4 = np.uint64(0x0F0F0F0F0F0F0F0F)
    h01 = np.uint64(0x0101010101010101)
    x = x - ((x >> np.uint64(1)) & m1)
    x = (x & m2) + ((x >> np.uint64(2)) & m2)
    x = (x + (x >> np.uint64(4))) & m4
    return ((x * h01) & np.uint64(0xFFFFFFFFFFFFFFFF)) >> np.uint64(56)


def distance(top, u, v):
    """Graph metric: 0/1 on complete graphs, Hamming on hypercubes,
    wraparound L1 on the torus."""
    u, v = int(u), int(v)
    if top.family == "complete":
        return 0 if u == v else 1
    if top.family == "hypercube":
        return int(popcount64(np.uint64(u ^ v)))
    ux, uy = unpack_torus(top, u)
    vx, vy = unpack_torus(top, v)
    L = top.side
    dx = abs(ux - vx)
    dy = abs(uy - vy)
    return min(dx, L - dx) + min(dy, L - dy)


def distance_array(top, u, labels):
    """Vectorized distance from a fixed vertex u to an array of labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if top.family == "complete":
        return (labels != int(u)).astype(np.int64)
    if top.family == "hypercube":
        return popcount64(labels.astype(np.uint64) ^ np.uint64(u)).astype(np.int64)
    L = top.side
    mask = L - 1
    ux, uy = unpack_torus(top, u)
    x = labels & mask
    y = (labels >> top.size) & mask
    dx = np.abs(x - ux)
    dy = np.abs(y - uy)
    return np.minimum(dx, L - dx) + np.minimum(dy, L - dy)


def random_vertices(top, count, rng):
    """Uniform labels, independent of each other (collisions allowed)."""
    return rng.integers(0, vertex_count(top), size=count, dtype=np.int64)


def path_block(top, start, n_steps, rng):
    """Successive positions of simple random walks, vectorized.

    `start` has shape (W,); the result has shape (W, n_steps) holding the
    positions after 1..n_steps steps of each walk.  All W walks advance with
    draws from the caller's generator in a fixed order, so results are
    reproducible for a given stream.
    """
    start = np.asarray(start, dtype=np.int64)
    W = start.shape[0]
    K = int(n_steps)
    if top.family == "hypercube":
        flips = np.int64(1) << rng.integers(0, top.size, size=(W, K),
                                            dtype=np.uint8).astype(np.int64)
        np.bitwise_xor.accumulate(flips, axis=1, out=flips)
        return start[:, None] ^ flips
    if top.family == "torus2d":
        d = rng.integers(0, 4, size=(W, K), dtype=np.uint8)
        # One cumulative sum for both coordinates: displacements are packed
        # as (dx+1) | (dy+1) << 32, so the running column count k+1 is the
        # bias to subtract from each half.
        cs = np.cumsum(_TORUS_PACKED[d], axis=1)
        bias = np.arange(1, K + 1, dtype=np.int64)
        mask = np.int64(top.side - 1)
        x = (start[:, None] & mask) + (cs & np.int64(0xFFFFFFFF)) - bias
        y = ((start[:, None] >> top.size) & mask) + (cs >> np.int64(32)) - bias
        return ((y & mask) << top.size) | (x & mask)
    # Complete graph: a uniform draw on [0, N-1) shifted past the current
    # position is exactly uniform over the N-1 non-current vertices.
    N = top.size
    pos = np.empty((W, K), dtype=np.int64)
    prev = start
    for k in range(K):
        c = rng.integers(0, N - 1, size=W, dtype=np.int64)
        c += c >= prev
        pos[:, k] = c
        prev = c
    return pos
