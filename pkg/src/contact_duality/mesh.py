"""Simplicial machinery on tensor-product lattices.

Every box cell of the lattice splits into n! congruent simplices, one per
ordering of the local coordinates; the ordering planes x_j = x_k of any
cell with equal interval indices are then exact unions of simplex facets.
That alignment is what lets the three dual Hamiltonians be assembled on
the same footing: bulk kinetic terms are ordinary piecewise-linear
stiffness sums (which reduce to the standard second-order Laplacian
stencil at interior vertices), and every contact term is a facet mass
term on coincidence facets.

Index conventions: a lattice with P vertex coordinates per axis has
M = P - 1 cells per axis; cells and vertices are integer tuples; an
element is a (cell, insertion order) pair, where the insertion order
``seq`` lists the axes in the order their local coordinate increases
first, carving out the region z_{seq[0]} >= ... >= z_{seq[n-1]}.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .permutations import Permutation


def uniform_lattice(length: float, points: int, offset: float = 0.0) -> np.ndarray:
    """Vertices at i h, i = 0..N, including both walls."""
    return offset + np.linspace(0.0, length, points + 1)


def staggered_lattice(length: float, points: int, offset: float = 0.0) -> np.ndarray:
    """Wall vertices plus interior vertices at (i + 1/2) h.

    Interior spacing is h = length / points; the wall cells have width
    h / 2, so coincidence planes never pass through interior vertex
    layers at distance below h.
    """
    h = length / points
    inner = (np.arange(points) + 0.5) * h
    return offset + np.concatenate(([0.0], inner, [length]))


def weakly_descending_tuples(points: int, n: int) -> np.ndarray:
    """All weakly descending index tuples over range(points), sorted rows."""
    combos = itertools.combinations_with_replacement(range(points - 1, -1, -1), n)
    arr = np.asarray([c for c in combos], dtype=np.int64)
    keys = _encode(arr, points)
    return arr[np.argsort(keys)]


def _encode(idx: np.ndarray, base: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    flat = idx.reshape(-1, idx.shape[-1])
    out = np.zeros(flat.shape[0], dtype=np.int64)
    for k in range(flat.shape[1]):
        out = out * base + flat[:, k]
    return out.reshape(idx.shape[:-1])


class DofTable:
    """Rank lookup for a fixed set of vertex index tuples."""

    def __init__(self, tuples: np.ndarray, base: int):
        self.tuples = np.asarray(tuples, dtype=np.int64)
        self.base = base
        self._keys = _encode(self.tuples, base)
        self._order = np.argsort(self._keys)
        self._sorted = self._keys[self._order]

    @property
    def size(self) -> int:
        return self.tuples.shape[0]

    def rank(self, idx: np.ndarray) -> np.ndarray:
        keys = _encode(idx, self.base)
        pos = np.clip(np.searchsorted(self._sorted, keys), 0, self._sorted.size - 1)
        if not np.all(self._sorted[pos] == keys):
            raise KeyError("tuple not in dof table")
        return self._order[pos]

    def contains(self, idx: np.ndarray) -> np.ndarray:
        keys = _encode(idx, self.base)
        pos = np.clip(np.searchsorted(self._sorted, keys), 0, self._sorted.size - 1)
        return self._sorted[pos] == keys


@lru_cache(maxsize=None)
def _vertex_offsets(seq: tuple) -> np.ndarray:
    """Vertex index offsets of the simplex for an insertion order."""
    n = len(seq)
    offs = np.zeros((n + 1, n), dtype=np.int64)
    for m, axis in enumerate(seq):
        offs[m + 1] = offs[m]
        offs[m + 1, axis] += 1
    return offs


def local_matrices(seq: tuple, lengths: np.ndarray):
    """Volume, lumped-mass share, and stiffness of one element.

    lengths are the per-axis cell widths; stiffness entries are
    vol * grad(lambda_p) . grad(lambda_q).
    """
    n = len(seq)
    offs = _vertex_offsets(seq).astype(float) * np.asarray(lengths)[None, :]
    edges = offs[1:] - offs[0]
    vol = abs(np.linalg.det(edges)) / math.factorial(n)
    grads = np.zeros((n + 1, n))
    # barycentric gradients are the rows of the inverse edge-column matrix
    grads[1:] = np.linalg.inv(edges.T)
    grads[0] = -grads[1:].sum(axis=0)
    stiff = vol * (grads @ grads.T)
    return vol, stiff


def facet_area(vertex_coords: np.ndarray) -> float:
    """(n-1)-volume of a facet given its n vertex coordinates (n, n)."""
    edges = vertex_coords[1:] - vertex_coords[0]
    gram = edges @ edges.T
    d = edges.shape[0]
    return float(np.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(d))


def all_cells(cells_per_axis: int, n: int) -> np.ndarray:
    """All cell index tuples, shape (M^n, n)."""
    grids = np.indices((cells_per_axis,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grids.astype(np.int64))


def region_orderings(cells: np.ndarray, seq: tuple) -> np.ndarray:
    """Descending axis order of each element's region.

    Axes sort by cell index (descending); ties resolve by insertion
    order, since the axis inserted first carries the larger local
    coordinate.  Rows are permutations pi with x_{pi[0]} >= x_{pi[1]} >= ...
    """
    n = len(seq)
    pos = np.empty(n, dtype=np.int64)
    for m, axis in enumerate(seq):
        pos[axis] = m
    key = cells * n - pos[None, :]  # larger key = earlier in descending order
    return np.argsort(-key, axis=-1, kind="stable")


def ordering_signs(pi: np.ndarray) -> np.ndarray:
    """Signs of permutation rows (m, n)."""
    m, n = pi.shape
    inv = np.zeros(m, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inv += pi[:, i] > pi[:, j]
    return np.where(inv % 2 == 0, 1, -1).astype(np.int64)


def sector_element_mask(cells: np.ndarray, seq: tuple) -> np.ndarray:
    """Elements lying in the closed descending sector x_1 >= ... >= x_n."""
    n = len(seq)
    pos = np.empty(n, dtype=np.int64)
    for m, axis in enumerate(seq):
        pos[axis] = m
    mask = np.ones(cells.shape[0], dtype=bool)
    for i in range(n - 1):
        gt = cells[:, i] > cells[:, i + 1]
        tie_ok = (cells[:, i] == cells[:, i + 1]) & (pos[i] < pos[i + 1])
        mask &= gt | tie_ok
    return mask


def length_pattern_groups(cells: np.ndarray, widths: np.ndarray):
    """Group cells by their per-axis width pattern.

    Yields (lengths (n,), row indices).  Uniform lattices produce one
    group; staggered lattices a handful (wall cells are half width).
    """
    w = widths[cells]  # (K, n)
    rounded = np.round(w / w.max() * 2**20).astype(np.int64)
    uniq, inverse = np.unique(rounded, axis=0, return_inverse=True)
    for g in range(uniq.shape[0]):
        rows = np.nonzero(inverse == g)[0]
        yield w[rows[0]], rows


def insertion_orders(n: int):
    """All insertion orders with their Permutation objects."""
    return [(seq, Permutation(seq)) for seq in itertools.permutations(range(n))]
