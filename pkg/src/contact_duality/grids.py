"""Sampling grids that avoid the coincidence set.

All wavefunction grids live on the staggered lattice of cell centers
(i + 1/2) h inside a box [0, L]: pairwise-distinct index tuples never
satisfy x_j = x_k, so exchange signs are always +-1 and contact planes
run midway between node layers.  The sector grid keeps the strictly
descending tuples, the full grid all pairwise-distinct ones; the full
grid is the disjoint union of the permuted copies of the sector grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .coordinates import permutation_signs_batch
from .errors import GridMismatch


def staggered_coords(length: float, points: int) -> np.ndarray:
    """Cell centers (i + 1/2) h of a box [0, length] with N cells."""
    h = length / points
    return (np.arange(points) + 0.5) * h


def _encode(idx: np.ndarray, base: int) -> np.ndarray:
    """Pack index tuples (M, n) into integers for table lookups."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros(idx.shape[0], dtype=np.int64)
    for k in range(idx.shape[1]):
        out = out * base + idx[:, k]
    return out


@dataclass(frozen=True)
class SectorGrid:
    """Strictly descending staggered tuples inside a box."""

    n: int
    length: float
    points: int

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def coords_1d(self) -> np.ndarray:
        return staggered_coords(self.length, self.points)

    def node_indices(self) -> np.ndarray:
        combos = list(itertools.combinations(range(self.points - 1, -1, -1), self.n))
        return np.asarray(sorted(combos), dtype=np.int64)

    def nodes(self) -> np.ndarray:
        return self.coords_1d[self.node_indices()]

    @property
    def size(self) -> int:
        return math.comb(self.points, self.n)

    def weight(self) -> float:
        """Quadrature weight per node, h^n."""
        return self.spacing**self.n

    def rank_of(self, idx: np.ndarray) -> np.ndarray:
        """Ranks of descending index tuples in node order."""
        keys = _encode(self.node_indices(), self.points)
        order = np.argsort(keys)
        wanted = _encode(idx, self.points)
        pos = np.searchsorted(keys[order], wanted)
        if np.any(keys[order][pos] != wanted):
            raise GridMismatch("index tuple not on the sector grid")
        return order[pos]


@dataclass(frozen=True)
class FullGrid:
    """Pairwise-distinct staggered tuples inside a box."""

    n: int
    length: float
    points: int

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def coords_1d(self) -> np.ndarray:
        return staggered_coords(self.length, self.points)

    def sector(self) -> SectorGrid:
        return SectorGrid(n=self.n, length=self.length, points=self.points)

    def node_indices(self) -> np.ndarray:
        tuples = [
            t for t in itertools.product(range(self.points), repeat=self.n)
            if len(set(t)) == self.n
        ]
        return np.asarray(tuples, dtype=np.int64)

    def nodes(self) -> np.ndarray:
        return self.coords_1d[self.node_indices()]

    @property
    def size(self) -> int:
        return math.factorial(self.n) * math.comb(self.points, self.n)

    def weight(self) -> float:
        return self.spacing**self.n

    def sector_decomposition(self):
        """Per node: rank of its sorted tuple on the sector grid and the
        sign of the descending sorting permutation."""
        idx = self.node_indices()
        order = np.argsort(-idx, axis=-1, kind="stable")
        sorted_idx = np.take_along_axis(idx, order, axis=-1)
        signs = permutation_signs_batch(order)
        ranks = self.sector().rank_of(sorted_idx)
        return ranks, signs

    def transposition_map(self, j: int) -> np.ndarray:
        """Node permutation induced by swapping slots j and j+1 (0-based)."""
        idx = self.node_indices()
        swapped = idx.copy()
        swapped[:, [j, j + 1]] = swapped[:, [j + 1, j]]
        keys = _encode(idx, self.points)
        order = np.argsort(keys)
        pos = np.searchsorted(keys[order], _encode(swapped, self.points))
        return order[pos]


@dataclass
class WavefunctionGrid:
    """Complex node values on a sector or full staggered grid.

    ``stat`` tags full-space functions with their exchange symmetry;
    sector functions carry none.  An optional analytic ``profile``
    remembers the smooth function the values were sampled from, which
    propagation routes use to evaluate initial data off the lattice.
    """

    grid: object
    values: np.ndarray
    space: str  # "sector" | "full"
    stat: object = None
    profile: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        expected = self.grid.size
        if self.values.shape != (expected,):
            raise GridMismatch(
                f"values shape {self.values.shape} does not match grid size {expected}"
            )

    def norm(self) -> float:
        return float(np.sqrt(self.grid.weight() * np.sum(np.abs(self.values) ** 2)))

    def normalized(self) -> "WavefunctionGrid":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero function")
        return WavefunctionGrid(self.grid, self.values / nrm, self.space, self.stat,
                                self.profile)


def sample_sector_function(grid: SectorGrid, func) -> WavefunctionGrid:
    """Sample a callable (vectorized over (M, n)) on the sector grid."""
    values = np.asarray(func(grid.nodes()))
    return WavefunctionGrid(grid, values, "sector", None, profile=func)
