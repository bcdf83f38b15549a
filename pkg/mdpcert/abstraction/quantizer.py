"""
Uniform axis-aligned grid quantizers.

Cells are half-open on the left, so a point on a shared cell boundary maps to
the lower cell; with per-dimension independence this is the
lexicographically smaller center.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from mdpcert.errors import ParameterError
from mdpcert.systems.interfaces import BoxSet

GRID_DECIMALS = 9


@dataclass(frozen=True, eq=False)
class Quantizer:
    """Uniform grid over a box; `cell_widths` are adjusted to tile the box exactly."""
    box: BoxSet
    cell_widths: np.ndarray

    def __post_init__(self):
        widths = np.broadcast_to(np.asarray(self.cell_widths, dtype=float), (self.box.dim,))
        if np.any(widths <= 0):
            raise ParameterError(f"cell widths must be positive, got {widths.tolist()}")
        cells = np.maximum(np.ceil(np.round(self.box.widths / widths, GRID_DECIMALS)), 1).astype(int)
        exact = self.box.widths / cells
        exact.setflags(write=False)
        cells.setflags(write=False)
        object.__setattr__(self, "cell_widths", exact)
        object.__setattr__(self, "_cells", cells)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def cells_per_dim(self) -> Tuple[int, ...]:
        return tuple(int(c) for c in self._cells)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self._cells))

    @property
    def rho(self) -> float:
        """Half-diagonal of a cell: the worst-case quantization error."""
        return float(np.linalg.norm(self.cell_widths) / 2.0)

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.box.lower[axis] + (np.arange(self._cells[axis]) + 0.5) * self.cell_widths[axis]

    def axis_edges(self, axis: int) -> np.ndarray:
        """Cell edges along one axis, cells + 1 values from lower to upper."""
        return self.box.lower[axis] + np.arange(self._cells[axis] + 1) * self.cell_widths[axis]

    def cell_edges(self) -> List[np.ndarray]:
        return [self.axis_edges(a) for a in range(self.dim)]

    def centers(self) -> np.ndarray:
        """All centers in row-major flat-index order, shape (num_cells, dim)."""
        grids = np.meshgrid(*[self.axis_centers(a) for a in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def multi_index(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-axis cell indices and in-set flags.

        Points outside the box map to the nearest boundary cell and are
        flagged False.
        """
        points = np.asarray(points, dtype=float)
        scaled = np.round((points - self.box.lower) / self.cell_widths, GRID_DECIMALS)
        idx = np.ceil(scaled).astype(np.int64) - 1
        idx = np.clip(idx, 0, self._cells - 1)
        return idx, self.box.contains(points)

    def index(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Flat cell indices for points of shape (..., dim).

        Returns:
            (indices, in_set) with the leading shape of points
        """
        idx, in_set = self.multi_index(points)
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.cells_per_dim)
        return flat, in_set

    def quantize(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nearest grid centers.

        Returns:
            (centers, in_set); centers has the shape of points
        """
        idx, in_set = self.multi_index(points)
        return self.box.lower + (idx + 0.5) * self.cell_widths, in_set

    def describe(self) -> dict:
        return {
            "lower": self.box.lower.tolist(),
            "upper": self.box.upper.tolist(),
            "cell_widths": self.cell_widths.tolist(),
            "cells": list(self.cells_per_dim),
        }

    @classmethod
    def from_description(cls, description: dict) -> "Quantizer":
        return cls(BoxSet(description["lower"], description["upper"]), description["cell_widths"])


def quantize(q: Quantizer, x: Sequence[float]) -> Tuple[np.ndarray, bool]:
    """Nearest center of a single point and its in-set flag."""
    center, in_set = q.quantize(np.atleast_1d(np.asarray(x, dtype=float)))
    return center, bool(in_set)
