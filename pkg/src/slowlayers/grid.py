from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

DEFAULT_CELLS_PER_EPS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform nodes a = x_0 < ... < x_{m-1} = b."""

    a: float
    b: float
    m: int

    def __post_init__(self):
        if self.m < 3:
            raise ValidationError(f"grid needs at least 3 nodes, got {self.m}")
        if not self.b > self.a:
            raise ValidationError(f"empty interval [{self.a}, {self.b}]")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.m - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.m)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid (lumped mass) weights: h inside, h/2 at the two end nodes."""
        w = np.full(self.m, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @classmethod
    def resolving(cls, a: float, b: float, eps: float, cells_per_eps: int = DEFAULT_CELLS_PER_EPS) -> "Grid":
        """Smallest uniform grid with h <= eps / cells_per_eps."""
        cells = int(np.ceil((b - a) * cells_per_eps / eps - 1e-9))
        return cls(a, b, cells + 1)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.a, self.b, (self.m - 1) * factor + 1)


@dataclass
class Field:
    grid: Grid
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.grid.m,):
            raise ValidationError(f"field has shape {self.u.shape}, grid has {self.grid.m} nodes")
        if not np.all(np.isfinite(self.u)):
            raise ValidationError("field contains non-finite values")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def copy(self) -> "Field":
        return Field(self.grid, self.u.copy())

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "u"])
            w.writerows(zip(self.x.tolist(), self.u.tolist()))
