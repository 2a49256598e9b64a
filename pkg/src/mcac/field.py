"""Uniform periodic grids on the unit box and grid-function functionals.

The domain is always (-0.5, 0.5)^d with d in {2, 3} and periodic wrap.
Fields are stored flat in row-major order (last axis fastest); every
functional here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NonFiniteFieldError

CELL = "cell"
VERTEX = "vertex"


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on the periodic box (-0.5, 0.5)^d.

    Node placement is cell-centered, x_i = -0.5 + (i + 0.5) h, or vertex,
    x_i = -0.5 + i h, with h = 1/n per axis.  Cell placement is the default;
    vertex placement exists so that refined grids nest exactly (index
    subsampling) in spatial convergence studies.  Axes of size 1 are allowed
    (they contribute nothing to differencing, which quasi-1D checks exploit),
    but n >= 2 is what you want for an actual simulation.
    """

    dim: int
    n_per_dim: tuple[int, ...]
    placement: str = CELL

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        ns = tuple(int(n) for n in self.n_per_dim)
        object.__setattr__(self, "n_per_dim", ns)
        if len(ns) != self.dim:
            raise ValueError(f"n_per_dim has {len(ns)} entries for dim {self.dim}")
        if any(n < 1 for n in ns):
            raise ValueError(f"every n must be >= 1, got {ns}")
        if self.placement not in (CELL, VERTEX):
            raise ValueError(f"placement must be {CELL!r} or {VERTEX!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_dim

    @property
    def size(self) -> int:
        return math.prod(self.n_per_dim)

    @property
    def h_per_dim(self) -> tuple[float, ...]:
        return tuple(1.0 / n for n in self.n_per_dim)

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h^d: the product of per-axis spacings."""
        return math.prod(self.h_per_dim)

    def axis_coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis."""
        n = self.n_per_dim[axis]
        h = 1.0 / n
        i = np.arange(n, dtype=float)
        if self.placement == CELL:
            return -0.5 + (i + 0.5) * h
        return -0.5 + i * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Sparse coordinate arrays that broadcast to the grid shape."""
        axes = [self.axis_coords(j) for j in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))


@dataclass(frozen=True)
class Field:
    """A real-valued grid function: flat float64 values plus its grid.

    Construction validates length and finiteness; any NaN/Inf aborts with a
    diagnostic naming the first offending flat index.  The stored array is
    a private copy marked read-only, so fields behave as immutable values.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape == self.grid.shape:
            v = v.ravel()
        if v.ndim != 1 or v.size != self.grid.size:
            raise ValueError(
                f"values shape {np.shape(self.values)} does not match grid "
                f"shape {self.grid.shape}"
            )
        finite = np.isfinite(v)
        if not finite.all():
            idx = int(np.argmin(finite))
            raise NonFiniteFieldError(idx, float(v[idx]))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the values in grid shape."""
        return self.values.reshape(self.grid.shape)


def mass(u: Field) -> float:
    """Rectangle-rule integral of u over the box: h^d * sum(u)."""
    return u.grid.cell_volume * float(np.sum(u.values))


def sup_norm(u: Field) -> float:
    return float(np.max(np.abs(u.values)))


def energy(u: Field, eps: float) -> float:
    """Discrete free energy h^d * sum( eps^2/2 |grad_h u|^2 + F(u) ).

    The gradient is centered differences with periodic wrap and
    F(v) = (1 - v^2)^2 / 4 is the double-well density.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a = u.array
    grad_sq = np.zeros_like(a)
    for axis, h in enumerate(u.grid.h_per_dim):
        d = (np.roll(a, -1, axis=axis) - np.roll(a, 1, axis=axis)) / (2.0 * h)
        grad_sq += d * d
    well = 0.25 * (1.0 - a * a) ** 2
    total = np.sum(0.5 * eps * eps * grad_sq + well)
    return u.grid.cell_volume * float(total)


def error_norms(u: Field, v: Field) -> tuple[float, float]:
    """Weighted-l2 and sup-norm distance between two fields on one grid.

    The l2 norm carries the quadrature weight, sqrt(h^d * sum (u - v)^2),
    so values are comparable across resolutions.
    """
    if u.grid != v.grid:
        raise GridMismatchError(
            f"fields live on different grids: {u.grid} vs {v.grid}"
        )
    d = u.values - v.values
    l2 = math.sqrt(u.grid.cell_volume * float(np.sum(d * d)))
    linf = float(np.max(np.abs(d))) if d.size else 0.0
    return l2, linf
