"""Fourier diagonalization of the discrete Laplacian and phi-functions.

The periodic central-difference Laplacian on a uniform grid is diagonalized
by the DFT with real symbol

    sigma_k = sum_j (2 cos(2 pi k_j / N_j) - 2) / h_j^2,

so applying phi_l(tau * (eps^2 Lap_h - kappa I)) to a field costs one
forward/inverse transform pair and a pointwise multiply.  For the
stabilized operator every argument a = tau (eps^2 sigma_k - kappa) satisfies
a <= -kappa tau < 0, so exp(a) cannot overflow; this is asserted defensively.

phi_0(a) = e^a, phi_1(a) = (e^a - 1)/a, phi_2(a) = (e^a - 1 - a)/a^2.
Near a = 0 the closed forms cancel catastrophically, so each switches to a
truncated Taylor series below a magnitude threshold chosen so both branches
meet well inside 1e-13 relative accuracy.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import GridTooLargeForOracle, ImaginaryResidueTooLarge
from .field import Field, GridSpec

# Residue tolerance for the inverse transform of nominally-real data,
# relative to the input sup-norm.
RESIDUE_TOL = 1e-10

# Refuse dense-oracle work above this many unknowns.
DENSE_ORACLE_MAX = 4096

# Series thresholds: |a| below which the Taylor branch is used.  Degree-8
# truncation leaves a relative remainder ~ a^9/10! (phi_1) and a^9/11!
# (phi_2); at the thresholds those are ~3e-43 and ~3e-17.  The closed-form
# branch at |a| = 0.1 for phi_2 loses ~1.3 digits to cancellation, still
# comfortably inside 1e-13.
_SERIES_THRESHOLD = {1: 1e-4, 2: 0.1}
_SERIES_DEGREE = 8
_PHI1_COEFFS = [1.0 / math.factorial(m + 1) for m in range(_SERIES_DEGREE + 1)]
_PHI2_COEFFS = [1.0 / math.factorial(m + 2) for m in range(_SERIES_DEGREE + 1)]


def _horner(coeffs: list[float], a: np.ndarray) -> np.ndarray:
    acc = np.full_like(a, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * a + c
    return acc


def phi_array(level: int, a: np.ndarray) -> np.ndarray:
    """Elementwise phi_level over an array of non-positive arguments."""
    a = np.asarray(a, dtype=np.float64)
    if not np.isfinite(a).all():
        raise ValueError("phi argument must be finite")
    if level == 0:
        return np.exp(a)
    if level not in (1, 2):
        raise ValueError(f"phi level must be 0, 1 or 2, got {level}")
    coeffs = _PHI1_COEFFS if level == 1 else _PHI2_COEFFS
    small = np.abs(a) < _SERIES_THRESHOLD[level]
    out = np.empty_like(a)
    out[small] = _horner(coeffs, a[small])
    big = a[~small]
    if level == 1:
        out[~small] = np.expm1(big) / big
    else:
        out[~small] = (np.expm1(big) - big) / (big * big)
    return out


def phi_scalar(level: int, a: float) -> float:
    """phi_level at a single point; phi_1(0) = 1, phi_2(0) = 1/2."""
    return float(phi_array(level, np.array([a]))[0])


@dataclass(frozen=True)
class LaplacianSymbol:
    """DFT eigenvalues of the periodic central-difference Laplacian.

    sigma is flat in the same row-major order as field values; sigma[0]
    (the mean mode) is exactly 0 and every entry is <= 0.
    """

    grid: GridSpec
    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)


def build_symbol(grid: GridSpec) -> LaplacianSymbol:
    shaped = np.zeros(grid.shape)
    for axis, n in enumerate(grid.n_per_dim):
        angles = np.arange(n) * (2.0 * np.pi / n)
        per_axis = (2.0 * np.cos(angles) - 2.0) * float(n * n)
        bcast = [1] * grid.dim
        bcast[axis] = n
        shaped = shaped + per_axis.reshape(bcast)
    return LaplacianSymbol(grid, shaped.ravel())


@dataclass(eq=False)
class OperatorContext:
    """Symbol plus model constants, with cached per-(level, tau) multipliers.

    The cache is guarded by a lock so concurrent steppers may share one
    context; cached arrays are read-only.
    """

    symbol: LaplacianSymbol
    eps: float
    kappa: float
    _cache: dict = dc_field(default_factory=dict, repr=False)
    _lock: threading.Lock = dc_field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.kappa >= 4.0:
            raise ValueError(f"kappa must be >= 4, got {self.kappa}")

    @property
    def grid(self) -> GridSpec:
        return self.symbol.grid

    def cached(self, key, factory) -> np.ndarray:
        with self._lock:
            hit = self._cache.get(key)
            if hit is None:
                hit = np.asarray(factory())
                hit.setflags(write=False)
                self._cache[key] = hit
            return hit

    def phi_multiplier(self, level: int, tau: float) -> np.ndarray:
        """phi_level(tau (eps^2 sigma - kappa)) per mode, shaped like the grid."""
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau}")

        def build():
            a = tau * (self.eps * self.eps * self.symbol.sigma - self.kappa)
            if a.max() > 0.0:
                raise AssertionError("stabilized operator produced a positive mode")
            return phi_array(level, a).reshape(self.grid.shape)

        return self.cached(("phi", level, tau), build)


def apply_mode_multiplier(grid: GridSpec, multiplier: np.ndarray, u: Field) -> Field:
    """IFFT( multiplier * FFT(u) ) for a real, mode-symmetric multiplier.

    The result of the inverse transform must be real up to roundoff; its
    imaginary residue is checked against RESIDUE_TOL * sup|u|, scaled by the
    multiplier magnitude when that exceeds 1 (large multipliers amplify the
    transform's symmetry roundoff by the same factor).
    """
    if u.grid != grid:
        raise ValueError("field grid does not match multiplier grid")
    spectrum = np.fft.fftn(u.array)
    out = np.fft.ifftn(multiplier.reshape(grid.shape) * spectrum)
    sup_u = float(np.max(np.abs(u.values)))
    scale = max(1.0, float(np.max(np.abs(multiplier))))
    residue = float(np.max(np.abs(out.imag)))
    if residue > RESIDUE_TOL * scale * sup_u:
        raise ImaginaryResidueTooLarge(
            f"imaginary residue {residue:.3e} exceeds "
            f"{RESIDUE_TOL:.1e} * {scale:.3e} * sup|u| = {RESIDUE_TOL * scale * sup_u:.3e}"
        )
    return Field(grid, out.real)


def apply_phi(ctx: OperatorContext, level: int, tau: float, u: Field) -> Field:
    """Apply phi_level(tau (eps^2 Lap_h - kappa I)) to u via the DFT."""
    return apply_mode_multiplier(ctx.grid, ctx.phi_multiplier(level, tau), u)


def dense_laplacian(grid: GridSpec) -> np.ndarray:
    """Explicit (prod n x prod n) periodic central-difference Laplacian.

    Oracle-grade: assembled entry by entry from the stencil, no transforms.
    """
    if grid.size > DENSE_ORACLE_MAX:
        raise GridTooLargeForOracle(
            f"grid has {grid.size} unknowns; dense oracle capped at {DENSE_ORACLE_MAX}"
        )
    shape = grid.shape
    size = grid.size
    lap = np.zeros((size, size))
    for row, idx in enumerate(np.ndindex(*shape)):
        for axis, n in enumerate(shape):
            inv_h2 = float(n * n)
            for step in (-1, 1):
                nbr = list(idx)
                nbr[axis] = (idx[axis] + step) % n
                col = int(np.ravel_multi_index(nbr, shape))
                lap[row, col] += inv_h2
            lap[row, row] -= 2.0 * inv_h2
    return lap


def dense_oracle_phi(
    grid: GridSpec, level: int, tau: float, eps: float, kappa: float, u: Field
) -> Field:
    """phi_level(tau (eps^2 Lap_h - kappa I)) u via a dense eigendecomposition.

    Deliberately independent of the FFT path: assembles the operator as a
    matrix and uses a symmetric eigensolver.  Small grids only.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    a_mat = eps * eps * dense_laplacian(grid) - kappa * np.eye(grid.size)
    w, vecs = np.linalg.eigh(a_mat)
    coeffs = vecs.T @ u.values
    out = vecs @ (phi_array(level, tau * w) * coeffs)
    return Field(grid, out)
