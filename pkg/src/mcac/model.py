"""Double-well nonlinearity and the mass-constraint multiplier.

The reaction is f(v) = v - v^3 with well density F(v) = (1 - v^2)^2 / 4 and
constraint weight g(v) = 1 - v^2 = 2 sqrt(F(v)).  Mass conservation is
enforced by subtracting lambda(u) * g(u) where lambda is the ratio of the
two quadratures int f(u) / int g(u).  The stabilized nonlinear operator

    N[u] = kappa u + f(u) - lambda(u) g(u)

is what the exponential steppers feed to phi_1 and phi_2; kappa >= 4 makes
it monotone and bounded by kappa on [-1, 1], which is the whole story behind
the schemes' bound preservation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator
from .field import Field

# Stability threshold: max over [-1, 1] of |f'| + |lambda| |g'| with
# |lambda| <= 1 is 2 + 2 = 4.
KAPPA_MIN = 4.0


@dataclass(frozen=True)
class ModelParams:
    eps: float
    kappa: float = 4.0
    gamma_min: float = 1e-8

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.kappa >= KAPPA_MIN:
            raise ValueError(f"kappa must be >= {KAPPA_MIN}, got {self.kappa}")
        if not 0.0 < self.gamma_min < 1.0:
            raise ValueError(f"gamma_min must be in (0, 1), got {self.gamma_min}")


def potential_terms(v):
    """Return (f, g, F) at v, elementwise for arrays."""
    v = np.asarray(v, dtype=np.float64)
    g = 1.0 - v * v
    f = v - v**3
    well = 0.25 * g * g
    return f, g, well


def _quadratures(u: Field) -> tuple[float, float, np.ndarray, np.ndarray]:
    f, g, _ = potential_terms(u.values)
    vol = u.grid.cell_volume
    return vol * float(np.sum(f)), vol * float(np.sum(g)), f, g


def lambda_multiplier(u: Field, params: ModelParams) -> float:
    """The scalar multiplier int f(u) / int g(u).

    Raises DegenerateDenominator when the denominator falls below
    params.gamma_min; callers that can tolerate that (diagnostics) record a
    NaN sentinel instead.
    """
    num, den, _, _ = _quadratures(u)
    if den < params.gamma_min:
        raise DegenerateDenominator(
            f"denominator integral {den:.3e} below gamma_min {params.gamma_min:.1e}"
        )
    return num / den


def nonlinear_term(u: Field, params: ModelParams) -> Field:
    """The stabilized nonlinear operator N[u] = kappa u + f(u) - lambda g(u).

    One scalar multiplier per evaluation.  When g(u) vanishes identically
    (u takes only the values +-1) the multiplier term is zero for any finite
    multiplier, so the limit value N[u] = kappa u is used; a denominator
    below gamma_min with g not identically zero is a genuine degeneracy and
    propagates DegenerateDenominator.
    """
    num, den, f, g = _quadratures(u)
    if den < params.gamma_min:
        if np.any(g != 0.0):
            raise DegenerateDenominator(
                f"denominator integral {den:.3e} below gamma_min "
                f"{params.gamma_min:.1e}"
            )
        lam = 0.0
    else:
        lam = num / den
    return Field(u.grid, params.kappa * u.values + f - lam * g)
