"""Per-step observables, run reports, and invariant verdicts.

A record row holds the quantities the experiments track: mass, sup-norm,
energy, the constraint multiplier, the integral of g (which makes the
denominator-safety assumption auditable), and optionally the equivalent
bubble radius.  The multiplier is the one diagnostic allowed to fail softly:
a degenerate denominator records a NaN sentinel rather than aborting.

Energy monotonicity is observational only.  The schemes do not promise it
at desk tolerances, so `energy_increases` feeds warnings, never failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateDenominator
from .field import Field, energy, mass, sup_norm
from .model import ModelParams, lambda_multiplier, potential_terms

# A recorded sup-norm beyond 1 + MBP_TOL counts as a bound violation.
MBP_TOL = 1e-9

# Recorded mass may drift at most this much from the initial record.
MASS_DRIFT_TOL = 1e-10


@dataclass(frozen=True)
class Record:
    step: int
    t: float
    mass: float
    sup_norm: float
    energy: float
    lambda_value: float  # NaN when the denominator was degenerate
    g_integral: float
    radius: float | None = None

    @property
    def lambda_degenerate(self) -> bool:
        return math.isnan(self.lambda_value)


@dataclass
class RunReport:
    records: list[Record]
    config: dict
    snapshots: list[tuple[float, str]] = dc_field(default_factory=list)
    final_field: Field | None = None


def mbp_monitor(u: Field) -> tuple[float, bool]:
    """Return (sup-norm, violated) against the bound 1 + MBP_TOL."""
    m = sup_norm(u)
    return m, m > 1.0 + MBP_TOL


def bubble_radius(u: Field) -> float:
    """Radius of the ball/disc with the same volume as the region u < 0.

    Volume is counted by cells, V = h^d * #{u < 0}; returns 0.0 when no
    cell is negative.
    """
    count = int(np.count_nonzero(u.values < 0.0))
    if count == 0:
        return 0.0
    vol = u.grid.cell_volume * count
    if u.grid.dim == 2:
        return math.sqrt(vol / math.pi)
    return (3.0 * vol / (4.0 * math.pi)) ** (1.0 / 3.0)


def record(
    u: Field,
    step: int,
    t: float,
    model: ModelParams,
    with_radius: bool = False,
) -> Record:
    """Compute one diagnostics row for u at (step, t)."""
    _, g, _ = potential_terms(u.values)
    g_integral = u.grid.cell_volume * float(np.sum(g))
    try:
        lam = lambda_multiplier(u, model)
    except DegenerateDenominator:
        lam = math.nan
    return Record(
        step=step,
        t=t,
        mass=mass(u),
        sup_norm=sup_norm(u),
        energy=energy(u, model.eps),
        lambda_value=lam,
        g_integral=g_integral,
        radius=bubble_radius(u) if with_radius else None,
    )


class RunRecorder:
    """Collects records at step 0, every `stride` steps, and the final step."""

    def __init__(
        self,
        model: ModelParams,
        stride: int = 1,
        total_steps: int | None = None,
        with_radius: bool = False,
    ):
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.model = model
        self.stride = stride
        self.total_steps = total_steps
        self.with_radius = with_radius
        self.records: list[Record] = []

    def observe(self, step: int, t: float, u: Field) -> None:
        due = step % self.stride == 0 or step == self.total_steps
        if due:
            self.records.append(
                record(u, step, t, self.model, with_radius=self.with_radius)
            )

    def build_report(self, config: dict, final_field: Field | None = None) -> RunReport:
        recs = sorted(self.records, key=lambda r: r.step)
        return RunReport(records=recs, config=config, final_field=final_field)


def max_sup_norm(report: RunReport) -> float:
    return max(r.sup_norm for r in report.records)


def mbp_verdict(report: RunReport) -> str:
    """'preserved' when no recorded sup-norm exceeds 1 + MBP_TOL."""
    violated = any(r.sup_norm > 1.0 + MBP_TOL for r in report.records)
    return "violated" if violated else "preserved"


def mass_drift(report: RunReport) -> float:
    m0 = report.records[0].mass
    return max(abs(r.mass - m0) for r in report.records)


def mass_verdict(report: RunReport) -> str:
    return "drifted" if mass_drift(report) > MASS_DRIFT_TOL else "conserved"


def min_g_integral(report: RunReport) -> float:
    return min(r.g_integral for r in report.records)


def energy_increases(report: RunReport, tol: float = 1e-12) -> list[tuple[int, int, float]]:
    """Consecutive record pairs where energy rose by more than tol.

    Observational: callers turn a nonempty result into a warning, not a
    failure.
    """
    out = []
    for a, b in zip(report.records, report.records[1:]):
        rise = b.energy - a.energy
        if rise > tol:
            out.append((a.step, b.step, rise))
    return out
