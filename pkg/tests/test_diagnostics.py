"""Observable rows, recorders, and report verdicts."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mcac import (
    Field,
    GridSpec,
    ModelParams,
    Record,
    RunReport,
    bubble_radius,
    energy,
    energy_increases,
    mass,
    mass_drift,
    mbp_monitor,
    record,
    sup_norm,
)
from mcac.diagnostics import (
    RunRecorder,
    mass_verdict,
    max_sup_norm,
    mbp_verdict,
    min_g_integral,
)

PARAMS = ModelParams(eps=0.01)


def _const(grid, c):
    return Field(grid, np.full(grid.size, float(c)))


def _report(sups=None, masses=None, energies=None):
    n = max(len(x) for x in (sups or [1], masses or [1], energies or [1]))
    sups = sups or [0.5] * n
    masses = masses or [0.1] * n
    energies = energies or [1.0] * n
    recs = [
        Record(step=k, t=0.1 * k, mass=m, sup_norm=s, energy=e,
               lambda_value=0.0, g_integral=1.0)
        for k, (s, m, e) in enumerate(zip(sups, masses, energies))
    ]
    return RunReport(records=recs, config={})


class TestMbpMonitor:
    def test_inside_bound(self):
        grid = GridSpec(2, (8, 8))
        value, violated = mbp_monitor(_const(grid, 0.5))
        assert value == 0.5 and not violated

    def test_roundoff_is_tolerated(self):
        grid = GridSpec(2, (8, 8))
        _, violated = mbp_monitor(_const(grid, 1.0 + 1e-12))
        assert not violated

    def test_real_violation_flagged(self):
        grid = GridSpec(2, (8, 8))
        _, violated = mbp_monitor(_const(grid, 1.05))
        assert violated


class TestBubbleRadius:
    def test_no_negative_cells(self):
        grid = GridSpec(2, (16, 16))
        assert bubble_radius(_const(grid, 0.5)) == 0.0

    def test_exact_ball_indicator_3d(self):
        # -1 inside the ball of radius 0.25, +1 outside, on 128^3: the
        # equivalent radius must come back within 2h of 0.25
        grid = GridSpec(3, (128, 128, 128))
        coords = grid.meshgrid()
        r_sq = sum(c * c for c in coords)
        vals = np.where(r_sq < 0.25**2, -1.0, 1.0)
        r = bubble_radius(Field(grid, np.ascontiguousarray(vals)))
        assert abs(r - 0.25) <= 2.0 / 128

    def test_disc_indicator_2d(self):
        grid = GridSpec(2, (256, 256))
        coords = grid.meshgrid()
        r_sq = sum(c * c for c in coords)
        vals = np.where(r_sq < 0.3**2, -0.5, 0.5)
        r = bubble_radius(Field(grid, np.ascontiguousarray(vals)))
        assert abs(r - 0.3) <= 2.0 / 256

    def test_half_negative_plane_2d(self):
        # half the box negative: V = 1/2, r = sqrt(V/pi)
        grid = GridSpec(2, (32, 32))
        vals = np.ones(grid.shape)
        vals[:16, :] = -1.0
        r = bubble_radius(Field(grid, vals))
        assert r == pytest.approx(math.sqrt(0.5 / math.pi), abs=1e-12)


class TestRecord:
    def test_pure_phase_row(self):
        grid = GridSpec(2, (16, 16))
        rec = record(_const(grid, 1.0), step=3, t=0.3, model=PARAMS)
        assert rec.mass == pytest.approx(1.0, abs=1e-14)
        assert rec.sup_norm == 1.0
        assert rec.energy == 0.0
        assert math.isnan(rec.lambda_value)
        assert rec.lambda_degenerate
        assert rec.g_integral == pytest.approx(0.0, abs=1e-15)
        assert rec.radius is None

    def test_zero_field_row(self):
        grid = GridSpec(2, (16, 16))
        rec = record(_const(grid, 0.0), step=0, t=0.0, model=PARAMS)
        assert rec.mass == 0.0
        assert rec.lambda_value == 0.0
        assert rec.g_integral == pytest.approx(1.0, abs=1e-14)
        assert rec.energy == pytest.approx(0.25, abs=1e-15)

    def test_matches_individual_operations(self):
        grid = GridSpec(2, (16, 16))
        rng = np.random.default_rng(301)
        u = Field(grid, 0.9 * rng.uniform(-1, 1, grid.size))
        rec = record(u, step=5, t=2.5, model=PARAMS, with_radius=True)
        assert rec.mass == mass(u)
        assert rec.sup_norm == sup_norm(u)
        assert rec.energy == energy(u, PARAMS.eps)
        assert rec.radius == bubble_radius(u)
        assert rec.step == 5 and rec.t == 2.5


class TestRunRecorder:
    def test_stride_and_final(self):
        grid = GridSpec(2, (8, 8))
        rec = RunRecorder(PARAMS, stride=4, total_steps=10)
        u = _const(grid, 0.2)
        for k in range(11):
            rec.observe(k, 0.1 * k, u)
        assert [r.step for r in rec.records] == [0, 4, 8, 10]

    def test_report_sorted_by_step(self):
        rec = RunRecorder(PARAMS, stride=1, total_steps=2)
        grid = GridSpec(2, (8, 8))
        u = _const(grid, 0.2)
        rec.observe(2, 0.2, u)
        rec.observe(0, 0.0, u)
        rec.observe(1, 0.1, u)
        report = rec.build_report(config={"x": 1})
        assert [r.step for r in report.records] == [0, 1, 2]
        assert report.config == {"x": 1}


class TestVerdicts:
    def test_mbp_verdict(self):
        assert mbp_verdict(_report(sups=[0.9, 1.0, 1.0 + 1e-10])) == "preserved"
        assert mbp_verdict(_report(sups=[0.9, 1.1])) == "violated"

    def test_mass_verdict_and_drift(self):
        rep = _report(masses=[0.5, 0.5 + 5e-11, 0.5 - 2e-11])
        assert mass_drift(rep) == (0.5 + 5e-11) - 0.5  # exact float arithmetic
        assert mass_verdict(rep) == "conserved"
        assert mass_verdict(_report(masses=[0.5, 0.5 + 1e-9])) == "drifted"

    def test_max_sup_and_min_g(self):
        rep = _report(sups=[0.2, 0.8, 0.5])
        assert max_sup_norm(rep) == 0.8
        assert min_g_integral(rep) == 1.0

    def test_energy_increases_is_observational(self):
        rep = _report(energies=[3.0, 2.0, 2.5, 1.0])
        rises = energy_increases(rep)
        assert len(rises) == 1
        assert rises[0][0] == 1 and rises[0][1] == 2
        assert rises[0][2] == pytest.approx(0.5)
        assert energy_increases(_report(energies=[3.0, 2.0, 1.9])) == []

    def test_tiny_energy_wiggle_ignored(self):
        rep = _report(energies=[1.0, 1.0 + 1e-13])
        assert energy_increases(rep) == []
