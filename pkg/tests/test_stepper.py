"""One-step integrators and the time-marching driver."""

from __future__ import annotations

import numpy as np
import pytest

from mcac import (
    Field,
    GridSpec,
    ModelParams,
    OperatorContext,
    Scheme,
    StepParams,
    build_symbol,
    ch_etdrk2_step,
    etd1_step,
    etdrk2_step,
    imex1_step,
    make_ic,
    mass,
    run,
    step_once,
)
from mcac.errors import NonIntegerStepCount
from mcac.harness import CosProduct, QuasiRandom
from mcac.stepper import KAPPA_CH
from oracles import dense_etd1, dense_etdrk2, random_bounded_field

EPS = 0.01


def _setup(n=16, dim=2, eps=EPS, kappa=4.0):
    grid = GridSpec(dim, (n,) * dim)
    model = ModelParams(eps=eps, kappa=kappa)
    ctx = OperatorContext(build_symbol(grid), eps=eps, kappa=kappa)
    return grid, model, ctx


def _params(scheme, tau, model, ctx):
    return StepParams(tau=tau, scheme=scheme, model=model, ctx=ctx)


def _const(grid, c):
    return Field(grid, np.full(grid.size, float(c)))


class TestStepParams:
    def test_rejects_mismatched_kappa(self):
        grid, model, _ = _setup(kappa=4.0)
        ctx5 = OperatorContext(build_symbol(grid), eps=EPS, kappa=5.0)
        with pytest.raises(ValueError):
            StepParams(tau=0.1, scheme=Scheme.ETD1, model=model, ctx=ctx5)

    def test_rejects_nonpositive_tau(self):
        _, model, ctx = _setup()
        with pytest.raises(ValueError):
            StepParams(tau=0.0, scheme=Scheme.ETD1, model=model, ctx=ctx)


class TestFixedPoints:
    def test_pure_phases_are_exact_fixed_points(self):
        grid, model, ctx = _setup(n=32)
        for c in (1.0, -1.0):
            u = _const(grid, c)
            for scheme in (Scheme.ETD1, Scheme.ETDRK2, Scheme.IMEX1):
                for tau in (0.1, 10.0):
                    out = step_once(u, _params(scheme, tau, model, ctx))
                    assert np.max(np.abs(out.values - c)) <= 1e-14, (scheme, tau, c)

    def test_zero_field_stays_zero(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.0)
        for scheme in (Scheme.ETD1, Scheme.ETDRK2, Scheme.IMEX1):
            out = step_once(u, _params(scheme, 0.5, model, ctx))
            assert np.max(np.abs(out.values)) <= 1e-16

    def test_subunit_constant_stays_spatially_constant(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.6)
        out = etdrk2_step(u, _params(Scheme.ETDRK2, 0.25, model, ctx))
        assert out.values.max() - out.values.min() <= 1e-13


class TestAgainstDenseOracle:
    def test_etd1_matches(self):
        grid, model, ctx = _setup(n=8)
        rng = np.random.default_rng(211)
        for tau in (0.01, 0.5):
            u = random_bounded_field(grid, rng)
            fast = etd1_step(u, _params(Scheme.ETD1, tau, model, ctx))
            slow = dense_etd1(u, tau, EPS, 4.0)
            scale = np.max(np.abs(slow.values))
            assert np.max(np.abs(fast.values - slow.values)) <= 1e-10 * scale

    def test_etdrk2_matches(self):
        grid, model, ctx = _setup(n=8)
        rng = np.random.default_rng(223)
        for tau in (0.01, 0.5):
            u = random_bounded_field(grid, rng)
            fast = etdrk2_step(u, _params(Scheme.ETDRK2, tau, model, ctx))
            slow = dense_etdrk2(u, tau, EPS, 4.0)
            scale = np.max(np.abs(slow.values))
            assert np.max(np.abs(fast.values - slow.values)) <= 1e-10 * scale


class TestImex:
    def test_first_order_gap_to_etd1_shrinks_quadratically(self):
        # both schemes share the O(tau) term, so their gap is O(tau^2);
        # measured contraction factors per halving from tau = 0.1:
        # 3.007, 3.430, 3.692, 3.840 -> approaching 4 from below
        grid, model, ctx = _setup(n=64)
        u0 = make_ic(CosProduct(), grid)
        diffs = []
        tau = 0.1
        for _ in range(5):
            d = np.max(
                np.abs(
                    etd1_step(u0, _params(Scheme.ETD1, tau, model, ctx)).values
                    - imex1_step(u0, _params(Scheme.IMEX1, tau, model, ctx)).values
                )
            )
            diffs.append(float(d))
            tau /= 2.0
        ratios = [a / b for a, b in zip(diffs, diffs[1:])]
        assert all(2.5 <= r <= 4.5 for r in ratios), ratios
        assert ratios[-1] == pytest.approx(4.0, abs=0.5)
        assert ratios == sorted(ratios)

    def test_mass_conservation_one_step(self):
        grid, model, ctx = _setup(n=32)
        rng = np.random.default_rng(227)
        u = random_bounded_field(grid, rng)
        out = imex1_step(u, _params(Scheme.IMEX1, 5.0, model, ctx))
        assert abs(mass(out) - mass(u)) <= 1e-12


class TestCahnHilliard:
    def test_pure_phases_are_fixed_points(self):
        grid, model, ctx = _setup(n=16)
        for c in (1.0, -1.0):
            u = _const(grid, c)
            out = ch_etdrk2_step(u, _params(Scheme.CH_ETDRK2, 0.01, model, ctx))
            assert np.max(np.abs(out.values - c)) <= 1e-12

    def test_mass_conserved_on_random_field(self):
        grid, model, ctx = _setup(n=32)
        rng = np.random.default_rng(229)
        u = random_bounded_field(grid, rng, amplitude=0.9)
        out = ch_etdrk2_step(u, _params(Scheme.CH_ETDRK2, 0.01, model, ctx))
        assert abs(mass(out) - mass(u)) <= 1e-12

    def test_matches_dense_composition(self):
        # same ETDRK2 template assembled from dense matrices:
        # ell = -Lap (eps^2 Lap - kappa_CH I), N(w) = -Lap (f(w) + kappa_CH w)
        from mcac.spectral import dense_laplacian, phi_array

        grid, model, ctx = _setup(n=8)
        lap = dense_laplacian(grid)
        ell = -lap @ (EPS * EPS * lap - KAPPA_CH * np.eye(grid.size))
        w, vecs = np.linalg.eigh((ell + ell.T) / 2.0)
        tau = 0.01

        def phi_apply(level, vals):
            return vecs @ (phi_array(level, tau * w) * (vecs.T @ vals))

        def n_ch(vals):
            return -lap @ (vals - vals**3 + KAPPA_CH * vals)

        rng = np.random.default_rng(233)
        u = random_bounded_field(grid, rng, amplitude=0.9)
        n_u = n_ch(u.values)
        pred = phi_apply(0, u.values) + tau * phi_apply(1, n_u)
        want = pred + tau * phi_apply(2, n_ch(pred) - n_u)

        got = ch_etdrk2_step(u, _params(Scheme.CH_ETDRK2, tau, model, ctx))
        assert np.max(np.abs(got.values - want)) <= 1e-9 * np.max(np.abs(want))


class TestRun:
    def test_zero_steps_yields_single_record(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.5)
        report = run(u, _params(Scheme.ETD1, 0.1, model, ctx), 0.0)
        assert len(report.records) == 1
        assert report.records[0].step == 0
        assert report.final_field is u

    def test_trivial_run_records_trivial_series(self):
        grid, model, ctx = _setup()
        u = _const(grid, 1.0)
        report = run(u, _params(Scheme.ETD1, 0.1, model, ctx), 1.0)
        assert len(report.records) == 11
        for rec in report.records:
            assert rec.mass == pytest.approx(1.0, abs=1e-14)
            assert rec.sup_norm == pytest.approx(1.0, abs=1e-14)
            assert rec.energy == pytest.approx(0.0, abs=1e-14)
            assert np.isnan(rec.lambda_value)
            assert rec.g_integral == pytest.approx(0.0, abs=1e-15)

    def test_times_are_step_multiples(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.3)
        report = run(u, _params(Scheme.ETD1, 0.125, model, ctx), 1.0)
        for k, rec in enumerate(report.records):
            assert rec.t == k * 0.125

    def test_rejects_non_integer_step_count(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.3)
        with pytest.raises(NonIntegerStepCount):
            run(u, _params(Scheme.ETD1, 0.3, model, ctx), 1.0)

    def test_stride_keeps_first_and_final(self):
        grid, model, ctx = _setup()
        u = _const(grid, 0.3)
        report = run(u, _params(Scheme.ETD1, 0.1, model, ctx), 0.7, stride=3)
        assert [r.step for r in report.records] == [0, 3, 6, 7]

    def test_deterministic_reruns_are_bit_identical(self):
        grid, model, ctx = _setup(n=32)
        u0 = make_ic(QuasiRandom(0.9, 7), grid)
        p = _params(Scheme.ETDRK2, 0.25, model, ctx)
        a = run(u0, p, 2.5)
        b = run(u0, p, 2.5)
        assert len(a.records) == len(b.records)
        for ra, rb in zip(a.records, b.records):
            assert ra == rb
        assert np.array_equal(a.final_field.values, b.final_field.values)

    def test_observers_fire_every_step(self):
        grid, model, ctx = _setup()
        seen = []
        u = _const(grid, 0.2)
        run(
            u,
            _params(Scheme.ETD1, 0.5, model, ctx),
            2.0,
            stride=4,
            observers=(lambda step, t, f: seen.append(step),),
        )
        assert seen == [0, 1, 2, 3, 4]


class TestUnconditionalInvariants:
    # module-scale version: the acceptance suite runs the full 500-step sweep
    def test_bound_and_mass_for_large_and_small_tau(self):
        grid, model, ctx = _setup(n=64)
        u0 = make_ic(QuasiRandom(0.9, 5), grid)
        for scheme in (Scheme.ETD1, Scheme.ETDRK2):
            for tau in (0.1, 10.0):
                p = _params(scheme, tau, model, ctx)
                report = run(u0, p, 50 * tau)
                sups = [r.sup_norm for r in report.records]
                masses = [r.mass for r in report.records]
                assert max(sups) <= 1.0 + 1e-12
                assert max(abs(m - masses[0]) for m in masses) <= 1e-10
