"""One-step exponential integrators for the mass-conserving flow.

Writing L = eps^2 Lap_h - kappa I for the stabilized linear part and N for
the stabilized nonlinear operator, the two workhorse schemes are

    ETD1:    u1 = phi_0(tau L) u + tau phi_1(tau L) N[u]
    ETDRK2:  pred = ETD1(u)
             u1   = pred + tau phi_2(tau L) (N[pred] - N[u])

Both preserve the bound |u| <= 1 and the mass for ANY tau > 0.  A stabilized
implicit-explicit Euler step (IMEX1) is included as a first-order cross-check
with the same fixed points, and a stabilized ETDRK2 stepper for the fourth
order Cahn-Hilliard flow is included for contrast runs; the latter conserves
mass but is expected to overshoot the bound, which is the point of the
comparison.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .diagnostics import RunRecorder, RunReport
from .errors import NonIntegerStepCount
from .field import Field
from .model import ModelParams, nonlinear_term, potential_terms
from .spectral import (
    OperatorContext,
    apply_mode_multiplier,
    apply_phi,
    phi_array,
)

# Stabilization for the Cahn-Hilliard contrast stepper: max |f'| on [-1, 1].
KAPPA_CH = 2.0

# Relative slack when matching t_end to a whole number of steps.
STEP_COUNT_TOL = 1e-9


class Scheme(enum.Enum):
    ETD1 = "etd1"
    ETDRK2 = "etdrk2"
    IMEX1 = "imex1"
    CH_ETDRK2 = "ch_etdrk2"


#: Schemes that promise the bound and exact mass; the Cahn-Hilliard contrast
#: stepper conserves mass but carries no bound guarantee.
BOUND_PRESERVING = (Scheme.ETD1, Scheme.ETDRK2, Scheme.IMEX1)


@dataclass(frozen=True)
class StepParams:
    tau: float
    scheme: Scheme
    model: ModelParams
    ctx: OperatorContext

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.ctx.kappa != self.model.kappa:
            raise ValueError(
                f"context kappa {self.ctx.kappa} != model kappa {self.model.kappa}"
            )
        if self.ctx.eps != self.model.eps:
            raise ValueError(
                f"context eps {self.ctx.eps} != model eps {self.model.eps}"
            )


def etd1_step(u: Field, p: StepParams) -> Field:
    n_u = nonlinear_term(u, p.model)
    linear = apply_phi(p.ctx, 0, p.tau, u)
    forced = apply_phi(p.ctx, 1, p.tau, n_u)
    return Field(u.grid, linear.values + p.tau * forced.values)


def etdrk2_step(u: Field, p: StepParams) -> Field:
    n_u = nonlinear_term(u, p.model)
    linear = apply_phi(p.ctx, 0, p.tau, u)
    forced = apply_phi(p.ctx, 1, p.tau, n_u)
    pred = Field(u.grid, linear.values + p.tau * forced.values)
    n_pred = nonlinear_term(pred, p.model)
    correction = apply_phi(
        p.ctx, 2, p.tau, Field(u.grid, n_pred.values - n_u.values)
    )
    return Field(u.grid, pred.values + p.tau * correction.values)


def imex1_step(u: Field, p: StepParams) -> Field:
    """Backward-Euler linear part, explicit stabilized nonlinear part.

    Per mode: u1_k = (u_k + tau N_k) / (1 - tau (eps^2 sigma_k - kappa)).
    """
    ctx = p.ctx

    def build():
        a = p.tau * (ctx.eps * ctx.eps * ctx.symbol.sigma - ctx.kappa)
        return (1.0 / (1.0 - a)).reshape(ctx.grid.shape)

    mult = ctx.cached(("imex", p.tau), build)
    n_u = nonlinear_term(u, p.model)
    return apply_mode_multiplier(
        u.grid, mult, Field(u.grid, u.values + p.tau * n_u.values)
    )


def _ch_nonlinear(u: Field, ctx: OperatorContext) -> Field:
    """-Lap_h (f(u) + kappa_CH u), applied through the symbol."""
    neg_sigma = ctx.cached(
        ("ch", "neg_sigma"), lambda: (-ctx.symbol.sigma).reshape(ctx.grid.shape)
    )
    f, _, _ = potential_terms(u.values)
    return apply_mode_multiplier(
        u.grid, neg_sigma, Field(u.grid, f + KAPPA_CH * u.values)
    )


def ch_etdrk2_step(u: Field, p: StepParams) -> Field:
    """Stabilized ETDRK2 for u_t = -Lap(eps^2 Lap u + f(u)).

    The linear symbol is ell_k = -sigma_k (eps^2 sigma_k - kappa_CH) <= 0
    with its own stabilization kappa_CH = 2; the model/context kappa plays
    no role here.  Conserves mass (ell_0 = 0, zero-mode forcing vanishes);
    does not preserve the bound.
    """
    ctx = p.ctx

    def multiplier(level):
        def build():
            sigma = ctx.symbol.sigma
            ell = -sigma * (ctx.eps * ctx.eps * sigma - KAPPA_CH)
            if ell.max() > 0.0:
                raise AssertionError("CH symbol produced a positive mode")
            return phi_array(level, p.tau * ell).reshape(ctx.grid.shape)

        return ctx.cached(("ch", level, p.tau), build)

    n_u = _ch_nonlinear(u, ctx)
    linear = apply_mode_multiplier(u.grid, multiplier(0), u)
    forced = apply_mode_multiplier(u.grid, multiplier(1), n_u)
    pred = Field(u.grid, linear.values + p.tau * forced.values)
    n_pred = _ch_nonlinear(pred, ctx)
    correction = apply_mode_multiplier(
        u.grid, multiplier(2), Field(u.grid, n_pred.values - n_u.values)
    )
    return Field(u.grid, pred.values + p.tau * correction.values)


_STEP_FNS = {
    Scheme.ETD1: etd1_step,
    Scheme.ETDRK2: etdrk2_step,
    Scheme.IMEX1: imex1_step,
    Scheme.CH_ETDRK2: ch_etdrk2_step,
}


def step_once(u: Field, p: StepParams) -> Field:
    return _STEP_FNS[p.scheme](u, p)


def run(
    u0: Field,
    p: StepParams,
    t_end: float,
    stride: int = 1,
    observers: tuple = (),
    with_radius: bool = False,
    config_echo: dict | None = None,
) -> RunReport:
    """March u0 to t_end and return the recorded report.

    t_end must be a whole number of steps within STEP_COUNT_TOL.  The
    recorder fires at step 0, every `stride` steps, and the final step;
    extra observers are called at every step with (step, t, field) and do
    their own filtering.  Times are computed as step * tau, never by
    accumulation.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    ratio = t_end / p.tau
    steps = int(round(ratio))
    if abs(ratio - steps) > STEP_COUNT_TOL:
        raise NonIntegerStepCount(
            f"t_end {t_end} is not an integer multiple of tau {p.tau} "
            f"(ratio {ratio})"
        )
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    echo = {
        "scheme": p.scheme.value,
        "tau": p.tau,
        "t_end": t_end,
        "steps": steps,
        "eps": p.model.eps,
        "kappa": p.model.kappa,
        "dim": p.ctx.grid.dim,
        "n_per_dim": list(p.ctx.grid.n_per_dim),
        "placement": p.ctx.grid.placement,
        "record_stride": stride,
    }
    if config_echo:
        echo.update(config_echo)

    recorder = RunRecorder(
        p.model, stride=stride, total_steps=steps, with_radius=with_radius
    )
    step_fn = _STEP_FNS[p.scheme]
    u = u0
    recorder.observe(0, 0.0, u)
    for obs in observers:
        obs(0, 0.0, u)
    for k in range(1, steps + 1):
        u = step_fn(u, p)
        t = k * p.tau
        recorder.observe(k, t, u)
        for obs in observers:
            obs(k, t, u)
    return recorder.build_report(config=echo, final_field=u)
