"""Initial conditions and desk-scale convergence studies.

The temporal study holds one grid fixed and halves tau against an ETDRK2
benchmark run; the spatial study doubles the grid at fixed tau against a
finer benchmark grid restricted by exact index subsampling, which is why it
uses vertex node placement (vertex grids nest exactly under doubling).
Both integrate the smooth product-of-cosines initial data to T = 1.

Random initial data comes from a hand-rolled SplitMix64 generator so that
fields are bit-identical for a given seed on every platform and ecosystem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NonNestedGrids, NonPositiveError
from .field import VERTEX, Field, GridSpec, error_norms
from .model import ModelParams
from .spectral import OperatorContext, build_symbol
from .stepper import Scheme, StepParams, run

#: Final time for both convergence studies.
STUDY_END_TIME = 1.0


@dataclass(frozen=True)
class CosProduct:
    """cos(2 pi x) cos(2 pi y), constant along z in 3D."""


@dataclass(frozen=True)
class QuasiRandom:
    """Deterministic pseudo-random values in (-amplitude, amplitude)."""

    amplitude: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")


@dataclass(frozen=True)
class Bubble:
    """inner value strictly inside the ball of given radius at the origin."""

    inner: float = -0.5
    outer: float = 0.5
    radius: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.radius < 0.5:
            raise ValueError(f"radius must be in (0, 0.5), got {self.radius}")
        if abs(self.inner) > 1.0 or abs(self.outer) > 1.0:
            raise ValueError("bubble values must lie in [-1, 1]")


InitialCondition = Union[CosProduct, QuasiRandom, Bubble]

_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_M1 = 0xBF58476D1CE4E5B9
_SM64_M2 = 0x94D049BB133111EB
_U64 = 0xFFFFFFFFFFFFFFFF


def splitmix64_uniform(seed: int, count: int) -> np.ndarray:
    """count doubles in (-1, 1) from the SplitMix64 sequence for seed.

    Vectorized but exactly the scalar algorithm: state_i = seed + i * gamma
    (wrapping), mixed, top 53 bits mapped through ((z >> 11) + 0.5) * 2^-53
    into (0, 1), then affinely onto (-1, 1).  All steps are exact in
    uint64/float64, so the output is bit-identical everywhere.
    """
    idx = np.arange(1, count + 1, dtype=np.uint64)
    state = np.uint64(seed & _U64) + idx * np.uint64(_SM64_GAMMA)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM64_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM64_M2)
    z = z ^ (z >> np.uint64(31))
    top53 = (z >> np.uint64(11)).astype(np.float64)
    return (top53 + 0.5) * 2.0**-52 - 1.0


def make_ic(ic: InitialCondition, grid: GridSpec) -> Field:
    if isinstance(ic, CosProduct):
        x = grid.axis_coords(0)
        y = grid.axis_coords(1)
        shaped = np.multiply.outer(np.cos(2.0 * np.pi * x), np.cos(2.0 * np.pi * y))
        if grid.dim == 3:
            shaped = np.broadcast_to(shaped[:, :, None], grid.shape)
        return Field(grid, np.ascontiguousarray(shaped))
    if isinstance(ic, QuasiRandom):
        vals = ic.amplitude * splitmix64_uniform(ic.seed, grid.size)
        return Field(grid, vals)
    if isinstance(ic, Bubble):
        coords = grid.meshgrid()
        r_sq = sum(c * c for c in coords)
        shaped = np.where(r_sq < ic.radius * ic.radius, ic.inner, ic.outer)
        return Field(grid, np.ascontiguousarray(shaped, dtype=np.float64))
    raise TypeError(f"unknown initial condition {ic!r}")


def rates(errors: list[float]) -> list[float]:
    """Observed orders log2(e_{k-1} / e_k) for successively halved resolution."""
    for e in errors:
        if not e > 0.0:
            raise NonPositiveError(f"cannot take a rate of error {e!r}")
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


@dataclass(frozen=True)
class TableRow:
    resolution: float  # tau for temporal studies, h for spatial ones
    l2_error: float
    l2_rate: float | None
    linf_error: float
    linf_rate: float | None


@dataclass(frozen=True)
class ConvergenceTable:
    kind: str  # "time" | "space"
    rows: tuple[TableRow, ...]
    placement: str


def _tabulate(kind, resolutions, pairs, placement) -> ConvergenceTable:
    l2s = [p[0] for p in pairs]
    linfs = [p[1] for p in pairs]
    # a one-row table has no rate to take (and a self-benchmark row may
    # legitimately hold an exact zero, which rates() rejects)
    l2_rates = [None] + (rates(l2s) if len(l2s) > 1 else [])
    linf_rates = [None] + (rates(linfs) if len(linfs) > 1 else [])
    rows = tuple(
        TableRow(res, e2, r2, einf, rinf)
        for res, e2, r2, einf, rinf in zip(
            resolutions, l2s, l2_rates, linfs, linf_rates
        )
    )
    return ConvergenceTable(kind=kind, rows=rows, placement=placement)


def _params(scheme, tau, eps, kappa, ctx) -> StepParams:
    return StepParams(
        tau=tau, scheme=scheme, model=ModelParams(eps=eps, kappa=kappa), ctx=ctx
    )


def _final_state(u0, params, t_end) -> Field:
    steps = max(1, int(round(t_end / params.tau)))
    report = run(u0, params, t_end, stride=steps)
    return report.final_field


def _map_maybe_threaded(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def converge_time(
    scheme: Scheme,
    grid: GridSpec,
    eps: float,
    taus: list[float],
    benchmark_tau: float,
    kappa: float = 4.0,
    benchmark: Field | None = None,
    threads: int = 1,
) -> ConvergenceTable:
    """Temporal self-convergence against an ETDRK2 benchmark run.

    taus must be successive halvings; benchmark_tau must divide every tau
    and be at most min(taus).  Passing a precomputed benchmark field (from
    an earlier study on the same grid) skips recomputing it.
    """
    if not taus:
        raise ValueError("need at least one tau")
    for a, b in zip(taus, taus[1:]):
        if b != a / 2.0:
            raise ValueError(f"taus must be successive halvings, got {a} then {b}")
    for tau in taus:
        ratio = tau / benchmark_tau
        if abs(ratio - round(ratio)) > 1e-9 or benchmark_tau > tau:
            raise ValueError(
                f"benchmark_tau {benchmark_tau} must divide tau {tau}"
            )
    u0 = make_ic(CosProduct(), grid)
    ctx = OperatorContext(build_symbol(grid), eps=eps, kappa=kappa)
    if benchmark is None:
        benchmark = _final_state(
            u0, _params(Scheme.ETDRK2, benchmark_tau, eps, kappa, ctx), STUDY_END_TIME
        )

    def one(tau):
        final = _final_state(u0, _params(scheme, tau, eps, kappa, ctx), STUDY_END_TIME)
        return error_norms(final, benchmark)

    pairs = _map_maybe_threaded(one, taus, threads)
    return _tabulate("time", taus, pairs, grid.placement)


def restrict(fine: Field, coarse_grid: GridSpec) -> Field:
    """Exact index subsampling of a vertex-placed field onto a coarser grid.

    Values are bitwise copies of the fine field at the shared nodes; the
    grids must nest (every fine size an integer multiple of the coarse one).
    """
    if fine.grid.placement != VERTEX or coarse_grid.placement != VERTEX:
        raise NonNestedGrids("restriction requires vertex placement on both grids")
    strides = []
    for nf, nc in zip(fine.grid.n_per_dim, coarse_grid.n_per_dim):
        if nf % nc != 0:
            raise NonNestedGrids(f"fine size {nf} is not a multiple of coarse {nc}")
        strides.append(nf // nc)
    slicer = tuple(slice(None, None, s) for s in strides)
    return Field(coarse_grid, np.ascontiguousarray(fine.array[slicer]))


def converge_space(
    sizes: list[int],
    eps: float,
    tau: float,
    dim: int = 2,
    kappa: float = 4.0,
    benchmark_n: int | None = None,
    threads: int = 1,
) -> ConvergenceTable:
    """Spatial self-convergence of ETDRK2 at fixed tau, vertex placement.

    sizes must be successive doublings; the benchmark grid (default twice
    the finest) is integrated identically and restricted by subsampling.
    """
    if not sizes:
        raise ValueError("need at least one size")
    for a, b in zip(sizes, sizes[1:]):
        if b != 2 * a:
            raise ValueError(f"sizes must be successive doublings, got {a} then {b}")
    if benchmark_n is None:
        benchmark_n = 2 * sizes[-1]
    if benchmark_n < 2 * sizes[-1]:
        raise ValueError(
            f"benchmark grid {benchmark_n} must be at least twice the finest "
            f"size {sizes[-1]}"
        )
    for n in sizes:
        if benchmark_n % n != 0:
            raise NonNestedGrids(
                f"benchmark size {benchmark_n} does not nest over {n}"
            )

    def study_grid(n):
        return GridSpec(dim, (n,) * dim, placement=VERTEX)

    bench_grid = study_grid(benchmark_n)
    bench_ctx = OperatorContext(build_symbol(bench_grid), eps=eps, kappa=kappa)
    bench = _final_state(
        make_ic(CosProduct(), bench_grid),
        _params(Scheme.ETDRK2, tau, eps, kappa, bench_ctx),
        STUDY_END_TIME,
    )

    def one(n):
        grid = study_grid(n)
        ctx = OperatorContext(build_symbol(grid), eps=eps, kappa=kappa)
        final = _final_state(
            make_ic(CosProduct(), grid),
            _params(Scheme.ETDRK2, tau, eps, kappa, ctx),
            STUDY_END_TIME,
        )
        return error_norms(final, restrict(bench, grid))

    pairs = _map_maybe_threaded(one, sizes, threads)
    hs = [1.0 / n for n in sizes]
    return _tabulate("space", hs, pairs, VERTEX)
