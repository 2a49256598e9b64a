"""Command-line entry point: simulate, converge-time, converge-space, bubble.

Configuration is JSON with a fixed schema; unknown keys are hard errors so
typos cannot silently change a run.  Exit codes: 0 success, 1 configuration
or runtime error, 2 invariant violation (bound or mass) in a run of a
bound-preserving scheme.  The Cahn-Hilliard contrast scheme is exempt from
the gate by design; violating the bound is what it is there to demonstrate.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import figures, io
from .diagnostics import (
    RunReport,
    energy_increases,
    mass_drift,
    mass_verdict,
    max_sup_norm,
    mbp_verdict,
    min_g_integral,
)
from .errors import ConfigError, SolverError
from .field import CELL, VERTEX, Field, GridSpec
from .harness import (
    Bubble,
    CosProduct,
    InitialCondition,
    QuasiRandom,
    converge_space,
    converge_time,
    make_ic,
)
from .model import ModelParams
from .spectral import OperatorContext, build_symbol
from .stepper import BOUND_PRESERVING, Scheme, StepParams, run

# Relative slack when matching snapshot times to steps.
SNAPSHOT_TOL = 1e-9


# ---------------------------------------------------------------------------
# configuration parsing


def _pop(doc: dict, key: str, kinds, where: str, required: bool = True, default=None):
    if key not in doc:
        if required:
            raise ConfigError(f"{where}: missing required field {key!r}")
        return default
    val = doc.pop(key)
    if kinds is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kinds) or isinstance(val, bool):
        names = kinds.__name__ if isinstance(kinds, type) else "/".join(
            k.__name__ for k in kinds
        )
        raise ConfigError(
            f"{where}: field {key!r} must be {names}, got {type(val).__name__}"
        )
    return val


def _reject_unknown(doc: dict, where: str):
    if doc:
        raise ConfigError(f"{where}: unknown field(s) {sorted(doc)}")


def _parse_ic(doc, where: str = "config.ic") -> InitialCondition:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: must be an object with a 'kind'")
    doc = dict(doc)
    kind = _pop(doc, "kind", str, where)
    if kind == "cos_product":
        _reject_unknown(doc, where)
        return CosProduct()
    if kind == "quasi_random":
        amplitude = _pop(doc, "amplitude", float, where, required=False, default=0.9)
        seed = _pop(doc, "seed", int, where, required=False, default=0)
        _reject_unknown(doc, where)
        return QuasiRandom(amplitude=amplitude, seed=seed)
    if kind == "bubble":
        inner = _pop(doc, "inner", float, where, required=False, default=-0.5)
        outer = _pop(doc, "outer", float, where, required=False, default=0.5)
        radius = _pop(doc, "radius", float, where, required=False, default=0.25)
        _reject_unknown(doc, where)
        return Bubble(inner=inner, outer=outer, radius=radius)
    raise ConfigError(f"{where}: unknown ic kind {kind!r}")


def _parse_scheme(name: str, where: str) -> Scheme:
    try:
        return Scheme(name)
    except ValueError:
        valid = ", ".join(s.value for s in Scheme)
        raise ConfigError(f"{where}: scheme must be one of {valid}, got {name!r}")


@dataclass(frozen=True)
class RunConfig:
    dim: int
    n_per_dim: tuple[int, ...]
    eps: float
    kappa: float
    scheme: Scheme
    tau: float
    t_end: float
    ic: InitialCondition
    record_stride: int
    snapshot_times: tuple[float, ...]
    output_dir: str
    placement: str


def parse_run_config(doc: dict, where: str = "config") -> RunConfig:
    doc = dict(doc)
    dim = _pop(doc, "dim", int, where)
    n_per_dim = _pop(doc, "n_per_dim", list, where)
    if not all(isinstance(n, int) and not isinstance(n, bool) for n in n_per_dim):
        raise ConfigError(f"{where}: n_per_dim must be a list of integers")
    eps = _pop(doc, "eps", float, where)
    kappa = _pop(doc, "kappa", float, where, required=False, default=4.0)
    scheme = _parse_scheme(_pop(doc, "scheme", str, where), where)
    tau = _pop(doc, "tau", float, where)
    t_end = _pop(doc, "t_end", float, where)
    ic = _parse_ic(_pop(doc, "ic", dict, where))
    record_stride = _pop(doc, "record_stride", int, where, required=False, default=1)
    snapshot_times = _pop(doc, "snapshot_times", list, where, required=False, default=[])
    output_dir = _pop(doc, "output_dir", str, where, required=False, default=".")
    placement = _pop(doc, "placement", str, where, required=False, default=CELL)
    _reject_unknown(doc, where)

    if placement not in (CELL, VERTEX):
        raise ConfigError(f"{where}: placement must be 'cell' or 'vertex'")
    if not tau > 0:
        raise ConfigError(f"{where}: tau must be positive")
    if t_end < 0:
        raise ConfigError(f"{where}: t_end must be nonnegative")
    if kappa < 4.0:
        raise ConfigError(f"{where}: kappa must be >= 4")
    if record_stride < 1:
        raise ConfigError(f"{where}: record_stride must be >= 1")
    times = []
    for t in snapshot_times:
        if isinstance(t, int) and not isinstance(t, bool):
            t = float(t)
        if not isinstance(t, float):
            raise ConfigError(f"{where}: snapshot_times must be numbers")
        ratio = t / tau
        if abs(ratio - round(ratio)) > SNAPSHOT_TOL or not 0 <= t <= t_end:
            raise ConfigError(
                f"{where}: snapshot time {t} is not a multiple of tau within "
                f"[0, t_end]"
            )
        times.append(t)
    return RunConfig(
        dim=dim,
        n_per_dim=tuple(n_per_dim),
        eps=eps,
        kappa=kappa,
        scheme=scheme,
        tau=tau,
        t_end=t_end,
        ic=ic,
        record_stride=record_stride,
        snapshot_times=tuple(times),
        output_dir=output_dir,
        placement=placement,
    )


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{path}: JSON parse error at line {e.lineno} column {e.colno}: {e.msg}"
        )
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


def _apply_seed_override(cfg: RunConfig, seed: int | None) -> RunConfig:
    if seed is None or not isinstance(cfg.ic, QuasiRandom):
        return cfg
    ic = QuasiRandom(amplitude=cfg.ic.amplitude, seed=seed)
    return RunConfig(**{**cfg.__dict__, "ic": ic})


# ---------------------------------------------------------------------------
# simulate


class _SnapshotWriter:
    """Observer that writes FLD1 + PGM at configured times."""

    def __init__(self, cfg: RunConfig, outdir: Path):
        self.outdir = outdir
        self.by_step = {int(round(t / cfg.tau)): t for t in cfg.snapshot_times}
        self.mid_z = cfg.n_per_dim[2] // 2 if cfg.dim == 3 else None
        self.entries: list[tuple[float, str]] = []

    def __call__(self, step: int, t: float, u: Field) -> None:
        if step not in self.by_step:
            return
        t_cfg = self.by_step[step]
        # concatenate rather than with_suffix: a time tag like 0.2 would
        # otherwise be mistaken for an extension and clobbered
        stem = f"snapshot_{figures.nice_time(t_cfg)}"
        fld = self.outdir / f"{stem}.fld"
        io.write_field_snapshot(u, fld)
        io.write_pgm_slice(u, self.outdir / f"{stem}.pgm", z_index=self.mid_z)
        self.entries.append((t_cfg, str(fld)))


def exit_code_for(report: RunReport, scheme: Scheme) -> int:
    """0, or 2 when a bound-preserving run violated its invariants."""
    if scheme not in BOUND_PRESERVING:
        return 0
    if mbp_verdict(report) == "violated" or mass_verdict(report) == "drifted":
        return 2
    return 0


def _echo_ic(ic: InitialCondition) -> dict:
    if isinstance(ic, CosProduct):
        return {"kind": "cos_product"}
    if isinstance(ic, QuasiRandom):
        return {"kind": "quasi_random", "amplitude": ic.amplitude, "seed": ic.seed}
    return {"kind": "bubble", "inner": ic.inner, "outer": ic.outer, "radius": ic.radius}


def cmd_simulate(cfg: RunConfig) -> int:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(cfg.dim, cfg.n_per_dim, cfg.placement)
    u0 = make_ic(cfg.ic, grid)
    model = ModelParams(eps=cfg.eps, kappa=cfg.kappa)
    ctx = OperatorContext(build_symbol(grid), eps=cfg.eps, kappa=cfg.kappa)
    params = StepParams(tau=cfg.tau, scheme=cfg.scheme, model=model, ctx=ctx)
    snap = _SnapshotWriter(cfg, outdir)

    report = run(
        u0,
        params,
        cfg.t_end,
        stride=cfg.record_stride,
        observers=(snap,) if cfg.snapshot_times else (),
        with_radius=isinstance(cfg.ic, Bubble),
        config_echo={"ic": _echo_ic(cfg.ic), "output_dir": cfg.output_dir},
    )
    report.snapshots = snap.entries

    last = report.records[-1]
    rises = energy_increases(report)
    verdicts = {
        "mbp": mbp_verdict(report),
        "mass": mass_verdict(report),
        "energy_monotone": not rises,
        "gated": cfg.scheme in BOUND_PRESERVING,
    }
    summary = {
        "steps": last.step,
        "t_end": cfg.t_end,
        "final_mass": last.mass,
        "final_sup_norm": last.sup_norm,
        "final_energy": last.energy,
        "mass_drift": mass_drift(report),
        "max_sup_norm": max_sup_norm(report),
        "min_g_integral": min_g_integral(report),
    }
    if last.radius is not None:
        summary["final_radius"] = last.radius

    io.write_series_csv(report, outdir / "series.csv")
    io.write_report_json(report, verdicts, summary, outdir / "report.json")
    figures.plot_series(report, outdir / "series.png")
    figures.plot_field(report.final_field, outdir / "final_state.png",
                       title=f"t = {cfg.t_end}")

    print(f"[simulate] {cfg.scheme.value} {last.step} steps to t = {cfg.t_end}")
    print(f"[simulate] mass {verdicts['mass']} (drift {summary['mass_drift']:.3e}),"
          f" bound {verdicts['mbp']} (max sup {summary['max_sup_norm']:.15g})")
    if rises:
        print(f"[simulate] WARNING: energy rose on {len(rises)} record pair(s); "
              f"largest rise {max(r[2] for r in rises):.3e}")
    print(f"[simulate] wrote {outdir / 'series.csv'}, {outdir / 'report.json'}, "
          f"{outdir / 'series.png'}")
    return exit_code_for(report, cfg.scheme)


# ---------------------------------------------------------------------------
# convergence subcommands


def _print_table(table) -> None:
    print(f"{'resolution':>14} {'l2_error':>12} {'rate':>6} "
          f"{'linf_error':>12} {'rate':>6}")
    for row in table.rows:
        r2 = "  --  " if row.l2_rate is None else f"{row.l2_rate:6.2f}"
        rinf = "  --  " if row.linf_rate is None else f"{row.linf_rate:6.2f}"
        print(f"{row.resolution:>14.9g} {row.l2_error:>12.4e} {r2} "
              f"{row.linf_error:>12.4e} {rinf}")


def _write_table(table, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_table_csv(table, outdir / "table.csv")
    figures.plot_convergence(table, outdir / "table.png")
    print(f"[converge] wrote {outdir / 'table.csv'} and {outdir / 'table.png'}")


def cmd_converge_time(doc: dict, threads: int) -> int:
    where = "config"
    doc = dict(doc)
    scheme = _parse_scheme(_pop(doc, "scheme", str, where), where)
    dim = _pop(doc, "dim", int, where, required=False, default=2)
    n_per_dim = _pop(doc, "n_per_dim", list, where)
    eps = _pop(doc, "eps", float, where)
    kappa = _pop(doc, "kappa", float, where, required=False, default=4.0)
    taus = _pop(doc, "taus", list, where)
    benchmark_tau = _pop(doc, "benchmark_tau", float, where)
    output_dir = _pop(doc, "output_dir", str, where, required=False, default=".")
    _reject_unknown(doc, where)

    grid = GridSpec(dim, tuple(n_per_dim))
    table = converge_time(
        scheme, grid, eps, [float(t) for t in taus], benchmark_tau,
        kappa=kappa, threads=threads,
    )
    _print_table(table)
    _write_table(table, Path(output_dir))
    return 0


def cmd_converge_space(doc: dict, threads: int) -> int:
    where = "config"
    doc = dict(doc)
    dim = _pop(doc, "dim", int, where, required=False, default=2)
    sizes = _pop(doc, "sizes", list, where)
    eps = _pop(doc, "eps", float, where)
    kappa = _pop(doc, "kappa", float, where, required=False, default=4.0)
    tau = _pop(doc, "tau", float, where)
    benchmark_n = _pop(doc, "benchmark_n", int, where, required=False, default=None)
    output_dir = _pop(doc, "output_dir", str, where, required=False, default=".")
    _reject_unknown(doc, where)

    table = converge_space(
        [int(n) for n in sizes], eps, tau, dim=dim, kappa=kappa,
        benchmark_n=benchmark_n, threads=threads,
    )
    _print_table(table)
    _write_table(table, Path(output_dir))
    return 0


# ---------------------------------------------------------------------------
# bubble preset


def bubble_config(n: int, tau: float, t_end: float, eps: float,
                  output_dir: str, stride: int) -> RunConfig:
    """Shrinking/steady bubble benchmark: 3D ball, ETDRK2."""
    wanted = (1.0, 10.0, 15.0, t_end)
    times = []
    for t in wanted:
        ratio = t / tau
        if 0 < t <= t_end and abs(ratio - round(ratio)) <= SNAPSHOT_TOL:
            if t not in times:
                times.append(t)
    return RunConfig(
        dim=3,
        n_per_dim=(n, n, n),
        eps=eps,
        kappa=4.0,
        scheme=Scheme.ETDRK2,
        tau=tau,
        t_end=t_end,
        ic=Bubble(inner=-0.5, outer=0.5, radius=0.25),
        record_stride=stride,
        snapshot_times=tuple(times),
        output_dir=output_dir,
        placement=CELL,
    )


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcac",
        description="Mass-conserving Allen-Cahn solver with bound-preserving "
                    "exponential time stepping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--output", help="override config output_dir")
    sim.add_argument("--seed", type=int, help="override the ic seed")
    sim.add_argument("--threads", type=int, default=1)

    for name, help_text in (
        ("converge-time", "temporal self-convergence study"),
        ("converge-space", "spatial self-convergence study"),
    ):
        c = sub.add_parser(name, help=help_text)
        c.add_argument("--config", required=True)
        c.add_argument("--output", help="override config output_dir")
        c.add_argument("--seed", type=int, help=argparse.SUPPRESS)
        c.add_argument("--threads", type=int, default=1)

    bub = sub.add_parser("bubble", help="3D shrinking-bubble benchmark preset")
    bub.add_argument("--n", type=int, default=64)
    bub.add_argument("--tau", type=float, default=0.1)
    bub.add_argument("--t-end", type=float, default=100.0)
    bub.add_argument("--eps", type=float, default=0.01)
    bub.add_argument("--stride", type=int, default=1)
    bub.add_argument("--output", default="bubble_out")
    bub.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    bub.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            doc = load_config(args.config)
            cfg = parse_run_config(doc)
            if args.output:
                cfg = RunConfig(**{**cfg.__dict__, "output_dir": args.output})
            cfg = _apply_seed_override(cfg, args.seed)
            return cmd_simulate(cfg)
        if args.command == "converge-time":
            doc = load_config(args.config)
            if args.output:
                doc["output_dir"] = args.output
            return cmd_converge_time(doc, args.threads)
        if args.command == "converge-space":
            doc = load_config(args.config)
            if args.output:
                doc["output_dir"] = args.output
            return cmd_converge_space(doc, args.threads)
        if args.command == "bubble":
            cfg = bubble_config(args.n, args.tau, args.t_end, args.eps,
                                args.output, args.stride)
            return cmd_simulate(cfg)
    except (SolverError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
