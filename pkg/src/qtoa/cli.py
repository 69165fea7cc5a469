"""Command-line front end: ``qtoa <command> [flags]``.

Every command writes a CSV table plus a JSON manifest into the output
directory (``--output-dir``, else ``$QTOA_OUTPUT_DIR``, else ``./qtoa_output``)
and prints a one-line summary.  Flags may also be given in a config file of
``key = value`` lines (flag names without leading dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .arrival import (
    MomentumDomain,
    Regulator,
    RegulatorKind,
    _correction_factor_quad,
    correction_factor_closed_form,
    tau_quant_gaussian,
    tau_quant_momentum,
    tau_quant_position_quadrature,
)
from .evolution import EvolutionRegulator, GridSpec, collapse_trajectory
from .physics_model import Branch, EigenState, GaussianPacket, PhysicalConstants, classical_toa
from .quadrature import QuadConfig
from .sweeps import (
    ASSERTIONS,
    PRESETS,
    SweepKind,
    SweepSpec,
    SweepTable,
    preset_spec,
    format_cell,
    log_grid,
    run_sweep,
    verify_sweep,
)

OUTPUT_ENV = "QTOA_OUTPUT_DIR"
DEFAULT_OUTPUT = "qtoa_output"


class UsageError(Exception):
    pass


def fmt(v) -> str:
    return format_cell(v)


def finite_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("constants and output")
    g.add_argument("--mu", type=finite_float, default=1.0, help="particle mass mu [mass units]")
    g.add_argument("--hbar", type=finite_float, default=1.0, help="reduced Planck constant [action units]")
    g.add_argument("--output-dir", default=None,
                   help=f"output directory; ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT} when omitted")
    g.add_argument("--config", default=None, help="file of 'key = value' lines using flag names")
    q = p.add_argument_group("quadrature")
    q.add_argument("--abs-tol", type=finite_float, default=1e-10, help="absolute tolerance [result units]")
    q.add_argument("--rel-tol", type=finite_float, default=1e-8, help="relative tolerance [dimensionless]")
    q.add_argument("--max-subdivisions", type=positive_int, default=2000, help="adaptive panel budget [count]")
    q.add_argument("--tail-cut-tol", type=finite_float, default=1e-12,
                   help="bound on discarded tail mass [result units]")


def _geometry(p: argparse.ArgumentParser, k0: bool = True, sigma0: bool = True) -> None:
    g = p.add_argument_group("geometry")
    g.add_argument("--q0", type=finite_float, default=-5.0, help="initial packet centre [length]")
    g.add_argument("--X", type=finite_float, default=0.0, help="arrival point [length]")
    if sigma0:
        g.add_argument("--sigma0", type=finite_float, default=0.5, help="initial position width [length]")
    if k0:
        g.add_argument("--k0", type=finite_float, default=1.0, help="mean wave number [1/length]")


def _regulator(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    g = p.add_argument_group("regulator")
    g.add_argument("--regulator", choices=[k.value for k in RegulatorKind],
                   default="causal", help="momentum regulator: none, causal exp(-eps/p), relaxed exp(-eps/|p|)")
    if sweep:
        g.add_argument("--epsilons", type=finite_float, nargs="+", default=[0.5, 0.1, 0.01],
                       help="regulator strengths [momentum]")
        g.add_argument("--domains", choices=[d.value for d in MomentumDomain], nargs="+",
                       default=["positive"], help="momentum integration domains")
    else:
        g.add_argument("--epsilon", type=finite_float, default=0.01, help="regulator strength [momentum]")
        g.add_argument("--domain", choices=[d.value for d in MomentumDomain], default="positive",
                       help="momentum integration domain")


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="qtoa", description="Quantum time-of-arrival calculations.",
                                     formatter_class=fmt_cls)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("evolve", help="evolve a regulated arrival-time eigenfunction", formatter_class=fmt_cls)
    p.add_argument("--branch", choices=[b.value for b in Branch], default="right", help="eigenfunction branch")
    p.add_argument("--tau", type=finite_float, default=5.0, help="eigenvalue (arrival time) [time]")
    p.add_argument("--X", type=finite_float, default=0.0, help="arrival point [length]")
    p.add_argument("--strength", type=finite_float, default=1e-3,
                   help="Gaussian momentum cutoff exp(-strength p^2) [1/momentum^2]")
    p.add_argument("--q-min", type=finite_float, default=-30.0, help="grid start [length]")
    p.add_argument("--q-max", type=finite_float, default=30.0, help="grid end [length]")
    p.add_argument("--n-points", type=positive_int, default=1201, help="grid points [count]")
    p.add_argument("--times", type=finite_float, nargs="+", default=[1.0, 2.0, 3.0, 4.0, 5.0],
                   help="snapshot times [time]")
    _common(p)

    p = sub.add_parser("correction", help="correction factor at x = k0*sigma0", formatter_class=fmt_cls)
    p.add_argument("--x", type=finite_float, default=1.0, help="k0*sigma0 [dimensionless]")
    _common(p)

    p = sub.add_parser("tau-position", help="arrival time by position-space quadrature", formatter_class=fmt_cls)
    _geometry(p)
    _common(p)

    p = sub.add_parser("tau-momentum", help="regulated arrival time in the momentum representation",
                       formatter_class=fmt_cls)
    _geometry(p)
    _regulator(p)
    _common(p)

    p = sub.add_parser("sweep", help="parameter sweeps written as CSV tables", formatter_class=fmt_cls)
    p.add_argument("--preset", choices=list(PRESETS), default=None,
                   help="named reference sweep; only --grid-points and the constants apply on top")
    p.add_argument("--kind", choices=[k.value for k in SweepKind], default="tau-vs-k0", help="sweep kind")
    p.add_argument("--grid-min", type=finite_float, default=0.01, help="smallest grid value [grid units]")
    p.add_argument("--grid-max", type=finite_float, default=10.0, help="largest grid value [grid units]")
    p.add_argument("--grid-points", type=positive_int, default=200, help="log-spaced grid points [count]")
    p.add_argument("--include-zero", action="store_true", help="prepend 0 to the grid")
    p.add_argument("--from-manifest", default=None, help="rerun a sweep from its manifest JSON")
    p.add_argument("--verify", nargs="+", choices=sorted(ASSERTIONS), default=None,
                   help="property suites to check; exit 1 if any fails")
    p.add_argument("--workers", type=positive_int, default=1, help="worker processes [count]")
    p.add_argument("--stem", default=None, help="output file stem; preset or kind name when omitted")
    _geometry(p)
    _regulator(p, sweep=True)
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# config merging


def _read_config(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    cp.optionxform = str
    cp.read_string("[qtoa]\n" + text)
    return dict(cp["qtoa"])


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        values = _read_config(args.config)
    except UsageError as exc:
        parser.error(str(exc))
    sub = _subparser(parser, args.command)
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            parser.error(f"unknown config key {key!r} for {args.command}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            continue
        items = raw.split() if action.nargs in ("+", "*") else [raw.strip()]
        conv = action.type or str
        try:
            vals = [conv(v) for v in items]
        except (argparse.ArgumentTypeError, ValueError) as exc:
            parser.error(f"config {key}: {exc}")
        if action.choices is not None and any(v not in action.choices for v in vals):
            parser.error(f"config {key}: invalid choice {raw!r}")
        defaults[dest] = vals if action.nargs in ("+", "*") else vals[0]
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# commands


def _constants(a) -> PhysicalConstants:
    return PhysicalConstants(mu=a.mu, hbar=a.hbar)


def _quad(a) -> QuadConfig:
    return QuadConfig(a.abs_tol, a.rel_tol, a.max_subdivisions, a.tail_cut_tol)


def _output_dir(a) -> Path:
    out = Path(a.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"output directory {out} is not writable: {exc}")
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def _run_record(a) -> dict:
    rec = {k: v for k, v in vars(a).items() if k not in ("config", "output_dir")}
    return {"artifact": "qtoa", "version": __version__, "arguments": rec}


def _write_single(a, stem: str, columns: list[str], rows: list[list]) -> Path:
    table = SweepTable(columns, rows, _run_record(a))
    paths = table.write(_output_dir(a), stem)
    return paths[0]


def cmd_correction(a) -> str:
    if a.x < 0:
        raise UsageError("--x must be >= 0")
    r = _correction_factor_quad(a.x, _quad(a))
    closed = correction_factor_closed_form(a.x)
    path = _write_single(a, "correction", ["x", "correction", "correction_closed_form", "error_estimate"],
                         [[a.x, r.value, closed, r.error_estimate]])
    return (f"correction x={fmt(a.x)} quadrature={fmt(r.value)} closed_form={fmt(closed)} "
            f"abs_diff={fmt(abs(r.value - closed))} -> {path}")


def _packet(a) -> GaussianPacket:
    return GaussianPacket(a.q0, a.sigma0, a.k0)


def cmd_tau_position(a) -> str:
    c, cfg = _constants(a), _quad(a)
    pk = _packet(a)
    r = tau_quant_position_quadrature(pk, a.X, c, cfg)
    t_class = classical_toa(c, a.X, pk.q0, pk.p0(c))
    t_gauss = tau_quant_gaussian(pk, a.X, c, cfg).tau_quant
    path = _write_single(a, "tau_position",
                         ["k0", "sigma0", "q0", "X", "tau_class", "tau_gaussian", "tau_quant", "imag_residual",
                          "error_estimate"],
                         [[a.k0, a.sigma0, a.q0, a.X, t_class, t_gauss, r.tau_quant, r.imag_residual,
                           r.error_estimate]])
    return (f"tau-position tau_quant={fmt(r.tau_quant)} tau_gaussian={fmt(t_gauss)} tau_class={fmt(t_class)} "
            f"imag={fmt(r.imag_residual)} -> {path}")


def cmd_tau_momentum(a) -> str:
    c, cfg = _constants(a), _quad(a)
    pk = _packet(a)
    reg = Regulator(a.regulator, 0.0 if a.regulator == "none" else a.epsilon)
    r = tau_quant_momentum(pk, a.X, reg, a.domain, c, cfg)
    t_class = classical_toa(c, a.X, pk.q0, pk.p0(c)) if pk.k0 != 0 else None
    tau = None if r.diverged else r.tau_quant
    path = _write_single(a, "tau_momentum",
                         ["k0", "sigma0", "q0", "X", "regulator", "epsilon", "domain", "tau_class", "tau_quant",
                          "imag_residual", "error_estimate", "diverged", "converged"],
                         [[a.k0, a.sigma0, a.q0, a.X, reg.kind.value, reg.epsilon, r.domain.value, t_class, tau,
                           r.imag_residual, r.error_estimate, r.diverged, r.converged]])
    flag = " DIVERGED" if r.diverged else ""
    return (f"tau-momentum {reg.label}/{r.domain.value} tau_quant={fmt(r.tau_quant)}{flag} "
            f"tau_class={fmt(t_class)} imag={fmt(r.imag_residual)} err={fmt(r.error_estimate)} -> {path}")


def cmd_evolve(a) -> str:
    c, cfg = _constants(a), _quad(a)
    state = EigenState(a.branch, a.tau, a.X)
    grid = GridSpec(a.q_min, a.q_max, a.n_points, tuple(a.times))
    fixed = {"branch": state.branch.value, "tau": a.tau, "X": a.X, "q_min": a.q_min, "q_max": a.q_max,
             "n_points": a.n_points, "strength": a.strength}
    spec = SweepSpec(SweepKind.EVOLUTION, grid.times, fixed, quad=cfg, constants=c)
    snaps = collapse_trajectory(state, grid, EvolutionRegulator(a.strength), c, cfg)
    rows = [[s.t, s.peak_q, float(s.density.max()), s.density_at_X, s.variance, "ok"] for s in snaps]
    table = SweepTable(["t", "peak_q", "peak_density", "density_at_X", "variance", "status"], rows,
                       spec.to_manifest(), snaps)
    paths = table.write(_output_dir(a), "evolve")
    last = snaps[-1]
    return (f"evolve {state.branch.value} tau={fmt(a.tau)} t={fmt(last.t)} peak_q={fmt(last.peak_q)} "
            f"density_at_X={fmt(last.density_at_X)} variance={fmt(last.variance)} -> {paths[0]}")


def _sweep_spec(a) -> tuple[SweepSpec, str]:
    cfg, c = _quad(a), _constants(a)
    if a.from_manifest:
        try:
            manifest = json.loads(Path(a.from_manifest).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read manifest {a.from_manifest}: {exc}")
        spec = SweepSpec.from_manifest(manifest)
        return spec, a.stem or Path(a.from_manifest).name.split(".")[0]
    if a.preset:
        name = f"sigma:{a.k0}" if a.preset == "sigma" else a.preset
        spec = preset_spec(name, a.grid_points, cfg)
        spec.constants = c
        return spec, a.stem or a.preset
    kind = SweepKind(a.kind)
    if a.grid_min <= 0 or a.grid_max <= a.grid_min:
        raise UsageError("need 0 < --grid-min < --grid-max for a log-spaced grid")
    grid = log_grid(a.grid_min, a.grid_max, a.grid_points, a.include_zero)
    regs = []
    if a.regulator == "none":
        regs = [Regulator("none", 0.0)]
    else:
        regs = [Regulator(a.regulator, e) for e in a.epsilons]
    doms = [MomentumDomain(d) for d in a.domains]
    if a.regulator == "causal" and any(d is not MomentumDomain.POSITIVE_HALF for d in doms):
        raise UsageError("regulator enforces divergence on negative momenta")
    if kind is SweepKind.TAU_VS_K0:
        fixed = {"q0": a.q0, "X": a.X, "sigma0": a.sigma0}
    elif kind is SweepKind.TAU_VS_SIGMA:
        fixed = {"q0": a.q0, "X": a.X, "k0": a.k0}
    elif kind is SweepKind.CORRECTION_VS_X:
        fixed, regs, doms = {}, [], []
    else:
        raise UsageError("use the evolve command (or --preset collapse) for evolution sweeps")
    return SweepSpec(kind, grid, fixed, regs, doms, cfg, c), a.stem or kind.value


def cmd_sweep(a) -> tuple[str, int]:
    spec, stem = _sweep_spec(a)
    table = run_sweep(spec, workers=a.workers)
    paths = table.write(_output_dir(a), stem)
    failed = sum(1 for row in table.rows if row[-1] != "ok")
    summary = f"sweep {spec.kind.value} rows={len(table.rows)} flagged={failed} -> {paths[0]}"
    if not a.verify:
        return summary, 0
    report = verify_sweep(table, a.verify)
    for line in report.lines():
        print(line)
    return summary + (" verify=PASS" if report.passed else " verify=FAIL"), 0 if report.passed else 1


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    return parser._subparsers._group_actions[0].choices[command]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    handlers = {
        "correction": cmd_correction,
        "tau-position": cmd_tau_position,
        "tau-momentum": cmd_tau_momentum,
        "evolve": cmd_evolve,
    }
    try:
        if args.command == "sweep":
            summary, status = cmd_sweep(args)
        else:
            summary, status = handlers[args.command](args), 0
    except (UsageError, ValueError) as exc:
        # invalid inputs or combinations, including the arrival error contract
        sys.stderr.write(_subparser(build_parser(), args.command).format_usage())
        print(f"qtoa {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"qtoa {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
