"""Parameter sweeps that regenerate the reference datasets as tables.

A :class:`SweepSpec` fully determines a :class:`SweepTable`; the table's
manifest is the spec in JSON form, so ``SweepSpec.from_manifest`` reruns it
bit-for-bit.  Tables are written as CSV (``NA`` marks missing values) with
a JSON manifest sidecar.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .arrival import (
    MomentumDomain,
    Regulator,
    RegulatorKind,
    _correction_factor_quad,
    correction_factor_closed_form,
    tau_quant_gaussian,
    tau_quant_momentum,
)
from .evolution import DensitySnapshot, EvolutionRegulator, GridSpec, density_snapshot
from .physics_model import NATURAL_UNITS, EigenState, GaussianPacket, PhysicalConstants, classical_toa
from .quadrature import DEFAULT_CONFIG, QuadConfig

MISSING = "NA"
FLOAT_FORMAT = ".12g"


class SweepKind(str, Enum):
    CORRECTION_VS_X = "correction-vs-x"
    TAU_VS_K0 = "tau-vs-k0"
    TAU_VS_SIGMA = "tau-vs-sigma"
    EVOLUTION = "evolution"


DEFAULT_GEOMETRY = {"q0": -5.0, "X": 0.0, "sigma0": 0.5}
DEFAULT_EPSILONS = (0.5, 0.1, 0.01)


def log_grid(lo: float, hi: float, n: int = 200, include_zero: bool = False) -> tuple[float, ...]:
    pts = np.geomspace(lo, hi, n).tolist()
    return tuple(([0.0] if include_zero else []) + pts)


@dataclass
class SweepSpec:
    kind: SweepKind
    grid: Sequence[float]
    fixed: dict = field(default_factory=dict)
    regulators: Sequence[Regulator] = ()
    domains: Sequence[MomentumDomain] = ()
    quad: QuadConfig = DEFAULT_CONFIG
    constants: PhysicalConstants = NATURAL_UNITS

    def __post_init__(self):
        self.kind = SweepKind(self.kind)
        self.grid = tuple(float(g) for g in self.grid)
        self.regulators = tuple(self.regulators)
        self.domains = tuple(MomentumDomain(d) for d in self.domains)
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if not all(math.isfinite(g) for g in self.grid):
            raise ValueError("sweep grid must be finite")
        need = {
            SweepKind.CORRECTION_VS_X: set(),
            SweepKind.TAU_VS_K0: {"q0", "X", "sigma0"},
            SweepKind.TAU_VS_SIGMA: {"q0", "X", "k0"},
            SweepKind.EVOLUTION: {"branch", "tau", "X", "q_min", "q_max", "n_points", "strength"},
        }[self.kind]
        missing = need - set(self.fixed)
        if missing:
            raise ValueError(f"{self.kind.value} sweep needs fixed {sorted(missing)}")
        if self.kind is SweepKind.CORRECTION_VS_X and min(self.grid) < 0:
            raise ValueError("k0*sigma0 grid must be non-negative")
        if self.kind is SweepKind.TAU_VS_SIGMA and min(self.grid) <= 0:
            raise ValueError("sigma0 grid must be positive")

    @property
    def series(self) -> list[tuple[Regulator, MomentumDomain]]:
        return [(r, d) for r in self.regulators for d in self.domains]

    def to_manifest(self) -> dict:
        return {
            "artifact": "qtoa",
            "version": __version__,
            "kind": self.kind.value,
            "grid": list(self.grid),
            "fixed": dict(self.fixed),
            "regulators": [{"kind": r.kind.value, "epsilon": r.epsilon} for r in self.regulators],
            "domains": [d.value for d in self.domains],
            "quad": asdict(self.quad),
            "constants": asdict(self.constants),
            "missing": MISSING,
            "float_format": FLOAT_FORMAT,
        }

    @classmethod
    def from_manifest(cls, m: dict) -> "SweepSpec":
        return cls(
            kind=m["kind"],
            grid=m["grid"],
            fixed=dict(m["fixed"]),
            regulators=[Regulator(r["kind"], r["epsilon"]) for r in m["regulators"]],
            domains=m["domains"],
            quad=QuadConfig(**m["quad"]),
            constants=PhysicalConstants(**m["constants"]),
        )


@dataclass
class SweepTable:
    columns: list[str]
    rows: list[list[Any]]
    manifest: dict
    snapshots: list[DensitySnapshot] = field(default_factory=list, repr=False)

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_cell(v) for v in row])
        return buf.getvalue()

    def snapshots_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "q", "density"])
        for snap in self.snapshots:
            for q, d in zip(snap.q_values, snap.density):
                w.writerow([format_cell(snap.t), format_cell(q), format_cell(d)])
        return buf.getvalue()

    def write(self, outdir: Path | str, stem: Optional[str] = None) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.manifest["kind"]
        paths = [outdir / f"{stem}.csv", outdir / f"{stem}.manifest.json"]
        paths[0].write_text(self.to_csv(), encoding="utf-8")
        manifest = dict(self.manifest, columns=self.columns)
        if self.snapshots:
            snap_path = outdir / f"{stem}.snapshots.csv"
            snap_path.write_text(self.snapshots_csv(), encoding="utf-8")
            manifest["snapshots_file"] = snap_path.name
            paths.append(snap_path)
        paths[1].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return paths


def format_cell(v) -> str:
    if v is None:
        return MISSING
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return MISSING if not math.isfinite(v) else format(float(v), FLOAT_FORMAT)
    return str(v)


def series_label(reg: Regulator, dom: MomentumDomain) -> str:
    return f"{reg.label}/{dom.value}"


# ---------------------------------------------------------------------------
# row evaluation


def _tau_columns(spec: SweepSpec) -> list[str]:
    cols = ["tau_class", "tau_gaussian"]
    for reg, dom in spec.series:
        lab = series_label(reg, dom)
        cols += [f"tau[{lab}]", f"err[{lab}]", f"imag[{lab}]"]
    return cols + ["status"]


def _columns(spec: SweepSpec) -> list[str]:
    if spec.kind is SweepKind.CORRECTION_VS_X:
        return ["x", "correction", "correction_closed_form", "error_estimate", "status"]
    if spec.kind is SweepKind.TAU_VS_K0:
        return ["k0", "sigma0", "q0", "X"] + _tau_columns(spec)
    if spec.kind is SweepKind.TAU_VS_SIGMA:
        return ["sigma0", "k0", "q0", "X"] + _tau_columns(spec)
    return ["t", "peak_q", "peak_density", "density_at_X", "variance", "status"]


def _tau_row(spec: SweepSpec, pk: GaussianPacket, X: float) -> list[Any]:
    c, cfg = spec.constants, spec.quad
    notes = []
    if pk.k0 != 0:
        t_class = classical_toa(c, X, pk.q0, pk.p0(c))
        t_gauss = tau_quant_gaussian(pk, X, c, cfg).tau_quant
    else:
        t_class = t_gauss = None
    row: list[Any] = [t_class, t_gauss]
    for reg, dom in spec.series:
        lab = series_label(reg, dom)
        try:
            r = tau_quant_momentum(pk, X, reg, dom, c, cfg)
        except (ValueError, ArithmeticError) as exc:
            notes.append(f"{lab}: {exc}")
            row += [None, None, None]
            continue
        if r.diverged:
            notes.append(f"{lab}: diverged")
            row += [None, r.error_estimate, r.imag_residual]
            continue
        if not r.converged:
            notes.append(f"{lab}: not converged")
        row += [r.tau_quant, r.error_estimate, r.imag_residual]
    return row + ["; ".join(notes) or "ok"]


def _evaluate_point(spec: SweepSpec, g: float) -> tuple[list[Any], Optional[DensitySnapshot]]:
    f = spec.fixed
    try:
        if spec.kind is SweepKind.CORRECTION_VS_X:
            r = _correction_factor_quad(g, spec.quad)
            return [g, r.value, correction_factor_closed_form(g), r.error_estimate,
                    "ok" if r.converged else "not converged"], None
        if spec.kind is SweepKind.TAU_VS_K0:
            pk = GaussianPacket(f["q0"], f["sigma0"], g)
            return [g, f["sigma0"], f["q0"], f["X"]] + _tau_row(spec, pk, f["X"]), None
        if spec.kind is SweepKind.TAU_VS_SIGMA:
            pk = GaussianPacket(f["q0"], g, f["k0"])
            return [g, f["k0"], f["q0"], f["X"]] + _tau_row(spec, pk, f["X"]), None
        state = EigenState(f["branch"], f["tau"], f["X"])
        grid = GridSpec(f["q_min"], f["q_max"], int(f["n_points"]), (g,))
        snap = density_snapshot(state, g, grid, EvolutionRegulator(f["strength"]), spec.constants, spec.quad)
        row = [g, snap.peak_q, float(snap.density.max()), snap.density_at_X, snap.variance, "ok"]
        return row, snap
    except (ValueError, ArithmeticError) as exc:
        n = len(_columns(spec))
        return [g] + [None] * (n - 2) + [f"error: {exc}"], None


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepTable:
    """Evaluate every grid point; failures are recorded in the row's status.

    With ``workers > 1`` rows are computed in a process pool; ordering and
    values do not depend on the worker count.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_point, [spec] * len(spec.grid), spec.grid))
    else:
        results = [_evaluate_point(spec, g) for g in spec.grid]
    rows = [r for r, _ in results]
    snaps = [s for _, s in results if s is not None]
    return SweepTable(_columns(spec), rows, spec.to_manifest(), snaps)


def load_table(csv_path: Path | str) -> SweepTable:
    """Read a table written by :meth:`SweepTable.write` back (cells as floats/str/None)."""
    csv_path = Path(csv_path)
    manifest_path = csv_path.with_name(csv_path.name[: -len(".csv")] + ".manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[_parse_cell(v) for v in row] for row in reader]
    return SweepTable(columns, rows, manifest)


def _parse_cell(v: str):
    if v == MISSING:
        return None
    try:
        return float(v)
    except ValueError:
        return v


# ---------------------------------------------------------------------------
# named presets


def preset_spec(name: str, n_points: int = 200, quad: QuadConfig = DEFAULT_CONFIG) -> SweepSpec:
    """Named reference sweeps; 'sigma:<k0>' selects the wave number of the sigma0 sweep."""
    geo = dict(DEFAULT_GEOMETRY)
    relaxed = [Regulator(RegulatorKind.SYMMETRIC_RELAXED, e) for e in DEFAULT_EPSILONS]
    causal = [Regulator(RegulatorKind.ONE_SIDED_CAUSAL, e) for e in DEFAULT_EPSILONS]
    if name == "collapse":
        fixed = {"branch": "right", "tau": 5.0, "X": 0.0, "q_min": -30.0, "q_max": 30.0,
                 "n_points": 1201, "strength": 1e-3}
        return SweepSpec(SweepKind.EVOLUTION, (1.0, 2.0, 3.0, 4.0, 5.0), fixed, quad=quad)
    if name == "correction":
        return SweepSpec(SweepKind.CORRECTION_VS_X, log_grid(0.05, 10.0, n_points), quad=quad)
    if name == "gaussian":
        return SweepSpec(SweepKind.TAU_VS_K0, log_grid(0.01, 10.0, n_points), geo, quad=quad)
    if name == "convergence":
        return SweepSpec(SweepKind.TAU_VS_K0, log_grid(0.01, 10.0, n_points), geo, relaxed,
                         [MomentumDomain.FULL_LINE], quad=quad)
    if name == "causal":
        return SweepSpec(SweepKind.TAU_VS_K0, log_grid(0.01, 10.0, n_points, include_zero=True), geo,
                         causal, [MomentumDomain.POSITIVE_HALF], quad=quad)
    if name == "halfline":
        return SweepSpec(SweepKind.TAU_VS_K0, log_grid(0.01, 10.0, n_points, include_zero=True), geo,
                         [Regulator(RegulatorKind.SYMMETRIC_RELAXED, 0.01)],
                         [MomentumDomain.POSITIVE_HALF, MomentumDomain.NEGATIVE_HALF, MomentumDomain.FULL_LINE],
                         quad=quad)
    if name.startswith("sigma"):
        # sigma -> k0 = 1; sigma:<k0> picks another incident wave number
        k0 = float(name.split(":", 1)[1]) if ":" in name else 1.0
        fixed = {"q0": geo["q0"], "X": geo["X"], "k0": k0}
        return SweepSpec(SweepKind.TAU_VS_SIGMA, log_grid(1e-3, 100.0, n_points), fixed,
                         [Regulator(RegulatorKind.ONE_SIDED_CAUSAL, SIGMA_SWEEP_EPSILON)],
                         [MomentumDomain.POSITIVE_HALF], quad=quad)
    raise ValueError(f"unknown preset {name!r}")


# The large-sigma limit of the regulated result is tau_class * exp(-eps/p0),
# so eps must be small against the smallest p0 swept.
SIGMA_SWEEP_EPSILON = 1e-3

PRESETS = ("collapse", "correction", "gaussian", "convergence", "causal", "halfline", "sigma")


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} (margin {self.margin:.3g})"


@dataclass
class VerificationReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _series(table: SweepTable, prefix: str, kind: str, domain: str) -> dict[float, str]:
    """Map epsilon -> label for every column ``prefix[kind(eps=..)/domain]``."""
    out = {}
    for col in table.columns:
        if col.startswith(f"{prefix}[{kind}(eps=") and col.endswith(f"/{domain}]"):
            eps = float(col[len(prefix) + len(kind) + 6: col.index(")")])
            out[eps] = col[len(prefix) + 1: -1]
    return dict(sorted(out.items(), reverse=True))


def _vals(table: SweepTable, col: str) -> np.ndarray:
    return np.array([np.nan if v is None or isinstance(v, str) else float(v) for v in table.column(col)])


def _check(name: str, margin: float, detail: str) -> CheckResult:
    return CheckResult(name, bool(margin >= 0), float(margin), detail)


def _correction_suite(t: SweepTable) -> list[CheckResult]:
    x = _vals(t, "x")
    cf = _vals(t, "correction")
    closed = _vals(t, "correction_closed_form")
    out = [_check("correction.oracle", 1e-8 - np.nanmax(np.abs(cf - closed)),
                  f"max |quadrature - closed form| = {np.nanmax(np.abs(cf - closed)):.3g}")]
    i0, i1 = int(np.argmin(x)), int(np.argmax(x))
    out.append(_check("correction.small_x", 5 * x[i0] ** 2 - cf[i0], f"factor({x[i0]:g}) = {cf[i0]:.6g} <= 5x^2"))
    out.append(_check("correction.classical_limit", 0.01 - abs(cf[i1] - 1), f"factor({x[i1]:g}) = {cf[i1]:.6g}"))
    return out


def _convergence_suite(t: SweepTable, max_rel_dev: float = 0.02) -> list[CheckResult]:
    k0 = _vals(t, "k0")
    sigma0 = _vals(t, "sigma0")
    gauss = _vals(t, "tau_gaussian")
    labels = _series(t, "tau", "relaxed", "full")
    if len(labels) < 2:
        return [CheckResult("convergence", False, math.nan, "needs >= 2 relaxed/full series")]
    sel = k0 * sigma0 >= 1
    devs = np.array([np.abs(_vals(t, f"tau[{lab}]") - gauss) for lab in labels.values()])[:, sel]
    # rows of devs are ordered by decreasing epsilon
    steps = devs[:-1] - devs[1:]
    mono = float(np.min(steps)) if steps.size else math.nan
    rel = devs[-1] / np.abs(gauss[sel])
    smallest = min(labels)
    return [
        _check("convergence.monotone", mono, f"deviation shrinks with eps over {int(sel.sum())} rows with k0*sigma0>=1"),
        _check("convergence.within_2pct", max_rel_dev - float(np.max(rel)),
               f"max relative deviation at eps={smallest:g} is {np.max(rel):.4%} (worst k0={k0[sel][np.argmax(rel)]:g})"),
    ]


def _causal_suite(t: SweepTable, eps_limit: float = 0.01, rel: float = 0.01) -> list[CheckResult]:
    k0 = _vals(t, "k0")
    sigma0 = _vals(t, "sigma0")
    t_class = _vals(t, "tau_class")
    labels = _series(t, "tau", "causal", "positive")
    out = []
    zero = np.flatnonzero(k0 == 0)
    if zero.size:
        vals = np.array([_vals(t, f"tau[{lab}]")[zero[0]] for lab in labels.values()])
        finite_pos = bool(np.all(np.isfinite(vals)) and np.all(vals > 0))
        grow = float(np.min(np.diff(vals))) if len(vals) > 1 else math.nan
        out.append(_check("causal.intercept_finite_positive", float(np.min(vals)) if finite_pos else -1.0,
                          "k0=0 intercepts " + ", ".join(f"{v:.6g}" for v in vals)))
        out.append(_check("causal.intercept_grows", grow, "intercept increases as eps decreases"))
    if eps_limit in labels:
        sel = k0 * sigma0 >= 5
        tau = _vals(t, f"tau[{labels[eps_limit]}]")[sel]
        dev = np.abs(tau / t_class[sel] - 1)
        out.append(_check("causal.classical_limit", rel - float(np.max(dev)) if dev.size else math.nan,
                          f"max |tau/tau_class - 1| = {np.max(dev):.4%} over {int(sel.sum())} rows with k0*sigma0>=5"))
    return out


def _decomposition(t: SweepTable) -> list[CheckResult]:
    out = []
    for eps, lab_full in _series(t, "tau", "relaxed", "full").items():
        base = lab_full[: -len("/full")]
        cols = {d: f"{base}/{d}" for d in ("positive", "negative", "full")}
        if not all(f"tau[{c}]" in t.columns for c in cols.values()):
            continue
        tau = {d: _vals(t, f"tau[{c}]") for d, c in cols.items()}
        err = {d: _vals(t, f"err[{c}]") for d, c in cols.items()}
        resid = np.abs(tau["positive"] + tau["negative"] - tau["full"])
        scale = np.abs(tau["positive"]) + np.abs(tau["negative"]) + np.abs(tau["full"])
        tol = err["positive"] + err["negative"] + err["full"] + 64 * np.finfo(float).eps * scale
        out.append(_check(f"decomposition[{base}]", float(np.min(tol - resid)),
                          f"max residual {np.max(resid):.3g} vs combined error estimates"))
    return out


def _halfline_suite(t: SweepTable) -> list[CheckResult]:
    k0 = _vals(t, "k0")
    out = []
    for eps, lab in _series(t, "tau", "relaxed", "negative").items():
        neg = _vals(t, f"tau[{lab}]")
        out.append(_check(f"halfline.negative_nonpositive[eps={eps:g}]", -float(np.max(neg)),
                          f"max negative-half tau = {np.max(neg):.3g}"))
    zero = np.flatnonzero(k0 == 0)
    for eps, lab in _series(t, "tau", "relaxed", "full").items():
        if zero.size:
            v = _vals(t, f"tau[{lab}]")[zero[0]]
            out.append(_check(f"halfline.cancels_at_zero[eps={eps:g}]", 1e-6 - abs(v), f"full-line tau at k0=0 = {v:.3g}"))
    return out + _decomposition(t)


def _sigma_suite(t: SweepTable, rel: float = 0.01, small_frac: float = 0.05) -> list[CheckResult]:
    sigma = _vals(t, "sigma0")
    t_class = _vals(t, "tau_class")
    out = []
    for eps, lab in _series(t, "tau", "causal", "positive").items():
        tau = _vals(t, f"tau[{lab}]")
        order = np.argsort(sigma)
        s, v, tc = sigma[order], tau[order], t_class[order]
        out.append(_check(f"sigma.large_sigma[eps={eps:g}]", rel - abs(v[-1] / tc[-1] - 1),
                          f"tau/tau_class at sigma0={s[-1]:g} is {v[-1] / tc[-1]:.6g}"))
        lower = s <= s[0] * 10
        mono = float(np.min(np.diff(v[lower]))) if lower.sum() > 1 else math.nan
        peak = float(np.nanmax(v))
        out.append(_check(f"sigma.small_sigma[eps={eps:g}]", min(small_frac - v[0] / peak, mono),
                          f"tau(sigma0={s[0]:g}) / max = {v[0] / peak:.3g}, rising over the first decade"))
        i = int(np.nanargmax(v))
        interior = 0 < i < len(v) - 1
        out.append(CheckResult(f"sigma.turning_point[eps={eps:g}]", interior,
                               float(min(v[i] - v[0], v[i] - v[-1])),
                               f"maximum {v[i]:.6g} at sigma0={s[i]:g}"))
    return out


def _collapse_suite(t: SweepTable) -> list[CheckResult]:
    m = t.manifest["fixed"]
    times = _vals(t, "t")
    peak_q = _vals(t, "peak_q")
    var = _vals(t, "variance")
    out = []
    spacing = (m["q_max"] - m["q_min"]) / max(int(m["n_points"]) - 1, 1)
    at_tau = np.flatnonzero(np.isclose(times, m["tau"]))
    if m["branch"] in ("right", "left", "even") and at_tau.size:
        i = at_tau[0]
        out.append(_check("collapse.peak_at_X", spacing - abs(peak_q[i] - m["X"]),
                          f"peak at q={peak_q[i]:g} for t=tau"))
        out.append(_check("collapse.min_variance_at_tau", float(np.min(np.delete(var, i)) - var[i]),
                          f"variance {var[i]:.4g} at t=tau"))
    if m["branch"] == "odd":
        ratio = _vals(t, "density_at_X") / _vals(t, "peak_density")
        out.append(_check("collapse.odd_zero_at_X", 1e-6 - float(np.max(ratio)),
                          f"max density(X)/peak = {np.max(ratio):.3g}"))
    return out


ASSERTIONS: dict[str, Callable[[SweepTable], list[CheckResult]]] = {
    "collapse": _collapse_suite,
    "correction": _correction_suite,
    "convergence": _convergence_suite,
    "causal": _causal_suite,
    "halfline": _halfline_suite,
    "sigma": _sigma_suite,
    "decomposition": _decomposition,
}


def verify_sweep(table: SweepTable, assertions: Sequence[str]) -> VerificationReport:
    """Run the named property suites against a sweep table (report only)."""
    checks: list[CheckResult] = []
    for name in assertions:
        try:
            fn = ASSERTIONS[name]
        except KeyError:
            checks.append(CheckResult(name, False, math.nan, "unknown assertion set"))
            continue
        try:
            checks.extend(fn(table))
        except (KeyError, ValueError, IndexError) as exc:
            checks.append(CheckResult(name, False, math.nan, f"could not evaluate: {exc}"))
    return VerificationReport(checks)
