"""Per-step tracking of the regularity quantities, estimate checks, and the
experiment runner behind the CLI.

Every record snapshots the energy, the H1-level quantity X, the configured
higher norms, the dissipation norms, the gradient sup-norm with its low/high
frequency bound terms (threshold e + X), and running trapezoidal time
integrals at the diagnostic cadence.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectral as sp
from .dynamics import SolutionPair, SystemParams
from .integrator import BlowupError, StepperConfig, run
from .lpaley import grad_uinf_split, gradient_fields
from .multiplier import (
    DissipationSpec,
    GFunction,
    make_g,
    osgood_classify,
    partial_integral,
    symbol_on_grid,
)
from .spectral import SpectralField, VectorField

E = float(np.e)


class ConfigError(ValueError):
    """Raised for unparsable or inconsistent run configuration."""


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    energy: float
    diss_u: float
    diss_b: float
    diss_grad_u: float
    x_norm: float
    y_norm: float
    gamma_norm: float
    grad_u_inf: float
    split_low: float
    split_high: float
    cum_diss: float
    cum_diss_b: float
    cum_diss_grad: float
    div_u: float
    div_b: float


RECORD_FIELDS = [f.name for f in dataclasses.fields(DiagnosticRecord)]


def _vector_hs_sq(v: VectorField, s: float) -> float:
    return sp.vector_hs_norm(v, s) ** 2


def _weighted_l2_sq(fields: list[SpectralField], weight: np.ndarray) -> float:
    total = 0.0
    for f in fields:
        total += sp.lp_norm(SpectralField(f.grid, f.coeffs * weight), 2) ** 2
    return total


def make_record(state: SolutionPair, params: SystemParams, gamma: float, s: float,
                prev: DiagnosticRecord | None = None) -> DiagnosticRecord:
    """Compute one snapshot; cumulative integrals continue from prev.

    Norms of a state that is about to blow up may overflow to inf; the
    record keeps them rather than warning.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _make_record(state, params, gamma, s, prev)


def _make_record(state: SolutionPair, params: SystemParams, gamma: float, s: float,
                 prev: DiagnosticRecord | None) -> DiagnosticRecord:
    u, b = state.u, state.b
    grid = state.grid
    m1_symbol = symbol_on_grid(params.diss_u, grid)
    m2_symbol = symbol_on_grid(params.diss_b, grid)

    energy = 0.5 * (sp.vector_l2_norm(u) ** 2 + sp.vector_l2_norm(b) ** 2)
    diss_u = _weighted_l2_sq(list(u.components), m1_symbol)
    diss_b = _weighted_l2_sq(list(b.components), m2_symbol)
    diss_grad_u = _weighted_l2_sq(gradient_fields(u), m1_symbol)
    x_norm = _vector_hs_sq(u, 1.0) + _vector_hs_sq(b, 1.0)
    y_norm = _vector_hs_sq(u, s) + _vector_hs_sq(b, s)
    gamma_norm = _vector_hs_sq(u, gamma) + _vector_hs_sq(b, gamma)

    split_low, split_high, grad_u_inf = grad_uinf_split(u, params.diss_u, E + x_norm)

    t = state.time
    if prev is None:
        cum_diss = cum_diss_b = cum_diss_grad = 0.0
    else:
        half_dt = 0.5 * (t - prev.t)
        cum_diss = prev.cum_diss + half_dt * (prev.diss_u + diss_u)
        cum_diss_b = prev.cum_diss_b + half_dt * (prev.diss_b + diss_b)
        cum_diss_grad = prev.cum_diss_grad + half_dt * (prev.diss_grad_u + diss_grad_u)

    return DiagnosticRecord(
        t=t,
        energy=energy,
        diss_u=diss_u,
        diss_b=diss_b,
        diss_grad_u=diss_grad_u,
        x_norm=x_norm,
        y_norm=y_norm,
        gamma_norm=gamma_norm,
        grad_u_inf=grad_u_inf,
        split_low=split_low,
        split_high=split_high,
        cum_diss=cum_diss,
        cum_diss_b=cum_diss_b,
        cum_diss_grad=cum_diss_grad,
        div_u=sp.solenoidal_residual(u),
        div_b=sp.solenoidal_residual(b),
    )


class DiagnosticTracker:
    """Observer that appends a record every `cadence` steps."""

    def __init__(self, params: SystemParams, gamma: float, s: float, cadence: int = 1):
        if cadence < 1:
            raise ValueError("cadence must be >= 1")
        self.params = params
        self.gamma = gamma
        self.s = s
        self.cadence = cadence
        self.records: list[DiagnosticRecord] = []

    def __call__(self, step_index: int, state: SolutionPair) -> None:
        if step_index % self.cadence == 0:
            prev = self.records[-1] if self.records else None
            self.records.append(make_record(state, self.params, self.gamma, self.s, prev))


# ---------------------------------------------------------------------------
# estimate checks
# ---------------------------------------------------------------------------

def _check_uniform_cadence(records: list[DiagnosticRecord]) -> float:
    times = np.array([r.t for r in records])
    dts = np.diff(times)
    if dts.size == 0:
        raise ValueError("series must contain more than one record")
    if np.max(np.abs(dts - dts[0])) > 1e-8 * max(dts[0], 1e-30):
        raise ValueError("series cadence is not uniform")
    return float(dts[0])


def energy_balance_residual(records: list[DiagnosticRecord], nu: float, eta: float) -> float:
    """Max relative defect of the energy identity along the series."""
    if len(records) < 3:
        raise ValueError("need at least 3 records at uniform cadence")
    _check_uniform_cadence(records)
    e0 = records[0].energy
    worst = 0.0
    for r in records:
        worst = max(worst, abs(r.energy - e0 + nu * r.cum_diss + eta * r.cum_diss_b))
    return worst / max(e0, 1e-300)


@dataclass(frozen=True)
class GronwallReport:
    constant: float
    lhs_max: float
    rhs_max: float
    warning: str | None = None


def gronwall_bound_check(records: list[DiagnosticRecord], g1: GFunction,
                         params: SystemParams | None = None) -> GronwallReport:
    """Smallest C with F(e + X(t)) - F(e + X(0)) <= C * int_0^t (1 + diss_u).

    F is the running Osgood integral of g1.  Monotone-decaying X gives C = 0.
    """
    if not records:
        raise ValueError("empty series")
    warning = None
    if params is not None and not params.theorem_regime():
        warning = "parameters are outside the theorem regime (need nu>0, eta=0, alpha>=1+N/2)"
    f0 = partial_integral(g1, E + records[0].x_norm)
    constant = 0.0
    lhs_max = 0.0
    rhs_max = 0.0
    for r in records[1:]:
        lhs = partial_integral(g1, E + r.x_norm) - f0
        rhs = (r.t - records[0].t) + r.cum_diss
        lhs_max = max(lhs_max, lhs)
        rhs_max = max(rhs_max, rhs)
        if rhs > 0.0:
            constant = max(constant, lhs / rhs)
    return GronwallReport(constant=constant, lhs_max=lhs_max, rhs_max=rhs_max, warning=warning)


@dataclass(frozen=True)
class GammaLogReport:
    constant: float
    max_derivative: float
    samples: int


def gamma_log_derivative_check(records: list[DiagnosticRecord]) -> GammaLogReport:
    """Smallest C bounding d/dt ln(e + gamma_norm) by C*(||L u|| + ||L grad u||)."""
    if len(records) < 50:
        raise ValueError("cadence too coarse: need at least 50 records")
    dt = _check_uniform_cadence(records)
    w = np.log(E + np.array([r.gamma_norm for r in records]))
    rhs = np.array([math.sqrt(r.diss_u) + math.sqrt(r.diss_grad_u) for r in records])
    dw = (w[2:] - w[:-2]) / (2.0 * dt)
    constant = 0.0
    for deriv, denom in zip(dw, rhs[1:-1]):
        if deriv <= 0.0:
            continue
        if denom <= 1e-300:
            constant = float("inf")
        else:
            constant = max(constant, deriv / denom)
    return GammaLogReport(constant=constant, max_derivative=float(np.max(dw)) if dw.size else 0.0,
                          samples=len(records))


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def _pair_from_samples(u_samples: list[np.ndarray], b_samples: list[np.ndarray],
                       grid: sp.Grid) -> SolutionPair:
    def build(samples):
        comps = []
        for arr in samples:
            f = sp.dealias(sp.forward_transform(arr, grid))
            f.coeffs[(0,) * grid.dim] = 0.0
            comps.append(f)
        return sp.leray_project(VectorField(tuple(comps)))

    return SolutionPair(build(u_samples), build(b_samples), 0.0)


def initial_condition(name: str, params: dict, grid: sp.Grid) -> SolutionPair:
    """Named solenoidal, zero-mean, band-limited initial states."""
    coords = grid.coordinates()
    if name == "orszag_tang_2d":
        if grid.dim != 2:
            raise ConfigError("orszag_tang_2d requires a 2D grid")
        x, y = coords
        # u = (-2 sin y, 2 sin x), b = (-sin y, sin 2x)
        u = [-2.0 * np.sin(y), 2.0 * np.sin(x)]
        b = [-np.sin(y), np.sin(2.0 * x)]
        return _pair_from_samples(u, b, grid)
    if name == "taylor_green_2d":
        if grid.dim != 2:
            raise ConfigError("taylor_green_2d requires a 2D grid")
        x, y = coords
        u = [np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)]
        b = [np.zeros(grid.shape), np.zeros(grid.shape)]
        return _pair_from_samples(u, b, grid)
    if name == "random_band":
        seed = int(params.get("seed", 0))
        band = float(params.get("band", 4.0))
        amplitude = float(params.get("amplitude", 1.0))
        rng = np.random.default_rng(seed)
        keep = (grid.kmag > 0.0) & (grid.kmag <= band)

        def build(count):
            comps = []
            for _ in range(count):
                f = sp.forward_transform(rng.standard_normal(grid.shape), grid)
                comps.append(SpectralField(grid, f.coeffs * keep))
            return sp.leray_project(VectorField(tuple(comps)))

        u = build(grid.dim)
        b = build(grid.dim)
        norm = math.sqrt(sp.vector_l2_norm(u) ** 2 + sp.vector_l2_norm(b) ** 2)
        scale = amplitude / max(norm, 1e-300)
        return SolutionPair(u * scale, b * scale, 0.0)
    if name == "single_mode":
        k = params.get("k", (1, 0))
        if isinstance(k, str):
            k = tuple(int(v) for v in k.split(","))
        k = tuple(int(v) for v in k)
        if len(k) != grid.dim or all(v == 0 for v in k):
            raise ConfigError(f"single_mode requires a nonzero {grid.dim}-vector k")
        amplitude = float(params.get("amplitude", 1.0))
        kvec = np.array(k, dtype=float)
        if grid.dim == 2:
            e_perp = np.array([-kvec[1], kvec[0]])
        else:
            trial = np.array([1.0, 0.0, 0.0])
            if abs(np.dot(trial, kvec)) >= 0.99 * np.linalg.norm(kvec):
                trial = np.array([0.0, 1.0, 0.0])
            e_perp = np.cross(kvec, trial)
        e_perp /= np.linalg.norm(e_perp)
        phase = sum(k[j] * coords[j] for j in range(grid.dim))
        u = [amplitude * e_perp[j] * np.cos(phase) for j in range(grid.dim)]
        b = [np.zeros(grid.shape) for _ in range(grid.dim)]
        return _pair_from_samples(u, b, grid)
    raise ConfigError(f"unknown initial condition {name!r}")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

_G_PARAM_KEYS = {"c", "epsilon", "period", "height"}


@dataclass
class RunConfig:
    dim: int = 2
    points: int = 64
    nu: float = 1.0
    eta: float = 0.0
    alpha: float = 2.0
    beta: float = 1.0
    g1: GFunction = field(default_factory=lambda: make_g("constant_one"))
    g2: GFunction = field(default_factory=lambda: make_g("constant_one"))
    ic_name: str = "orszag_tang_2d"
    ic_params: dict = field(default_factory=dict)
    dt: float | None = 1e-3
    cfl: float = 0.5
    t_end: float = 1.0
    max_steps: int = 1_000_000
    cadence: int = 1
    gamma: float | None = None
    s_order: float | None = None
    out_series: str | None = None
    out_snapshots: str | None = None
    snapshot_times: tuple[float, ...] = ()
    energy_tol: float | None = None

    def __post_init__(self):
        if self.gamma is None:
            self.gamma = (3.0 + self.dim) / 2.0
        if self.s_order is None:
            self.s_order = 3.0 + self.dim
        lo, hi = 1.0 + self.dim / 2.0, 2.0 + self.dim / 2.0
        if not lo < self.gamma < hi:
            raise ConfigError(f"gamma must lie in ({lo}, {hi}), got {self.gamma}")

    def system_params(self) -> SystemParams:
        return SystemParams(
            diss_u=DissipationSpec(self.nu, self.alpha, self.g1),
            diss_b=DissipationSpec(self.eta, self.beta, self.g2),
            dim=self.dim,
        )

    def stepper_config(self) -> StepperConfig:
        return StepperConfig(t_end=self.t_end, dt=self.dt, cfl_number=self.cfl,
                             max_steps=self.max_steps)


def _parse_scalar(text: str):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_config(path: str) -> RunConfig:
    """Parse the flat key = value run-configuration format."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return config_from_mapping(raw)


def config_from_mapping(raw: dict[str, str]) -> RunConfig:
    kwargs: dict = {}
    g_specs: dict[str, dict] = {"g1": {"kind": "constant_one"}, "g2": {"kind": "constant_one"}}
    ic_params: dict = {}
    try:
        for key, value in raw.items():
            if key == "grid.n":
                kwargs["dim"] = int(value)
            elif key == "grid.points":
                kwargs["points"] = int(value)
            elif key in ("params.nu", "params.eta", "params.alpha", "params.beta"):
                kwargs[key.split(".")[1]] = float(value)
            elif key.startswith("params.g1.") or key.startswith("params.g2."):
                _, gname, pname = key.split(".", 2)
                if pname == "kind":
                    g_specs[gname]["kind"] = value
                elif pname in _G_PARAM_KEYS:
                    g_specs[gname][pname] = float(value)
                else:
                    raise ConfigError(f"unknown g parameter {key!r}")
            elif key == "ic.name":
                kwargs["ic_name"] = value
            elif key.startswith("ic."):
                ic_params[key.split(".", 1)[1]] = _parse_scalar(value)
            elif key == "stepper.dt":
                kwargs["dt"] = None if value == "adaptive" else float(value)
            elif key == "stepper.cfl":
                kwargs["cfl"] = float(value)
            elif key == "stepper.t_end":
                kwargs["t_end"] = float(value)
            elif key == "stepper.max_steps":
                kwargs["max_steps"] = int(value)
            elif key == "diag.cadence":
                kwargs["cadence"] = int(value)
            elif key == "diag.gamma":
                kwargs["gamma"] = float(value)
            elif key == "diag.s":
                kwargs["s_order"] = float(value)
            elif key == "out.series":
                kwargs["out_series"] = value
            elif key == "out.snapshots":
                kwargs["out_snapshots"] = value
            elif key == "out.snapshot_times":
                kwargs["snapshot_times"] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key == "check.energy_tol":
                kwargs["energy_tol"] = float(value)
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        for gname in ("g1", "g2"):
            spec = dict(g_specs[gname])
            kwargs[gname] = make_g(spec.pop("kind"), **spec)
        if ic_params:
            kwargs["ic_params"] = ic_params
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# series I/O
# ---------------------------------------------------------------------------

def write_series(path: str, records: list[DiagnosticRecord]) -> None:
    lines = [",".join(RECORD_FIELDS)]
    for r in records:
        lines.append(",".join(f"{getattr(r, name):.17e}" for name in RECORD_FIELDS))
    Path(path).write_text("\n".join(lines) + "\n")


def read_series(path: str) -> list[DiagnosticRecord]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header != RECORD_FIELDS:
        raise ValueError(f"unexpected series header in {path}")
    records = []
    for line in lines[1:]:
        values = [float(v) for v in line.split(",")]
        records.append(DiagnosticRecord(**dict(zip(RECORD_FIELDS, values))))
    return records


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

STATUS_OK = "ok"
STATUS_CONFIG_ERROR = "config_error"
STATUS_BLOWUP = "blowup"
STATUS_CHECK_FAILED = "check_failed"

EXIT_CODES = {STATUS_OK: 0, STATUS_CONFIG_ERROR: 2, STATUS_BLOWUP: 3, STATUS_CHECK_FAILED: 4}

_SOLENOIDAL_TOL = 1e-8


@dataclass
class ExperimentResult:
    status: str
    records: list[DiagnosticRecord]
    summary: dict
    final_state: SolutionPair | None = None
    message: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


class _SnapshotObserver:
    def __init__(self, prefix: str, times: tuple[float, ...]):
        self.prefix = prefix
        self.pending = sorted(times)
        self.written: list[str] = []

    def __call__(self, step_index: int, state: SolutionPair) -> None:
        while self.pending and state.time >= self.pending[0] - 1e-12:
            t = self.pending.pop(0)
            path = f"{self.prefix}_t{t:.6f}.lmhd"
            fields = list(state.u.components) + list(state.b.components)
            sp.write_snapshot(path, fields)
            self.written.append(path)


def run_experiment(config: RunConfig) -> ExperimentResult:
    """Run one configured experiment, write artifacts, evaluate the checks."""
    try:
        grid = sp.make_grid(config.dim, config.points)
        params = config.system_params()
        state0 = initial_condition(config.ic_name, config.ic_params, grid)
        stepper = config.stepper_config()
    except ConfigError as exc:
        return ExperimentResult(STATUS_CONFIG_ERROR, [], {}, message=str(exc))
    except ValueError as exc:
        return ExperimentResult(STATUS_CONFIG_ERROR, [], {}, message=str(exc))

    tracker = DiagnosticTracker(params, config.gamma, config.s_order, config.cadence)
    snapshots = (
        _SnapshotObserver(config.out_snapshots, config.snapshot_times)
        if config.out_snapshots and config.snapshot_times
        else None
    )
    steps_taken = 0

    def observer(step_index: int, state: SolutionPair) -> None:
        nonlocal steps_taken
        steps_taken = max(steps_taken, step_index)
        tracker(step_index, state)
        if snapshots is not None:
            snapshots(step_index, state)

    wall_start = time.perf_counter()
    try:
        final_state = run(state0, params, stepper, observer=observer)
    except BlowupError as exc:
        summary = {"blowup_time": exc.time, "blowup_step": exc.step}
        result = ExperimentResult(STATUS_BLOWUP, tracker.records, summary, message=str(exc))
        if config.out_series and tracker.records:
            write_series(config.out_series, tracker.records)
        return result

    records = tracker.records
    summary: dict = {
        "steps": steps_taken,
        "records": len(records),
        "wall_time_s": time.perf_counter() - wall_start,
        "t_final": final_state.time,
        "max_x_norm": max((r.x_norm for r in records), default=0.0),
        "sup_gamma_norm": max((r.gamma_norm for r in records), default=0.0),
        "cum_diss_grad": records[-1].cum_diss_grad if records else 0.0,
        "max_div": max((max(r.div_u, r.div_b) for r in records), default=0.0),
        "osgood_g1": osgood_classify(config.g1).classification,
    }

    failures = []
    if len(records) >= 3:
        residual = energy_balance_residual(records, config.nu, config.eta)
        summary["energy_residual"] = residual
        if config.energy_tol is not None and residual > config.energy_tol:
            failures.append(f"energy residual {residual:.3e} > {config.energy_tol:.3e}")
    gron = gronwall_bound_check(records, config.g1, params) if records else None
    if gron is not None:
        summary["gronwall_constant"] = gron.constant
        if not math.isfinite(gron.constant):
            failures.append("gronwall constant is not finite")
        if gron.warning:
            summary["gronwall_warning"] = gron.warning
    if len(records) >= 50:
        gamma_report = gamma_log_derivative_check(records)
        summary["gamma_log_constant"] = gamma_report.constant
        if not math.isfinite(gamma_report.constant):
            failures.append("gamma log-derivative constant is not finite")
    if summary["max_div"] > _SOLENOIDAL_TOL:
        failures.append(f"solenoidality residual {summary['max_div']:.3e} > {_SOLENOIDAL_TOL:.0e}")

    if config.out_series:
        write_series(config.out_series, records)
        Path(config.out_series + ".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if snapshots is not None:
        summary["snapshots"] = snapshots.written

    status = STATUS_CHECK_FAILED if failures else STATUS_OK
    return ExperimentResult(status, records, summary, final_state, message="; ".join(failures))
