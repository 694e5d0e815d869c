"""Parameter sweeps, presets and CSV emission.

A sweep is described by a flat, serializable SweepConfig: one swept quantity
(coupling, splitting, average temperature, asymmetry, or the effective
parameters themselves), a grid, the base junction, and the methods to run.
Grid points are independent; they can be evaluated by a worker pool, but
rows are always written in grid order so the output bytes never depend on
the worker count.  Per-point failures are marked in the row's status cell
and the sweep carries on.

CSV conventions: 17 significant digits, LF line endings, one header row with
unit annotations in parentheses.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields, replace
from multiprocessing import Pool

import numpy as np

from .bath import BathSpec
from .hamiltonian import JunctionModel, converge_effective
from .methods import (
    current_bmr,
    current_effsb,
    current_rcqme,
    rectification,
)

SWEEP_KINDS = ("lambda", "delta", "temperature", "asymmetry",
               "m_convergence", "eff_params")

PRESET_NAMES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
                "fig11a", "fig11b")

_GAMMA_TURNOVER = 0.0071 / math.pi
_CUTOFF_STANDARD = 1000 * math.pi


class ConfigError(ValueError):
    """Configuration problems: unknown keys, bad grids, empty method lists."""


@dataclass(frozen=True)
class SweepConfig:
    """Flat description of one sweep; round-trips through key=value text."""

    sweep_kind: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"
    methods: tuple[str, ...] = ("effsb",)
    output: str = "sweep.csv"
    epsilon: float = 0.0
    delta: float = 1.0
    coupling: float = 1.0  # fixed coupling for sweeps not over lambda
    omega_rc: float = 28.0
    gamma: float = _GAMMA_TURNOVER
    cutoff: float = _CUTOFF_STANDARD
    t_hot: float = 1.0
    t_cold: float = 0.5
    delta_t_fraction: float = 0.3  # temperature sweeps: dT = fraction * T_a
    tol: float = 1e-4  # effective-parameter convergence
    m_max: int = 8
    label: str = ""

    def __post_init__(self):
        if self.sweep_kind not in SWEEP_KINDS:
            raise ConfigError(
                f"unknown sweep_kind {self.sweep_kind!r}; expected one of "
                f"{SWEEP_KINDS}")
        if self.points < 2:
            raise ConfigError("points must be at least 2")
        if not self.start < self.stop:
            raise ConfigError("start must be less than stop")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError("log spacing needs a positive start")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for token in self.methods:
            _parse_method(token)

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)

    def base_model(self) -> JunctionModel:
        return JunctionModel(
            epsilon=self.epsilon,
            delta=self.delta,
            hot=BathSpec(coupling=self.coupling, omega_rc=self.omega_rc,
                         gamma=self.gamma, cutoff=self.cutoff,
                         temperature=self.t_hot),
            cold=BathSpec(coupling=self.coupling, omega_rc=self.omega_rc,
                          gamma=self.gamma, cutoff=self.cutoff,
                          temperature=self.t_cold),
        )


@dataclass(frozen=True)
class SweepRow:
    value: float
    cells: dict
    failures: tuple[tuple[str, str], ...]  # (method token, message)


@dataclass(frozen=True)
class SweepSummary:
    output: str
    sweep_kind: str
    rows: int
    columns: tuple[str, ...]
    peaks: tuple[tuple[str, float, float], ...]  # column, swept value, peak
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class MConvergenceRow:
    m: int
    current: float
    rel_change: float
    wall_time_s: float


def _parse_method(token: str) -> tuple[str, int | None]:
    if token == "bmr" or token == "effsb":
        return token, None
    if token.startswith("rcqme:"):
        try:
            m = int(token.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad truncation in method token {token!r}")
        if m < 2:
            raise ConfigError("rcqme truncation must be at least 2")
        return "rcqme", m
    raise ConfigError(
        f"unknown method token {token!r}; expected rcqme:M, bmr or effsb")


def _method_column(token: str) -> str:
    kind, m = _parse_method(token)
    return f"J_rcqme_M{m}" if kind == "rcqme" else f"J_{kind}"


# ---------------------------------------------------------------------------
# serialization: flat key=value, exact round-trip


def config_to_text(config: SweepConfig) -> str:
    lines = []
    for f in fields(config):
        v = getattr(config, f.name)
        if f.name == "methods":
            v = ",".join(v)
        lines.append(f"{f.name} = {v!r}" if isinstance(v, str)
                     else f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> SweepConfig:
    field_map = {f.name: f for f in fields(SweepConfig)}
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in field_map:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _coerce(key, value)
    missing = [k for k in ("sweep_kind", "start", "stop", "points")
               if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return SweepConfig(**raw)


def _coerce(key: str, value: str):
    if value.startswith(("'", '"')) and value.endswith(value[0]) and len(value) >= 2:
        value = value[1:-1]
    if key == "methods":
        tokens = tuple(t.strip() for t in value.split(",") if t.strip())
        return tokens
    if key == "points" or key == "m_max":
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected integer, got {value!r}")
    if key in ("sweep_kind", "spacing", "output", "label"):
        return value
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected number, got {value!r}")


def apply_overrides(config: SweepConfig, overrides) -> SweepConfig:
    """key=value strings win over the config file (and over preset values)."""
    field_map = {f.name: f for f in fields(SweepConfig)}
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in field_map:
            raise ConfigError(f"override: unknown key {key!r}")
        updates[key] = _coerce(key, value.strip())
    return replace(config, **updates) if updates else config


# ---------------------------------------------------------------------------
# presets
#
# The figures the presets reproduce do not state their grids; the ranges and
# 60-point default below were chosen to resolve every turnover and crossover
# within the tolerances of the acceptance suite.


def preset(name: str) -> SweepConfig:
    """Fully populated sweep configurations for the reference figures."""
    builders = {
        "fig3": _preset_fig3, "fig4": _preset_fig4, "fig5": _preset_fig5,
        "fig6": _preset_fig6, "fig7": _preset_fig7, "fig8": _preset_fig8,
        "fig9": _preset_fig9, "fig11a": _preset_fig11a,
        "fig11b": _preset_fig11b,
    }
    if name not in builders:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return builders[name]()


def _preset_fig3() -> SweepConfig:
    # effective parameters vs coupling for the standard turnover junction
    return SweepConfig(
        sweep_kind="eff_params", start=0.0, stop=10.0, points=60,
        methods=("effsb",), output="fig3.csv", label="fig3")


def _preset_fig4() -> SweepConfig:
    # turnover at strong adiabaticity: Omega = 28, gamma = 0.0071/pi,
    # cutoff 1000 pi, T = 1 and 0.5
    return SweepConfig(
        sweep_kind="lambda", start=0.25, stop=15.0, points=60,
        methods=("rcqme:2", "rcqme:4", "bmr", "effsb"),
        output="fig4.csv", label="fig4")


def _preset_fig5() -> SweepConfig:
    # same junction with a softer RC frequency Omega = 10
    return replace(_preset_fig4(), omega_rc=10.0, output="fig5.csv",
                   label="fig5")


def _preset_fig6() -> SweepConfig:
    # current vs tunneling splitting at fixed coupling
    return SweepConfig(
        sweep_kind="delta", start=0.1, stop=6.0, points=60, coupling=1.0,
        methods=("rcqme:4", "bmr", "effsb"), output="fig6.csv", label="fig6")


def _preset_fig7() -> SweepConfig:
    # current vs average temperature, dT = 0.3 T_a
    return SweepConfig(
        sweep_kind="temperature", start=0.1, stop=2.0, points=60,
        coupling=1.0, methods=("rcqme:4", "bmr", "effsb"),
        output="fig7.csv", label="fig7")


def _preset_fig8() -> SweepConfig:
    # wide log-scale temperature window at strong coupling; the second rise
    # toward the RC scale is the point of interest
    return SweepConfig(
        sweep_kind="temperature", start=0.1, stop=40.0, points=60,
        spacing="log", coupling=4.0, methods=("rcqme:4", "effsb"),
        output="fig8.csv", label="fig8")


def _preset_fig9() -> SweepConfig:
    # rectification vs asymmetry at mean coupling 4
    return SweepConfig(
        sweep_kind="asymmetry", start=-0.9, stop=0.9, points=91,
        coupling=4.0, methods=("effsb",), output="fig9.csv", label="fig9")


def _preset_fig11a() -> SweepConfig:
    # truncation-convergence study, gamma = 0.005, Omega = 10
    return SweepConfig(
        sweep_kind="lambda", start=0.25, stop=8.0, points=60,
        omega_rc=10.0, gamma=0.005,
        methods=("rcqme:3", "rcqme:4", "rcqme:5", "effsb"),
        output="fig11a.csv", label="fig11a")


def _preset_fig11b() -> SweepConfig:
    # companion study at Omega = 5, where convergence is harder
    return replace(_preset_fig11a(), stop=5.0, omega_rc=5.0,
                   output="fig11b.csv", label="fig11b")


# ---------------------------------------------------------------------------
# evaluation


def _model_at(config: SweepConfig, value: float) -> JunctionModel:
    base = config.base_model()
    if config.sweep_kind == "lambda" or config.sweep_kind == "eff_params":
        return replace(base,
                       hot=replace(base.hot, coupling=value),
                       cold=replace(base.cold, coupling=value))
    if config.sweep_kind == "delta":
        return replace(base, delta=value)
    if config.sweep_kind == "temperature":
        half = 0.5 * config.delta_t_fraction
        return replace(base,
                       hot=replace(base.hot, temperature=value * (1 + half)),
                       cold=replace(base.cold, temperature=value * (1 - half)))
    raise ValueError(f"no point model for sweep kind {config.sweep_kind!r}")


def _evaluate_point(args: tuple[SweepConfig, float]) -> SweepRow:
    config, value = args
    cells: dict = {}
    failures: list[tuple[str, str]] = []
    if config.sweep_kind == "eff_params":
        cells["lambda"] = value
        try:
            eff = converge_effective(_model_at(config, value),
                                     tol=config.tol, m_max=config.m_max)
            cells["delta_eff"] = eff.delta_eff
            cells["f_hot"] = eff.f_hot
            cells["f_cold"] = eff.f_cold
            cells["m_used"] = float(eff.m_used)
            cells["converged"] = float(eff.converged)
        except Exception as exc:  # noqa: BLE001 - skip-and-mark policy
            for col in ("delta_eff", "f_hot", "f_cold", "m_used", "converged"):
                cells[col] = math.nan
            failures.append(("eff_params", str(exc)))
        return SweepRow(value=value, cells=cells, failures=tuple(failures))

    if config.sweep_kind == "asymmetry":
        cells["chi"] = value
        for token in config.methods:
            kind, m = _parse_method(token)
            col = _method_column(token)[2:]  # strip J_ prefix
            try:
                r = rectification(config.base_model(), config.coupling,
                                  value, method=kind, m=m,
                                  tol=config.tol, m_max=config.m_max)
                cells[f"J_fwd_{col}"] = r.current_forward
                cells[f"J_rev_{col}"] = r.current_reverse
                cells[f"R_{col}"] = r.ratio
            except Exception as exc:  # noqa: BLE001
                cells[f"J_fwd_{col}"] = math.nan
                cells[f"J_rev_{col}"] = math.nan
                cells[f"R_{col}"] = math.nan
                failures.append((token, str(exc)))
        return SweepRow(value=value, cells=cells, failures=tuple(failures))

    swept = {"lambda": "lambda", "delta": "delta",
             "temperature": "T_a"}[config.sweep_kind]
    cells[swept] = value
    model = _model_at(config, value)
    if config.sweep_kind == "temperature":
        cells["t_hot"] = model.hot.temperature
        cells["t_cold"] = model.cold.temperature
    for token in config.methods:
        kind, m = _parse_method(token)
        col = _method_column(token)
        try:
            if kind == "rcqme":
                cells[col] = current_rcqme(model, m).current
            elif kind == "bmr":
                cells[col] = current_bmr(model).current
            else:
                cells[col] = current_effsb(model, tol=config.tol,
                                           m_max=config.m_max).current
        except Exception as exc:  # noqa: BLE001
            cells[col] = math.nan
            failures.append((token, str(exc)))
    return SweepRow(value=value, cells=cells, failures=tuple(failures))


def _columns_for(config: SweepConfig) -> tuple[str, ...]:
    if config.sweep_kind == "eff_params":
        return ("lambda", "delta_eff", "f_hot", "f_cold", "m_used",
                "converged", "status")
    if config.sweep_kind == "asymmetry":
        cols = ["chi"]
        for token in config.methods:
            stem = _method_column(token)[2:]
            cols += [f"J_fwd_{stem}", f"J_rev_{stem}", f"R_{stem}"]
        return tuple(cols + ["status"])
    swept = {"lambda": "lambda", "delta": "delta",
             "temperature": "T_a"}[config.sweep_kind]
    cols = [swept]
    if config.sweep_kind == "temperature":
        cols += ["t_hot", "t_cold"]
    cols += [_method_column(token) for token in config.methods]
    return tuple(cols + ["status"])


_UNITS = {
    "lambda": "Delta", "delta": "energy", "T_a": "Delta",
    "t_hot": "Delta", "t_cold": "Delta", "chi": "dimensionless",
    "delta_eff": "Delta", "f_hot": "dimensionless",
    "f_cold": "dimensionless", "m_used": "levels",
    "converged": "flag", "status": "text",
}


def _annotate(col: str) -> str:
    if col in _UNITS:
        return f"{col} ({_UNITS[col]})"
    if col.startswith("J_"):
        return f"{col} (Delta^2)"
    if col.startswith("R_"):
        return f"{col} (dimensionless)"
    return col


def _format_cell(v: float) -> str:
    return f"{v:.17g}"


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepSummary:
    """Evaluate the grid, write the CSV, and summarize peaks and failures.

    Rows are computed possibly in parallel but always emitted in grid order,
    so the output is byte-identical for any worker count.
    """
    if config.sweep_kind == "m_convergence":
        raise ConfigError(
            "m_convergence is driven by m_convergence_report, not run_sweep")
    grid = config.grid()
    jobs = [(config, float(v)) for v in grid]
    if workers > 1:
        with Pool(processes=workers) as pool:
            rows = pool.map(_evaluate_point, jobs)
    else:
        rows = [_evaluate_point(job) for job in jobs]

    columns = _columns_for(config)
    failures = []
    with open(config.output, "w", newline="\n") as fh:
        fh.write(",".join(_annotate(c) for c in columns) + "\n")
        for row in rows:
            status = "ok" if not row.failures else (
                "failed:" + "|".join(tok for tok, _ in row.failures))
            cells = [status if c == "status" else _format_cell(row.cells[c])
                     for c in columns]
            fh.write(",".join(cells) + "\n")
            for tok, msg in row.failures:
                failures.append(f"{row.value:.6g} {tok}: {msg}")

    peaks = []
    for c in columns:
        if not (c.startswith("J_") or c.startswith("R_")):
            continue
        values = np.array([row.cells[c] for row in rows])
        if np.all(np.isnan(values)):
            continue
        k = int(np.nanargmax(values))
        peaks.append((c, float(grid[k]), float(values[k])))
    return SweepSummary(
        output=config.output,
        sweep_kind=config.sweep_kind,
        rows=len(rows),
        columns=columns,
        peaks=tuple(peaks),
        failures=tuple(failures),
    )


def m_convergence_report(model: JunctionModel, m_list) -> tuple[MConvergenceRow, ...]:
    """Current, relative change and wall time per truncation level."""
    ms = [int(m) for m in m_list]
    if len(ms) < 1:
        raise ConfigError("m_list must not be empty")
    if any(m < 2 for m in ms):
        raise ConfigError("every truncation must be at least 2")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise ConfigError("m_list must be strictly ascending")
    rows = []
    previous = None
    for m in ms:
        t0 = time.perf_counter()
        current = current_rcqme(model, m).current
        wall = time.perf_counter() - t0
        if previous is None or previous == current:
            rel = 0.0
        elif previous == 0.0:
            rel = math.inf
        else:
            rel = abs(current - previous) / abs(previous)
        rows.append(MConvergenceRow(m=m, current=current, rel_change=rel,
                                    wall_time_s=wall))
        previous = current
    return tuple(rows)
