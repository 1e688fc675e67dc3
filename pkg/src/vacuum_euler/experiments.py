"""Experiment configs, single runs, sweeps, convergence studies and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affine_oracle import AffineParams, AffineReference, integrate_lambda, to_rescaled
from .energy import Context, energy_reports, normalized_velocity
from .params import make_eos
from .radial_solver import SolverConfig, Trajectory, run
from .weights import cutoff

OUTPUT_ENV = "VACUUM_EULER_OUT"
MODES = ("run", "sweep", "oracle", "ops-check", "convergence", "envelopes")
VELOCITY_SHAPES = {
    "one": lambda r: np.ones_like(r),
    "r2": lambda r: r**2,
    "bump": lambda r: np.exp(-4 * r**2),
}
CSV_COLUMNS = (
    "tau",
    "x0_bnd",
    "x0_int",
    "x1_bnd",
    "x1_int",
    "x2_bnd",
    "x2_int",
    "ygrad",
    "ydiv",
    "ycurl",
    "S_N",
    "C_N",
    "damping",
    "apriori_S",
    "apriori_A",
    "apriori_J",
    "res_zero_order",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "run"
    n: int = 129
    cfl: float = 0.4
    tau_max: float = 5.0
    stride: float = 0.01
    dtau_max: float | None = None
    delta: float = 1e-3
    epsilon: float = 0.0
    gamma: float = 2.0
    profile: str = "model"
    r1: float = 0.5
    r0: float = 0.75
    order: int = 2
    scheme: str = "analytic-weight"
    velocity: str = "one"
    amplitude: float | None = None
    lambda0: float = 1.0
    lambdadot0: float = 1.05
    deltas: tuple = (1e-4, 1e-3, 1e-2)
    epsilons: tuple = (0.0, 1e-3, 1e-2)
    gammas: tuple = (5.0 / 3.0, 2.0)
    levels: int = 3
    workers: int = 1
    output: str | None = None
    identity: bool = True
    stop_on_violation: bool = True
    beta: float = 2.0
    tmax: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {self.mode!r}")
        if self.velocity not in VELOCITY_SHAPES and self.velocity != "affine":
            raise ConfigError(f"velocity: unknown shape {self.velocity!r}")
        if self.mode == "sweep":
            for name in ("deltas", "epsilons", "gammas"):
                if len(getattr(self, name)) == 0:
                    raise ConfigError(f"{name}: sweep lists must be nonempty")
        if self.order < 0 or self.order > 2:
            raise ConfigError("order: diagnostics support N in {0, 1, 2}")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")
        if self.mode == "convergence" and self.levels < 3:
            raise ConfigError("levels: a convergence study needs at least 3 levels")
        try:
            self.solver()
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in data.items():
            if key not in names:
                raise ConfigError(f"{key}: unknown field")
            if key in ("deltas", "epsilons", "gammas"):
                if not isinstance(value, (list, tuple)):
                    raise ConfigError(f"{key}: expected a list")
                value = tuple(float(v) for v in value)
            elif key in ("n", "order", "levels", "workers"):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key}: expected an integer")
            elif key in ("mode", "profile", "scheme", "velocity", "output"):
                if value is not None and not isinstance(value, str):
                    raise ConfigError(f"{key}: expected a string")
            elif key in ("identity", "stop_on_violation"):
                if not isinstance(value, bool):
                    raise ConfigError(f"{key}: expected true or false")
            elif value is not None:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key}: expected a number")
                value = float(value)
            kw[key] = value
        return cls(**kw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"config: invalid JSON ({err})") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        return cls.from_dict(data)

    def with_(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def canonical(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("output")
        d.pop("workers")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]

    def solver(self) -> SolverConfig:
        return SolverConfig(
            n=self.n,
            cfl=self.cfl,
            tau_max=self.tau_max,
            stride=self.stride,
            dtau_max=self.dtau_max,
            delta=self.delta,
            epsilon=self.epsilon,
            gamma=self.gamma,
            profile=self.profile,
            r1=self.r1,
            r0=self.r0,
            order=self.order,
            scheme=self.scheme,
        )

    def context(self) -> Context:
        sc = self.solver()
        return Context(sc.eos, sc.weight, cutoff(self.r1, self.r0), self.delta, self.order)

    def output_dir(self) -> Path:
        root = self.output or os.environ.get(OUTPUT_ENV) or "out"
        return Path(root)


@dataclass
class RunRecord:
    config_hash: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    status: str = "completed"
    abort_tau: float | None = None
    wall_time: float = 0.0
    csv_path: str | None = None

    @property
    def sup_S(self) -> float:
        return max((row["S_N"] for row in self.rows), default=0.0)

    @property
    def status_label(self) -> str:
        return self.status if self.abort_tau is None else f"{self.status}({self.abort_tau:g})"


def initial_data(cfg: ExperimentConfig):
    """(phi0, nu0) callables of r for a config."""
    if cfg.velocity == "affine":
        return (lambda r: cfg.lambda0 * r), (lambda r: (cfg.lambdadot0 - cfg.lambda0) * r)
    shape = VELOCITY_SHAPES[cfg.velocity]
    if cfg.amplitude is not None:
        return None, (lambda r: cfg.amplitude * shape(r) * r)
    nu0 = normalized_velocity(shape, cfg.epsilon, cfg.context(), cfg.n)
    return None, (lambda r: nu0)


def simulate(cfg: ExperimentConfig) -> Trajectory:
    phi0, nu0 = initial_data(cfg)
    return run(cfg.solver(), initial_velocity=nu0, initial_phi=phi0)


def report_rows(traj: Trajectory, cfg: ExperimentConfig) -> list[dict]:
    ctx = cfg.context()
    reports = energy_reports(traj, ctx, with_identity=cfg.identity and len(traj) >= 3)
    rows = []
    for rep in reports:
        row = {"tau": rep.tau}
        for m in range(3):
            row[f"x{m}_bnd"] = rep.x_theta.boundary[m] if m < len(rep.x_theta.boundary) else 0.0
            row[f"x{m}_int"] = rep.x_theta.interior[m] if m < len(rep.x_theta.interior) else 0.0
        row.update(
            ygrad=rep.y_grad,
            ydiv=rep.y_div,
            ycurl=rep.y_curl,
            S_N=rep.S_N,
            C_N=rep.C_N,
            damping=rep.damping,
            apriori_S=int(rep.apriori["S_ok"]),
            apriori_A=int(rep.apriori["A_ok"]),
            apriori_J=int(rep.apriori["J_ok"]),
            res_zero_order=rep.res_zero_order,
        )
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def table_dat(rows: list[dict], columns) -> str:
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(_fmt(row[c]) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


def write_table(path: Path, rows: list[dict], columns) -> Path:
    atomic_write(path, table_csv(rows, columns))
    atomic_write(path.with_suffix(".dat"), table_dat(rows, columns))
    return path


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunRecord:
    """One solver run with per-stride energy rows.

    An a-priori violation ends the record at the first offending stride when
    ``stop_on_violation`` is set; solver aborts end it at the last good stride.
    """
    t0 = time.perf_counter()
    traj = simulate(cfg)
    rows = report_rows(traj, cfg)
    status, abort_tau = traj.status, traj.abort_tau
    if cfg.stop_on_violation:
        for k, row in enumerate(rows):
            if not (row["apriori_S"] and row["apriori_A"] and row["apriori_J"]):
                rows = rows[: k + 1]
                status, abort_tau = "apriori_violation", row["tau"]
                break
    rec = RunRecord(cfg.hash, cfg, rows, status, abort_tau, time.perf_counter() - t0)
    if write:
        path = cfg.output_dir() / f"run-{cfg.hash}.csv"
        rec.csv_path = str(write_table(path, rows, CSV_COLUMNS))
    return rec


def _run_isolated(cfg: ExperimentConfig) -> RunRecord:
    try:
        return run_experiment(cfg)
    except Exception as err:  # a failed member never takes the sweep down
        return RunRecord(cfg.hash, cfg, [], f"error: {err}", None, 0.0)


def sweep_configs(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    return [
        cfg.with_(mode="run", delta=d, epsilon=e, gamma=g)
        for d, e, g in itertools.product(cfg.deltas, cfg.epsilons, cfg.gammas)
    ]


def sweep(cfg: ExperimentConfig) -> list[RunRecord]:
    members = sweep_configs(cfg)
    if cfg.workers == 1:
        records = [_run_isolated(c) for c in members]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_isolated, members))
    summary = [
        {
            "hash": r.config_hash,
            "delta": r.config.delta,
            "epsilon": r.config.epsilon,
            "gamma": r.config.gamma,
            "status": r.status_label,
            "sup_S": r.sup_S,
            "ratio": r.sup_S / (r.config.epsilon + math.sqrt(r.config.delta)),
        }
        for r in records
    ]
    atomic_write(cfg.output_dir() / f"sweep-{cfg.hash}.json", json.dumps(summary, indent=1) + "\n")
    return records


def fitted_constant(records: list[RunRecord]) -> float:
    """Smallest C with sup S_N <= C (eps + sqrt(delta)) over the records."""
    return max(r.sup_S / (abs(r.config.epsilon) + math.sqrt(r.config.delta)) for r in records)


# ---------------------------------------------------------------------------


@dataclass
class ConvergenceTable:
    ns: list
    errors: list
    ratios: list
    orders: list
    floor_limited: bool

    def rows(self) -> list[dict]:
        out = []
        for k, n in enumerate(self.ns):
            out.append(
                {
                    "n": n,
                    "error": self.errors[k],
                    "ratio": self.ratios[k - 1] if k else float("nan"),
                    "order": self.orders[k - 1] if k else float("nan"),
                }
            )
        return out


ROUNDOFF_FLOOR = 1e-10


def oracle_error(cfg: ExperimentConfig) -> float:
    """Sup over strides and nodes of |phi - phi_oracle| and |nu - nu_oracle|."""
    traj = run(
        cfg.solver(),
        initial_velocity=lambda r: (cfg.lambdadot0 - cfg.lambda0) * r,
        initial_phi=lambda r: cfg.lambda0 * r,
    )
    if traj.status != "completed":
        raise ArithmeticError(f"solver ended with {traj.status}")
    ref = AffineReference.for_tau(AffineParams(cfg.lambda0, cfg.lambdadot0, cfg.delta, make_eos(cfg.gamma)), cfg.tau_max)
    phi_o, nu_o = to_rescaled(ref, traj.taus, traj.r)
    return float(max(np.max(np.abs(traj.phi - phi_o)), np.max(np.abs(traj.nu - nu_o))))


def convergence_study(cfg: ExperimentConfig, levels: int | None = None) -> ConvergenceTable:
    """Errors against the dilation oracle on grids n, 2n-1, 4n-3, ...

    When every error sits below the roundoff floor the observed orders carry no
    information; the table flags this instead of reporting them as a failure
    of the scheme.
    """
    levels = cfg.levels if levels is None else levels
    if levels < 3:
        raise ValueError("at least 3 levels required")
    if cfg.profile != "model":
        raise ValueError("the dilation oracle requires the model profile")
    ns = [(cfg.n - 1) * 2**k + 1 for k in range(levels)]
    errors = [oracle_error(cfg.with_(n=n)) for n in ns]
    ratios = [errors[k] / errors[k + 1] if errors[k + 1] > 0 else float("inf") for k in range(levels - 1)]
    orders = [math.log2(q) if 0 < q < float("inf") else float("nan") for q in ratios]
    return ConvergenceTable(ns, errors, ratios, orders, all(e < ROUNDOFF_FLOOR for e in errors))


def oracle_rows(cfg: ExperimentConfig) -> list[dict]:
    params = AffineParams(cfg.lambda0, cfg.lambdadot0, cfg.delta, make_eos(cfg.gamma))
    series = integrate_lambda(params, cfg.tmax, cfg.dt)
    tau = np.log1p(series.t)
    phi, nu = to_rescaled(series, tau, np.array([1.0]))
    return [
        {
            "t": series.t[k],
            "lambda": series.lam[k],
            "lambdadot": series.lamdot[k],
            "energy": series.energy[k],
            "tau": tau[k],
            "phi_over_r": phi[k, 0],
            "nu_over_r": nu[k, 0],
        }
        for k in range(len(series.t))
    ]


ORACLE_COLUMNS = ("t", "lambda", "lambdadot", "energy", "tau", "phi_over_r", "nu_over_r")
