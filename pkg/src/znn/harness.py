"""Experiment runner: configs, residual traces, order sweeps and file output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from statistics import median
from typing import Iterable, Sequence

import numpy as np

from . import fdforms, models, problems
from .errors import ConfigError, DegenerateResidual, ZnnError
from .stability import formula_stability

DEGENERATE_FLOOR = 1e-14
STEADY_FRACTION = 0.2
EMIT_FORMATS = ("csv", "svg")


@dataclass(frozen=True)
class RunConfig:
    problem: str = "example1"
    solver: str | None = None
    formula: str = "ifd5"
    derivative_mode: str = "backward"
    tau: float = 0.1
    h: float | None = None
    lam: float | None = None
    t_end: float | None = None
    init: str = "exact"
    seed: int = 1
    out: str | None = None
    entries: bool = False
    hinv: str = "lu"

    def resolved(self) -> RunConfig:
        """Fill problem-dependent defaults and validate."""
        spec = problems.get_problem(self.problem)
        solver = self.solver or spec.default_solver
        t_end = spec.t_end if self.t_end is None else float(self.t_end)
        h, lam = self.h, self.lam
        if h is not None and lam is not None:
            raise ConfigError("give exactly one of h and lambda")
        if h is None and lam is None:
            if solver in ("tvpinv", "tvinv"):
                h = models.DEFAULT_H
            else:
                lam = models.DEFAULT_LAMBDA
        cfg = replace(self, solver=solver, t_end=t_end, h=h, lam=lam)
        cfg.validate()
        return cfg

    def validate(self):
        spec = problems.get_problem(self.problem)
        if self.solver not in models.SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.solver not in spec.solvers:
            raise ConfigError(f"problem {self.problem!r} works with {', '.join(spec.solvers)}, not {self.solver}")
        f = fdforms.get(self.formula)
        if not f.is_one_step_ahead:
            raise ConfigError(f"{self.formula} is not one-step-ahead; solvers need one of "
                              f"{', '.join(fdforms.one_step_ahead_names())}")
        if self.derivative_mode not in models.DERIVATIVE_MODES:
            raise ConfigError(f"derivative mode must be one of {models.DERIVATIVE_MODES}")
        if self.init not in ("exact", "random"):
            raise ConfigError("init must be exact or random")
        if (self.h is None) == (self.lam is None):
            raise ConfigError("give exactly one of h and lambda")
        for name in ("tau", "h", "lam", "t_end"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v}")
        n = round(self.t_end / self.tau)
        if n < 10 or abs(n * self.tau - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConfigError(f"tau={self.tau} must divide t_end={self.t_end} into at least 10 steps")

    @property
    def decay(self) -> models.DecaySpec:
        if self.h is not None:
            return models.DecaySpec.from_h(self.h, self.tau)
        return models.DecaySpec.from_lambda(self.lam, self.tau)

    def echo(self) -> dict:
        d = asdict(self)
        dec = self.decay
        d.update(lam_effective=dec.lam, h_effective=dec.h)
        return d


@dataclass(frozen=True)
class TraceRow:
    k: int
    t: float
    residual: float
    entries: tuple[float, ...] = ()


@dataclass
class ResidualTrace:
    config: RunConfig
    rows: list[TraceRow] = field(default_factory=list)
    entry_names: tuple[str, ...] = ()

    @property
    def steady_state_residual(self) -> float:
        return steady_state([r.residual for r in self.rows])

    @property
    def columns(self) -> tuple[str, ...]:
        return ("k", "t", "residual") + self.entry_names

    def column(self, name: str) -> np.ndarray:
        if name in ("k", "t", "residual"):
            return np.array([getattr(r, name) for r in self.rows])
        i = self.entry_names.index(name)
        return np.array([r.entries[i] for r in self.rows])


def steady_state(values: Sequence[float]) -> float:
    """Median over the final 20% of a run."""
    if not values:
        raise ValueError("empty trace")
    tail = max(1, int(round(STEADY_FRACTION * len(values))))
    return float(median(values[-tail:]))


def build_problem(cfg: RunConfig):
    return problems.get_problem(cfg.problem).factory()


def _entry_names(solver, shape) -> tuple[str, ...]:
    if len(shape) == 2:
        idx = [f"{i + 1}_{j + 1}" for i in range(shape[0]) for j in range(shape[1])]
    else:
        idx = [f"{i + 1}" for i in range(shape[0])]
    return tuple(f"entry_{s}" for s in idx) + tuple(f"oracle_{s}" for s in idx)


def _oracle(cfg: RunConfig, run: models.ZnnRun, k: int) -> np.ndarray:
    spec = problems.get_problem(cfg.problem)
    t = run.time(k)
    if run.solver in ("tvinv", "tvpinv"):
        if spec.entry_oracle is not None and run.problem.shape[0] == run.problem.shape[1]:
            return spec.entry_oracle(t)
        return problems.pinv_oracle(run.problem, t)
    return run.problem.solution(t)


def run(config: RunConfig, problem=None) -> ResidualTrace:
    """Warm up, then step to ``t_end``; one row per instant ``k = 1..N``.

    ``problem`` overrides the named problem object (e.g. a frozen signal)
    while keeping the config's solver settings.
    """
    cfg = config.resolved()
    prob = build_problem(cfg) if problem is None else problem
    zr = models.ZnnRun(cfg.solver, prob, cfg.formula, cfg.decay, cfg.derivative_mode,
                       cfg.t_end, cfg.init, cfg.seed, hinv=cfg.hinv)
    n = zr.n_steps
    seeded = zr.initialize()
    names = _entry_names(cfg.solver, np.shape(seeded[0])) if cfg.entries else ()
    trace = ResidualTrace(cfg, [], names)

    def record(k, it):
        extra = ()
        if cfg.entries:
            extra = tuple(float(v) for v in np.ravel(it)) + tuple(float(v) for v in np.ravel(_oracle(cfg, zr, k)))
        trace.rows.append(TraceRow(k, zr.time(k), models.residual(zr, it, k), extra))

    for j, it in enumerate(seeded):
        if 1 <= j <= n:
            record(j, it)
    while zr.k < n:
        try:
            it = zr.step()
        except ZnnError as exc:
            exc.step = zr.k
            raise
        record(zr.k, it)
    return trace


def fit_order(taus: Sequence[float], residuals: Sequence[float]) -> tuple[list[float], float]:
    """Pairwise and least-squares slopes of log(residual) against log(tau)."""
    lt, lr = np.log(np.asarray(taus, float)), np.log(np.asarray(residuals, float))
    pairs = [float((lr[i] - lr[i + 1]) / (lt[i] - lt[i + 1])) for i in range(len(lt) - 1)]
    aggregate = float(np.polyfit(lt, lr, 1)[0]) if len(lt) > 1 else math.nan
    return pairs, aggregate


@dataclass
class OrderTable:
    taus: list[float]
    residuals: list[float]
    pair_orders: list[float]
    order: float
    traces: list[ResidualTrace] = field(default_factory=list, repr=False)

    def rows(self) -> list[tuple]:
        out = []
        for i, (tau, res) in enumerate(zip(self.taus, self.residuals)):
            p = self.pair_orders[i - 1] if i > 0 else math.nan
            out.append((tau, res, p))
        return out

    def render(self) -> str:
        lines = ["tau,steady_state_residual,p_hat"]
        for tau, res, p in self.rows():
            lines.append(f"{tau!r},{res!r},{'' if math.isnan(p) else repr(p)}")
        lines.append(f"aggregate,,{self.order!r}")
        return "\n".join(lines)


def sweep_order(base: RunConfig, taus: Iterable[float]) -> OrderTable:
    """Steady-state residual per tau with h held fixed (lambda = h / tau)."""
    taus = [float(t) for t in taus]
    if len(taus) < 2:
        raise ConfigError("a sweep needs at least two tau values")
    if base.lam is not None:
        raise ConfigError("sweeps hold h fixed; give h, not lambda")
    if base.h is None:
        base = replace(base, h=models.DEFAULT_H)
    traces, res = [], []
    for tau in taus:
        tr = run(replace(base, tau=tau))
        ss = tr.steady_state_residual
        if ss < DEGENERATE_FLOOR:
            raise DegenerateResidual(f"steady-state residual {ss:.3e} at tau={tau} is below {DEGENERATE_FLOOR}")
        traces.append(tr)
        res.append(ss)
    pairs, agg = fit_order(taus, res)
    return OrderTable(taus, res, pairs, agg, traces)


def stability_report(name: str) -> str:
    f = fdforms.get(name)
    if not f.is_one_step_ahead:
        raise ConfigError(f"{name} is not one-step-ahead")
    u = fdforms.one_step_ahead_update(f)
    head = [
        f"formula {f.name}: {f}",
        f"update: x[k+1] = {u.tau_dot_coeff}*tau*x'(t_k) + "
        + " + ".join(f"({a})*x[k-{i}]" if i else f"({a})*x[k]" for i, a in enumerate(u.history_coeffs)),
    ]
    return "\n".join(head + [formula_stability(f).render()])


# -- files -------------------------------------------------------------------

def write_csv(trace: ResidualTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace.columns)
        for r in trace.rows:
            w.writerow([r.k, repr(r.t), repr(r.residual)] + [repr(v) for v in r.entries])
    return path


def read_csv(path) -> tuple[tuple[str, ...], list[TraceRow]]:
    with Path(path).open(newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        rows = [TraceRow(int(r[0]), float(r[1]), float(r[2]), tuple(float(v) for v in r[3:])) for r in rd]
    return header, rows


def read_trace(prefix) -> ResidualTrace:
    """Rebuild a trace from ``prefix.csv`` and its ``prefix.json`` sidecar."""
    prefix = Path(prefix)
    header, rows = read_csv(prefix.with_suffix(".csv"))
    meta = json.loads(prefix.with_suffix(".json").read_text())
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig(**{k: v for k, v in meta["config"].items() if k in known})
    return ResidualTrace(cfg, rows, header[3:])


def emit(trace: ResidualTrace, formats: Iterable[str] = ("csv",), prefix=None) -> list[Path]:
    """Write ``prefix.csv`` (+ ``prefix.json`` metadata) and/or ``prefix.svg``."""
    if not trace.rows:
        raise ValueError("empty trace")
    prefix = Path(prefix or trace.config.out or "trace")
    prefix.parent.mkdir(parents=True, exist_ok=True)
    formats = list(formats)
    bad = [f for f in formats if f not in EMIT_FORMATS]
    if bad:
        raise ConfigError(f"unknown output format(s) {bad}; choose from {EMIT_FORMATS}")
    written = []
    if "csv" in formats:
        written.append(write_csv(trace, prefix.with_suffix(".csv")))
        meta = {"config": trace.config.echo(), "rows": len(trace.rows),
                "steady_state_residual": trace.steady_state_residual}
        side = prefix.with_suffix(".json")
        side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(side)
    if "svg" in formats:
        from .plotting import plot_trace
        written.append(plot_trace(trace, prefix.with_suffix(".svg")))
        if trace.entry_names:
            from .plotting import plot_entries
            written.append(plot_entries(trace, prefix.parent / (prefix.name + "_entries.svg")))
    return written


def emit_sweep(table: OrderTable, formats: Iterable[str], prefix) -> list[Path]:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        p = prefix.with_suffix(".csv")
        p.write_text(table.render() + "\n")
        written.append(p)
    if "svg" in formats:
        from .plotting import plot_sweep
        written.append(plot_sweep(table, prefix.with_suffix(".svg")))
    return written


# -- key = value config files -----------------------------------------------

CONFIG_KEYS = {
    "problem": ("problem", str), "solver": ("solver", str), "formula": ("formula", str),
    "derivative": ("derivative_mode", str), "tau": ("tau", float), "h": ("h", float),
    "lambda": ("lam", float), "t-end": ("t_end", float), "init": ("init", str),
    "seed": ("seed", int), "out": ("out", str), "emit": ("emit", str),
    "entries": ("entries", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
    "hinv": ("hinv", str), "taus": ("taus", str),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into RunConfig-style keys."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv = CONFIG_KEYS[key]
        try:
            out[attr] = conv(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    return out
