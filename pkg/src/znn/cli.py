"""Command line: ``znn {run,sweep,stability,list}``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import fdforms, harness, problems
from .errors import ConfigError, NumericalError

log = logging.getLogger("znn")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _run_args(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key = value file; flags override it")
    p.add_argument("--problem", choices=sorted(problems.PROBLEMS))
    p.add_argument("--solver", choices=["tvlin", "tvinv", "tvpinv", "tvopt"])
    p.add_argument("--formula", choices=fdforms.one_step_ahead_names())
    p.add_argument("--tau", type=float)
    gain = p.add_mutually_exclusive_group()
    gain.add_argument("--h", type=float, help="step gain tau*lambda")
    gain.add_argument("--lambda", dest="lam", type=float, help="decay constant (1/s)")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--init", choices=["exact", "random"])
    p.add_argument("--seed", type=int)
    p.add_argument("--derivative", dest="derivative_mode", choices=["analytic", "backward"])
    p.add_argument("--hinv", choices=["lu", "znn"], help="KKT Jacobian inverse for tvopt")
    p.add_argument("--entries", action="store_true", default=None,
                   help="add iterate and oracle columns to the trace")
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--emit", help="comma list of csv,svg (default csv when --out is given)")


def _merge(args) -> tuple[harness.RunConfig, dict]:
    """Config file first, then command-line flags on top."""
    values = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        values.update(harness.parse_config_text(text))
    for name in ("problem", "solver", "formula", "tau", "t_end", "init", "seed",
                 "derivative_mode", "hinv", "entries", "out", "emit", "taus"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    # h and lambda are exclusive; a flag for one replaces a file value for the other
    if args.h is not None:
        values["h"] = args.h
        values.pop("lam", None)
    if args.lam is not None:
        values["lam"] = args.lam
        values.pop("h", None)
    extra = {k: values.pop(k) for k in ("emit", "taus") if k in values}
    known = {f.name for f in fields(harness.RunConfig)}
    cfg = harness.RunConfig(**{k: v for k, v in values.items() if k in known})
    return cfg, extra


def _formats(extra, cfg) -> list[str]:
    if "emit" in extra:
        return [s.strip() for s in extra["emit"].split(",") if s.strip()]
    return ["csv"] if cfg.out else []


def cmd_run(args) -> int:
    cfg, extra = _merge(args)
    formats = _formats(extra, cfg)
    if formats and not cfg.out:
        raise ConfigError("--emit needs --out")
    trace = harness.run(cfg)
    if formats:
        for path in harness.emit(trace, formats, cfg.out):
            log.info("wrote %s", path)
        print(f"rows,{len(trace.rows)}")
        print(f"steady_state_residual,{trace.steady_state_residual!r}")
    else:
        print(",".join(trace.columns))
        for r in trace.rows:
            print(",".join([str(r.k), repr(r.t), repr(r.residual)] + [repr(v) for v in r.entries]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, extra = _merge(args)
    taus_text = extra.get("taus", "0.1,0.01")
    try:
        taus = [float(s) for s in taus_text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad --taus {taus_text!r}") from None
    table = harness.sweep_order(cfg, taus)
    print(table.render())
    formats = _formats(extra, cfg)
    if formats:
        if not cfg.out:
            raise ConfigError("--emit needs --out")
        for path in harness.emit_sweep(table, formats, cfg.out):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_stability(args) -> int:
    names = args.formulas or fdforms.one_step_ahead_names()
    for i, name in enumerate(names):
        if i:
            print()
        print(harness.stability_report(name))
    return EXIT_OK


def cmd_list(args) -> int:
    print("problems:")
    for p in problems.PROBLEMS.values():
        print(f"  {p.name:<12} solvers={','.join(p.solvers):<12} t_end={p.t_end:g}")
    print("formulas:")
    for f in fdforms.registry().values():
        print(f"  {f.name:<10} {f.kind:<15} order {fdforms.verify_order(f)}  {f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="znn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one solver configuration")
    _run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="steady-state residual and fitted order over tau (h fixed)")
    _run_args(p)
    p.add_argument("--taus", help="comma list, e.g. 0.1,0.01,0.001")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", help="characteristic polynomial, roots and 0-stability")
    p.add_argument("formulas", nargs="*", help="one-step-ahead formula names (default: all)")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("list", help="list problems and formulas")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
