import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from znn import cli, harness, problems
from znn.errors import ConfigError, DegenerateResidual, UnknownFormula, UnknownProblem

RC = harness.RunConfig


# -- configuration -----------------------------------------------------------------

def test_defaults_resolve_per_solver():
    c = RC(problem="example1").resolved()
    assert (c.solver, c.h, c.lam, c.t_end) == ("tvpinv", 0.1, None, 30.0)
    c = RC(problem="example_opt", formula="euler_fwd").resolved()
    assert (c.solver, c.h, c.lam) == ("tvopt", None, 10.0)


@pytest.mark.parametrize("kwargs,exc", [
    (dict(h=0.1, lam=1.0), ConfigError),
    (dict(tau=0.7), ConfigError),            # 30 / 0.7 is not whole
    (dict(tau=5.0), ConfigError),            # fewer than 10 steps
    (dict(tau=-0.1), ConfigError),
    (dict(formula="bwd3"), ConfigError),
    (dict(formula="nope"), UnknownFormula),
    (dict(problem="nope"), UnknownProblem),
    (dict(solver="tvopt"), ConfigError),     # example1 is a matrix problem
    (dict(init="zeros"), ConfigError),
    (dict(derivative_mode="central"), ConfigError),
])
def test_invalid_configs_rejected(kwargs, exc):
    with pytest.raises(exc):
        RC(**kwargs).resolved()


def test_config_errors_are_value_errors():
    with pytest.raises(ValueError):
        RC(h=0.1, lam=1.0).resolved()


def test_echo_reports_both_gains():
    e = RC(problem="example_opt", tau=0.01).resolved().echo()
    assert e["lam_effective"] == 10.0 and e["h_effective"] == pytest.approx(0.1)


# -- traces ------------------------------------------------------------------------

def test_example2_row_count_and_baseline():
    tr = harness.run(RC(problem="example2", solver="tvinv"))
    assert len(tr.rows) == 300
    assert [r.k for r in tr.rows] == list(range(1, 301))
    assert tr.rows[-1].t == pytest.approx(30.0)
    assert tr.steady_state_residual == pytest.approx(1.363134184427974e-05, rel=1e-6)


def test_random_init_baseline():
    tr = harness.run(RC(problem="example2", solver="tvinv", init="random", seed=1))
    assert tr.steady_state_residual == pytest.approx(1.3627637024005804e-05, rel=1e-6)


def test_constant_matrix_residual_stays_at_roundoff():
    sig = problems.frozen(problems.example1(), 2.0)
    tr = harness.run(RC(problem="example1", t_end=5.0), problem=sig)
    assert max(tr.column("residual")) <= 1e-10


def test_entries_columns_present():
    tr = harness.run(RC(problem="example2", solver="tvinv", t_end=2.0, entries=True))
    assert tr.columns[:3] == ("k", "t", "residual")
    assert "entry_1_2" in tr.columns and "oracle_2_2" in tr.columns
    assert np.allclose(tr.column("entry_1_1"), tr.column("oracle_1_1"), atol=1e-3)


def test_steady_state_median_of_tail():
    vals = [100.0] * 80 + [1.0, 2.0, 3.0] * 6 + [2.0, 2.0]
    assert harness.steady_state(vals) == 2.0
    with pytest.raises(ValueError):
        harness.steady_state([])


def test_run_is_deterministic():
    a = harness.run(RC(problem="example2", solver="tvinv", init="random", seed=1, t_end=5.0))
    b = harness.run(RC(problem="example2", solver="tvinv", init="random", seed=1, t_end=5.0))
    assert a.rows == b.rows


def test_step_index_attached_to_numerical_error():
    sig = problems.MatrixSignal((2, 2), lambda t: np.array([[1.0, 0.0], [0.0, 1.0 - t]]),
                                lambda t: np.array([[0.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(Exception) as info:
        harness.run(RC(problem="example2", solver="tvinv", t_end=2.0, tau=0.1), problem=sig)
    assert getattr(info.value, "step", None) is not None


# -- files -------------------------------------------------------------------------

def _three_rows():
    cfg = RC(problem="example1").resolved()
    rows = [harness.TraceRow(k, 0.1 * k, 10.0 ** -k) for k in (1, 2, 3)]
    return harness.ResidualTrace(cfg, rows)


def test_three_row_trace_gives_four_line_csv(tmp_path):
    harness.emit(_three_rows(), ["csv"], tmp_path / "t")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[0] == "k,t,residual"


def test_csv_json_round_trip(tmp_path):
    tr = harness.run(RC(problem="example2", solver="tvinv", t_end=3.0, entries=True))
    harness.emit(tr, ["csv"], tmp_path / "run")
    back = harness.read_trace(tmp_path / "run")
    assert back.rows == tr.rows
    assert back.config == tr.config
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["rows"] == 30


def test_svg_written(tmp_path):
    tr = harness.run(RC(problem="example2", solver="tvinv", t_end=3.0, entries=True))
    paths = harness.emit(tr, ["svg"], tmp_path / "fig")
    assert {p.name for p in paths} == {"fig.svg", "fig_entries.svg"}
    assert all(p.read_text().lstrip().startswith("<?xml") for p in paths)


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ConfigError):
        harness.emit(_three_rows(), ["png"], tmp_path / "x")


# -- order sweeps --------------------------------------------------------------------

def test_fit_order_exact_power_law():
    taus = [0.1, 0.01, 0.001]
    pairs, agg = harness.fit_order(taus, [3 * t ** 2.5 for t in taus])
    assert pairs == pytest.approx([2.5, 2.5]) and agg == pytest.approx(2.5)


@given(st.floats(0.5, 6.0), st.floats(1e-3, 1e3))
@settings(max_examples=30, deadline=None)
def test_fit_order_recovers_slope(p, c):
    taus = [0.2, 0.05, 0.01]
    _, agg = harness.fit_order(taus, [c * t ** p for t in taus])
    assert agg == pytest.approx(p, rel=1e-9)


def test_sweep_rejects_lambda():
    with pytest.raises(ConfigError):
        harness.sweep_order(RC(problem="example1", lam=1.0), [0.1, 0.01])


def test_sweep_needs_two_taus():
    with pytest.raises(ConfigError):
        harness.sweep_order(RC(problem="example1"), [0.1])


@pytest.mark.parametrize("formula,lo,hi", [("euler_fwd", 1.3, 2.7), ("ifd5", 3.3, 4.7)])
def test_sweep_example1_orders(formula, lo, hi):
    table = harness.sweep_order(RC(problem="example1", formula=formula), [0.1, 0.01])
    assert lo <= table.order <= hi
    text = table.render().splitlines()
    assert text[0] == "tau,steady_state_residual,p_hat" and text[-1].startswith("aggregate,,")


def test_sweep_degenerate_residual():
    sig = problems.frozen(problems.example1(), 0.0)
    base = RC(problem="example1")
    orig = harness.build_problem
    try:
        harness.build_problem = lambda cfg: sig
        with pytest.raises(DegenerateResidual):
            harness.sweep_order(base, [0.1, 0.05])
    finally:
        harness.build_problem = orig


def test_emit_sweep(tmp_path):
    table = harness.OrderTable([0.1, 0.01], [1e-2, 1e-4], [2.0], 2.0)
    paths = harness.emit_sweep(table, ["csv", "svg"], tmp_path / "sw")
    assert [p.name for p in paths] == ["sw.csv", "sw.svg"]


# -- stability report ---------------------------------------------------------------

def test_stability_report_ifd5():
    text = harness.stability_report("ifd5")
    assert "0-stable: yes" in text
    assert "ifd5" in text


def test_stability_report_rejects_backward():
    with pytest.raises(ConfigError):
        harness.stability_report("bwd3")


# -- config text ---------------------------------------------------------------------

def test_parse_config_text():
    text = """
    # comment line
    problem = example2
    solver = tvinv   # trailing comment
    t_end = 12
    lambda = 4.5
    entries = yes
    seed = 3
    """
    assert harness.parse_config_text(text) == dict(
        problem="example2", solver="tvinv", t_end=12.0, lam=4.5, entries=True, seed=3)


@pytest.mark.parametrize("text", ["problem example1", "colour = red", "tau = fast"])
def test_parse_config_text_errors(text):
    with pytest.raises(ConfigError):
        harness.parse_config_text(text)


# -- command line ---------------------------------------------------------------------

def test_cli_run_stdout(capsys):
    assert cli.main(["run", "--problem", "example2", "--solver", "tvinv", "--t-end", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "k,t,residual" and len(out) == 21


def test_cli_run_writes_files(tmp_path, capsys):
    prefix = tmp_path / "o" / "r"
    code = cli.main(["run", "--problem", "example1", "--t-end", "3", "--out", str(prefix),
                     "--emit", "csv,svg"])
    assert code == 0
    assert (tmp_path / "o" / "r.csv").exists() and (tmp_path / "o" / "r.svg").exists()
    assert capsys.readouterr().out.startswith("rows,30")


def test_cli_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("problem = example2\nsolver = tvinv\nt-end = 5\nlambda = 1\n")
    assert cli.main(["run", "--config", str(cfg), "--t-end", "2", "--h", "0.2"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 21


@pytest.mark.parametrize("argv", [
    ["run", "--problem", "example1", "--tau", "0.7"],
    ["run", "--problem", "example1", "--solver", "tvopt"],
    ["stability", "bwd3"],
    ["stability", "nope"],
    ["sweep", "--problem", "example1", "--lambda", "2"],
])
def test_cli_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert capsys.readouterr().err


def test_cli_missing_config_file_exit_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_numerical_failure_exit_3(tmp_path, capsys):
    # h = 3 pushes every stable formula past its stability boundary
    code = cli.main(["run", "--problem", "example1", "--formula", "euler_fwd", "--h", "3.0",
                     "--init", "random", "--t-end", "30"])
    assert code == 3
    assert "step" in capsys.readouterr().err


def test_cli_stability_and_list(capsys):
    assert cli.main(["stability", "ifd5", "euler_fwd"]) == 0
    out = capsys.readouterr().out
    assert out.count("0-stable:") == 2
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "example_opt" in out and "ifd4_opt" in out


def test_cli_sweep(capsys):
    assert cli.main(["sweep", "--problem", "example1", "--formula", "ifd4_a",
                     "--taus", "0.1,0.01"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "tau,steady_state_residual,p_hat" and len(lines) == 4
