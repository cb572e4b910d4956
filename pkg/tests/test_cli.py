import io
import math

import numpy as np
import pytest

from cylbem import cli
from cylbem.cli import SweepConfig, SweepRow
from cylbem.spectra import ConfigError


def test_parse_config_text():
    text = """
    # sweep
    ka_start = 10   # inline comment
    ka-stop = 20
    points = 15
    formulation = TE-EFIE, TM-CCFIE
    norms = L2,cond
    """
    vals = cli.parse_config_text(text)
    assert vals == {"ka_start": 10.0, "ka_stop": 20.0, "points": 15,
                    "formulations": ["TE-EFIE", "TM-CCFIE"], "norms": ["L2", "cond"]}
    SweepConfig(**vals).validate()


@pytest.mark.parametrize("text", ["bogus = 1", "points 3", "points = many"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        cli.parse_config_text(text)


@pytest.mark.parametrize("changes", [
    {"points": 1}, {"ka_start": -1.0}, {"ka_stop": 1.0}, {"spacing": "cubic"}, {"engine": "exact"},
    {"nlambda": 1.0}, {"workers": 0}, {"formulations": []}, {"formulations": ["TX-EFIE"]},
    {"norms": ["L3"]}, {"operators": ["Q"]},
])
def test_invalid_configs(changes):
    with pytest.raises(ConfigError):
        SweepConfig(**changes).validate()


def test_empty_formulation_list_exits_with_config_status(tmp_path, capsys):
    conf = tmp_path / "c.txt"
    conf.write_text("formulations =\n")
    assert cli.main(["--config", str(conf), "--out", str(tmp_path / "o.csv")]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_ka_grid_avoids_integers():
    ka = cli.ka_grid(30, 400, 60)
    assert len(ka) == 60
    assert np.all(np.abs(ka - np.round(ka)) >= cli.INTEGER_GAP - 1e-12)
    ints = cli.ka_grid(30, 400, 60, "integer")
    assert np.all(ints == np.round(ints)) and np.all(np.diff(ints) > 0)
    lin = cli.ka_grid(10, 20, 11, "linear", avoid_integers=False)
    np.testing.assert_allclose(lin, np.arange(10, 21))


def test_csv_round_trip():
    rows = [SweepRow(10.15, 41, "TE-EFIE", "predicted", "L2", 0.1 / 3, False),
            SweepRow(10.15, 41, "TE-EFIE", "predicted", "S_L2", float("nan"), True, 'Boom: "x", y')]
    buf = io.StringIO()
    cli.write_csv(rows, buf)
    text = buf.getvalue()
    assert text.startswith(",".join(cli.CSV_COLUMNS) + "\r\n")
    back = cli.read_csv(io.StringIO(text))
    assert back[0] == rows[0]
    assert math.isnan(back[1].value) and back[1].error == rows[1].error and back[1].masked


def test_csv_header_checked():
    with pytest.raises(ValueError):
        cli.read_csv(io.StringIO("a,b\n1,2\n"))


def _small(tmp_path, **kw):
    base = dict(ka_start=5.0, ka_stop=12.0, points=6, formulations=["TM-EFIE", "TE-CCFIE"],
                norms=["L2", "cond"], operators=["S"], out=str(tmp_path / "s.csv"))
    base.update(kw)
    return SweepConfig(**base).validate()


def test_sweep_is_byte_reproducible_across_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.write_csv(cli.run_sweep(_small(tmp_path, workers=1)), a)
    cli.write_csv(cli.run_sweep(_small(tmp_path, workers=3)), b)
    assert a.read_bytes() == b.read_bytes()


def test_sweep_rows(tmp_path):
    rows = cli.run_sweep(_small(tmp_path))
    forms = {(r.formulation, r.measure) for r in rows}
    assert ("TM-EFIE", "S_L2") in forms and ("TE-CCFIE", "cond") in forms
    assert any(r.measure in cli.SPECTRAL_MEASURES for r in rows)
    assert all(r.ok for r in rows)
    assert rows == sorted(rows, key=SweepRow.sort_key)
    assert not any(r.masked for r in rows if r.formulation == "TE-CCFIE")


def test_point_failures_go_to_error_column(tmp_path):
    # too few quadrature points trips the refinement check; the sweep carries on
    cfg = _small(tmp_path, ka_start=10.3, ka_stop=10.3, points=2, engine="both", quadrature=3,
                 formulations=["TE-EFIE"], operators=[])
    rows = cli.run_sweep(cfg)
    bad = [r for r in rows if not r.ok]
    assert bad and all(r.engine == "numerical" for r in bad)
    assert all("QuadratureConvergenceError" in r.error and math.isnan(r.value) for r in bad)
    assert all(r.ok for r in rows if r.engine == "predicted")


def test_engines_agree_on_small_problem(tmp_path):
    cfg = _small(tmp_path, ka_start=10.3, ka_stop=10.3, points=2, engine="both", harmonics=4,
                 formulations=["TM-CCFIE"], norms=["L2"], operators=[])
    vals = {r.engine: r.value for r in cli.run_sweep(cfg) if r.measure == "L2"}
    assert abs(vals["predicted"] - vals["numerical"]) / vals["numerical"] < 0.1


def test_summary_statuses():
    ka = np.exp(np.linspace(np.log(30), np.log(400), 20))
    rows = [SweepRow(k, 1, "TE-EFIE", "predicted", "L2", k ** (1 / 3), False) for k in ka]
    rows += [SweepRow(k, 1, "TE-CCFIE", "predicted", "L2", 0.01 * k ** 0.01, False) for k in ka]
    rows += [SweepRow(k, 1, "TM-EFIE", "predicted", "L2", k, False) for k in ka]
    rows += [SweepRow(k, 1, "TM-EFIE", "predicted", "P", 1.0, False) for k in ka]
    summary = {(s.formulation, s.measure): s for s in cli.summarize(rows)}
    assert summary[("TE-EFIE", "L2")].status == "pass"
    assert summary[("TM-EFIE", "L2")].status == "fail"
    assert summary[("TM-EFIE", "P")].status == "info"
    text = cli.format_summary(cli.summarize(rows))
    assert "TE-EFIE" in text and "fail" in text


def test_check_mode_exit_status(tmp_path, capsys):
    # the all-mode EFIE condition number grows faster than (ka)^(1/3)
    argv = ["--ka-start", "30", "--ka-stop", "120", "--points", "24", "--formulation", "TM-EFIE",
            "--norm", "cond", "--out", str(tmp_path / "c.csv")]
    assert cli.main(argv) == cli.EXIT_OK
    assert cli.main(argv + ["--check"]) == cli.EXIT_CHECK_FAILED
    out = capsys.readouterr().out
    assert "TM-EFIE" in out


def test_emit_plots(tmp_path, caplog):
    assert cli.emit_plots([], tmp_path / "none") == []
    assert "empty dataset" in caplog.text
    rows = cli.run_sweep(_small(tmp_path))
    paths = cli.emit_plots(rows, tmp_path / "plots", "s.csv")
    assert paths
    for p in paths:
        src = p.read_text()
        compile(src, str(p), "exec")
        assert "(ka)^(1/3)" in src and "(ka)^(-1)" in src


def test_main_writes_csv_and_plots(tmp_path):
    out = tmp_path / "m.csv"
    code = cli.main(["--ka-start", "5", "--ka-stop", "8", "--points", "3", "--formulation", "TE-MFIE",
                     "--out", str(out), "--plots", str(tmp_path / "p")])
    assert code == cli.EXIT_OK
    assert len(cli.read_csv(out)) == 3 * 4
    assert list((tmp_path / "p").glob("*.py"))
