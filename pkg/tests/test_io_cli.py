import csv
import json

import numpy as np
import pytest

from lccoda import __version__
from lccoda.cli import main
from lccoda.errors import ConfigError, DuplicateCell, MissingCell, NegativeDeaths, ParseError
from lccoda.io import COLUMNS, ingest, read_csv, write_panel

from synthetic import alpha_generated_panel, random_panel

TOY = """year,age_band,cause,sex,deaths
2001,0-64,heart,m,10
2001,0-64,stroke,m,0
2001,65+,heart,m,30
2001,65+,stroke,m,12
2002,0-64,heart,m,9
2002,0-64,stroke,m,1
2002,65+,heart,m,28
2002,65+,stroke,m,15
"""


def write(tmp_path, text, name="deaths.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_toy(tmp_path):
    panel, report = ingest(write(tmp_path, TOY))
    assert panel.years == (2001, 2002)
    assert panel.age_bands == ("0-64", "65+")
    assert panel.causes == ("heart", "stroke")
    assert panel.sex == "m"
    np.testing.assert_array_equal(panel.counts[0], [[10, 0], [30, 12]])
    assert report.rows == 8
    assert report.zero_cells == ((2001, "0-64", "stroke"),)


def test_ingest_marginal_checksum(tmp_path):
    path = write(tmp_path, TOY)
    panel, _ = ingest(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    by_year = {}
    for r in rows:
        by_year[int(r["year"])] = by_year.get(int(r["year"]), 0.0) + float(r["deaths"])
    assert panel.totals.tolist() == [by_year[2001], by_year[2002]]


def test_ingest_column_order_and_comments(tmp_path):
    text = "# a comment\nsex,deaths,year,cause,age_band\n\nm,5,2001,x,a\nm,7,2001,y,a\n"
    panel, _ = ingest(write(tmp_path, text))
    np.testing.assert_array_equal(panel.counts, [[[5, 7]]])


def test_ingest_ordering_sidecar(tmp_path):
    order = tmp_path / "order.json"
    order.write_text(json.dumps({"age_band": ["65+", "0-64"], "cause": ["stroke", "heart"]}))
    from lccoda.io import load_ordering

    panel, _ = ingest(write(tmp_path, TOY), ordering=load_ordering(order))
    assert panel.age_bands == ("65+", "0-64")
    np.testing.assert_array_equal(panel.counts[0], [[12, 30], [0, 10]])


def test_ingest_duplicate(tmp_path):
    with pytest.raises(DuplicateCell, match="line 9"):
        ingest(write(tmp_path, TOY + "2002,65+,stroke,m,3\n"))


def test_ingest_missing(tmp_path):
    text = "\n".join(TOY.strip().splitlines()[:-1]) + "\n"
    with pytest.raises(MissingCell):
        ingest(write(tmp_path, text))


def test_ingest_missing_year(tmp_path):
    text = TOY + "".join(
        f"2004,{a},{c},m,1\n" for a in ("0-64", "65+") for c in ("heart", "stroke")
    )
    with pytest.raises(MissingCell, match="year=2003"):
        ingest(write(tmp_path, text))


@pytest.mark.parametrize(
    "bad, line",
    [
        ("2001,0-64,heart,m,ten", 2),
        ("twenty,0-64,heart,m,10", 2),
        ("2001,0-64,heart,m", 2),
    ],
)
def test_ingest_parse_errors(tmp_path, bad, line):
    text = TOY.replace("2001,0-64,heart,m,10", bad)
    with pytest.raises(ParseError) as info:
        ingest(write(tmp_path, text))
    assert info.value.line == line


def test_ingest_bad_header_and_empty(tmp_path):
    with pytest.raises(ParseError):
        ingest(write(tmp_path, "year,age,cause,sex,deaths\n2001,a,b,m,1\n"))
    with pytest.raises(ParseError):
        ingest(write(tmp_path, ""))


def test_ingest_negative(tmp_path):
    with pytest.raises(NegativeDeaths):
        ingest(write(tmp_path, TOY.replace("m,12", "m,-12")))


def test_ingest_sex_filter(tmp_path):
    text = TOY + TOY.replace(",m,", ",f,").split("\n", 1)[1]
    with pytest.raises(ConfigError):
        ingest(write(tmp_path, text))
    panel, _ = ingest(write(tmp_path, text), sex="f")
    assert panel.sex == "f"


def test_round_trip(tmp_path):
    panel = random_panel(np.random.default_rng(0), T=5, U=2, C=3, zeros=[(1, 1, 1)])
    path = write_panel(panel, tmp_path / "panel.csv", {"source": "test"})
    back, report = ingest(path)
    np.testing.assert_array_equal(back.counts, panel.counts)
    assert back.age_bands == panel.age_bands and back.causes == panel.causes
    assert report.n_zero == 1
    text = path.read_text()
    assert text.startswith(f"# lccoda {__version__}\n")
    assert "\r" not in text
    assert [r for r in read_csv(path)][0].keys() == set(COLUMNS)


@pytest.fixture
def panel_csv(tmp_path):
    return write_panel(alpha_generated_panel(0.5, seed=2), tmp_path / "panel.csv")


def run(args):
    return main([str(a) for a in args])


def test_cli_forecast_outputs_and_rerun(tmp_path, panel_csv):
    out = tmp_path / "f"
    args = ["forecast", "--input", panel_csv, "--transform", "alpha:0.5", "--horizon", 3, "--out-dir", out]
    assert run(args) == 0
    rows = read_csv(out / "forecast.csv")
    assert len(rows) == 3 * 6
    assert rows[0]["year"] == "2017"
    sums = {}
    for r in rows:
        sums[r["year"]] = sums.get(r["year"], 0.0) + float(r["density"])
    assert all(abs(s - 1) < 1e-12 for s in sums.values())
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["manifest"]["version"] == __version__
    assert manifest["provenance"]["config"]["transform"] == "alpha:0.5"
    first = (out / "forecast.csv").read_bytes()
    assert run(args) == 0
    assert (out / "forecast.csv").read_bytes() == first
    assert read_csv(out / "clamps.csv") == []


def test_cli_tune_singleton_grid(tmp_path, panel_csv):
    out = tmp_path / "t"
    args = ["tune", "--input", panel_csv, "--alpha-grid", "0.5", "--out-dir", out]
    assert run(args) == 0
    rows = read_csv(out / "alpha_grid.csv")
    assert [r["method"] for r in rows] == ["CLR (zeros omitted)", "ILR (zeros omitted)", "alpha = 0.5"]
    assert abs(float(rows[0]["rmse_x100"]) - float(rows[1]["rmse_x100"])) < 1e-9
    assert "rmse_fold4" in rows[0]
    chosen = json.loads((out / "chosen_alpha.json").read_text())
    assert chosen["alpha"] == 0.5 and chosen["criterion"] == "mae"
    assert chosen["manifest"]["centring"] == "window"
    assert run([*args, "--centring", "fold"]) == 0
    chosen = json.loads((out / "chosen_alpha.json").read_text())
    assert chosen["manifest"]["centring"] == "fold"


def test_cli_evaluate_clr_ilr_identical(tmp_path, panel_csv):
    out = tmp_path / "e"
    args = ["evaluate", "--input", panel_csv, "--methods", "clr-omit,ilr-omit", "--out-dir", out]
    assert run(args) == 0
    a, b = read_csv(out / "methods_table.csv")
    assert abs(float(a["rmse_x100"]) - float(b["rmse_x100"])) < 1e-9
    assert abs(float(a["mae_x100"]) - float(b["mae_x100"])) < 1e-9


def test_cli_evaluate_default_layout(tmp_path, panel_csv):
    out = tmp_path / "e"
    assert run(["evaluate", "--input", panel_csv, "--out-dir", out]) == 0
    rows = read_csv(out / "methods_table.csv")
    assert len(rows) == 10 and rows[-1]["method"] == "alpha = 1 (RDA)"


def test_cli_intervals_and_plotdata(tmp_path, panel_csv):
    out = tmp_path / "i"
    common = ["--input", panel_csv, "--transform", "clr", "--horizon", 2, "--out-dir", out]
    assert run(["intervals", *common, "--n-boot", 100, "--seed", 3]) == 0
    rows = read_csv(out / "intervals.csv")
    assert len(rows) == 12
    assert all(float(r["lower"]) <= float(r["upper"]) for r in rows)
    assert run(["plotdata", *common]) == 0
    rows = read_csv(out / "plotdata.csv")
    assert {r["series"] for r in rows} == {"observed", "fitted", "forecast"}
    assert sum(r["series"] == "forecast" for r in rows) == 2 * 3


def test_cli_exit_codes(tmp_path, panel_csv, capsys):
    out = tmp_path / "x"
    assert run(["forecast", "--input", tmp_path / "nope.csv", "--out-dir", out]) == 2
    bad = write(tmp_path, TOY + "2002,65+,stroke,m,3\n", "dup.csv")
    assert run(["forecast", "--input", bad, "--transform", "clr", "--out-dir", out]) == 2
    # alpha transform without a value
    assert run(["forecast", "--input", panel_csv, "--out-dir", out]) == 3
    assert run(["forecast", "--input", panel_csv, "--transform", "alpha:2", "--out-dir", out]) == 3
    zero = write(tmp_path, TOY, "zero.csv")
    assert run(["forecast", "--input", zero, "--transform", "clr", "--out-dir", out]) == 4
    assert "stage transform" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["bogus", "--input", "x"])
