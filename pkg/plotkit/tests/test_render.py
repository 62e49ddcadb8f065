import subprocess
import sys

import pytest

from riskplots import (
    EXPECTED_COLUMNS,
    EmptyInputError,
    PlotSpec,
    SchemaError,
    build_series,
    read_tables,
    render,
)
from riskplots.cli import main

HEADER = ",".join(EXPECTED_COLUMNS)


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def small_csv(tmp_path):
    return write_csv(tmp_path / "sweep.csv", [
        HEADER,
        "a,0.1,1.5,0.5,0.5,0.5,1.4,0.2,9.0,3.0,0.01",
        "a,1.0,1.0,0.3,0.4,0.3,1.1,0.15,7.0,2.5,0.005",
        "b,0.1,2.5,1.0,1.0,0.5,,,,2.0,0.02",
        "b,1.0,2.0,0.8,0.7,0.5,,,,1.5,0.01",
    ])


class TestReadTables:
    def test_missing_column_named(self, tmp_path):
        bad = write_csv(tmp_path / "bad.csv", ["config_id,sweep_value,risk_exact", "a,1,2"])
        with pytest.raises(SchemaError, match="bias_sq"):
            read_tables([bad])

    def test_empty_file(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(EmptyInputError):
            read_tables([str(empty)])

    def test_header_only(self, tmp_path):
        header_only = write_csv(tmp_path / "h.csv", [HEADER])
        with pytest.raises(EmptyInputError, match="no data rows"):
            read_tables([header_only])

    def test_blank_cells_become_none(self, small_csv):
        table = read_tables([small_csv])
        xs, ys = table.series("b", "risk_mc")
        assert ys == [None, None]

    def test_concatenates_inputs(self, tmp_path, small_csv):
        other = write_csv(tmp_path / "more.csv", [
            HEADER,
            "c,0.1,3.0,1.0,1.0,1.0,,,,,",
        ])
        table = read_tables([small_csv, other])
        assert table.config_ids == ["a", "b", "c"]


class TestBuildSeries:
    def test_one_series_per_config_plus_mc(self, small_csv):
        table = read_tables([small_csv])
        series = build_series(table, "noise-sweep")
        labels = [s.label for s in series]
        assert labels == ["a", "a (MC)", "b"]
        mc = series[1]
        assert mc.errors == [0.2, 0.15]

    def test_bounds_overlay_omits_empty_series(self, small_csv, capsys):
        table = read_tables([small_csv])
        series = build_series(table, "bounds-overlay")
        labels = [s.label for s in series]
        assert "b upper bound" not in labels
        assert "a upper bound" in labels and "b lower bound" in labels
        assert "column upper_thm52 is empty" in capsys.readouterr().err

    def test_same_input_same_points(self, small_csv):
        table = read_tables([small_csv])
        a = build_series(table, "noise-sweep")
        b = build_series(table, "noise-sweep")
        assert [(s.label, s.xs, s.ys) for s in a] == [(s.label, s.xs, s.ys) for s in b]


class TestRender:
    def test_writes_image(self, small_csv, tmp_path):
        out = tmp_path / "fig.png"
        series = render(PlotSpec(inputs=(small_csv,), kind="noise-sweep", out=str(out), logx=True, logy=True))
        assert out.exists() and out.stat().st_size > 0
        assert len(series) == 3

    def test_single_row_figure(self, tmp_path):
        single = write_csv(tmp_path / "one.csv", [
            HEADER,
            "only,2.0,1.25,0.25,0.5,0.5,,,,,",
        ])
        out = tmp_path / "one.png"
        series = render(PlotSpec(inputs=(single,), kind="data-sweep", out=str(out)))
        assert out.exists()
        assert [s.label for s in series] == ["only"]

    def test_unknown_kind_rejected(self, small_csv, tmp_path):
        with pytest.raises(ValueError, match="kind"):
            PlotSpec(inputs=(small_csv,), kind="pie", out=str(tmp_path / "x.png"))


class TestCli:
    def test_ok(self, small_csv, tmp_path):
        out = tmp_path / "cli.png"
        assert main(["--kind", "noise-sweep", "--in", small_csv, "--out", str(out), "--logy"]) == 0
        assert out.exists()

    def test_schema_error_exit(self, tmp_path):
        bad = write_csv(tmp_path / "bad.csv", ["config_id,sweep_value", "a,1"])
        assert main(["--kind", "noise-sweep", "--in", bad, "--out", str(tmp_path / "x.png")]) == 1


@pytest.fixture(scope="module")
def produced_csvs(tmp_path_factory):
    """The real producer, driven only through its command-line interface."""
    out = tmp_path_factory.mktemp("fig3a")
    for command, filename in (("risk-sweep", "risk_sweep.csv"), ("bounds", "bounds.csv")):
        result = subprocess.run(
            [sys.executable, "-m", "metarisk", command, "--config", "fig3a", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
    return out / "risk_sweep.csv", out / "bounds.csv"


class TestAgainstProducer:
    def test_fig3a_and_bounds_render(self, produced_csvs, tmp_path):
        """Acceptance: fig3a and bounds CSVs render to images, one series per
        config id, error bars present when the MC columns are filled."""
        sweep_csv, bounds_csv = produced_csvs

        out = tmp_path / "fig3a.png"
        series = render(PlotSpec(inputs=(str(sweep_csv),), kind="noise-sweep", out=str(out), logx=True, logy=True))
        assert out.exists() and out.stat().st_size > 0
        exact = [s for s in series if s.style == "solid"]
        mc = [s for s in series if s.style == "marker"]
        assert {s.label for s in exact} == {"M2-n10-k5", "M25-n20-k5", "M10-n10-k100"}
        assert len(mc) == 3 and all(s.errors is not None for s in mc)

        out = tmp_path / "bounds.png"
        series = render(PlotSpec(inputs=(str(bounds_csv),), kind="bounds-overlay", out=str(out), logx=True, logy=True))
        assert out.exists() and out.stat().st_size > 0
        labels = {s.label for s in series}
        assert "M10-n10-k100 upper bound" in labels
        assert {f"{cid} lower bound" for cid in ("M2-n10-k5", "M25-n20-k5", "M10-n10-k100")} <= labels
