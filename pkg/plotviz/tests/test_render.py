import csv
import json
import os

import numpy as np
import pytest

from plotviz import FigureSpec, SchemaError, SpecError, render
from plotviz.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_path(name):
    return os.path.join(DATA, name)


class TestSweepFigures:
    def test_three_policy_series(self, tmp_path):
        spec = FigureSpec(
            input_csv=data_path("sweep_tasks.csv"),
            series=("mgf", "maf", "random"),
            output_path=str(tmp_path / "tasks.svg"),
        )
        result = render(spec)
        assert os.path.exists(result.output_path)
        assert set(result.lines) == {"mgf", "maf"}
        assert set(result.bands) == {"random"}
        assert result.x_values == [1.0, 2.0, 3.0, 4.0]

    def test_band_mean_matches_csv(self, tmp_path):
        spec = FigureSpec(
            input_csv=data_path("sweep_channels.csv"),
            series=("random",),
            output_path=str(tmp_path / "channels.svg"),
        )
        result = render(spec)
        mean, _ = result.bands["random"]
        # independent recomputation straight from the CSV
        with open(data_path("sweep_channels.csv"), newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["policy"] == "random"]
        for i, x in enumerate(result.x_values):
            costs = [float(r["discounted_cost"]) for r in rows if float(r["sweep_value"]) == x]
            assert mean[i] == pytest.approx(float(np.mean(costs)), abs=1e-9)

    def test_missing_policy_is_schema_error(self, tmp_path):
        spec = FigureSpec(
            input_csv=data_path("sweep_tasks.csv"),
            series=("mgf", "edf"),
            output_path=str(tmp_path / "x.svg"),
        )
        with pytest.raises(SchemaError, match="edf"):
            render(spec)


class TestCertificateFigure:
    def test_gap_below_bound_on_log_axis(self, tmp_path):
        spec = FigureSpec(
            input_csv=data_path("certificates.csv"),
            series=("gap", "theorem1_rhs"),
            output_path=str(tmp_path / "cert.svg"),
            x_axis="r",
            log_y=True,
        )
        result = render(spec)
        assert os.path.exists(result.output_path)
        for g, rhs in zip(result.lines["gap"], result.lines["theorem1_rhs"]):
            assert g <= rhs

    def test_unknown_column_is_schema_error(self, tmp_path):
        spec = FigureSpec(
            input_csv=data_path("certificates.csv"),
            series=("nope",),
            output_path=str(tmp_path / "cert.svg"),
        )
        with pytest.raises(SchemaError):
            render(spec)


class TestDeterminism:
    @pytest.mark.parametrize("ext", ["svg", "png"])
    def test_rerender_is_byte_identical(self, tmp_path, ext):
        out1 = tmp_path / f"a.{ext}"
        out2 = tmp_path / f"b.{ext}"
        for out in (out1, out2):
            render(
                FigureSpec(
                    input_csv=data_path("sweep_sources.csv"),
                    series=("mgf", "maf", "random"),
                    output_path=str(out),
                )
            )
        assert out1.read_bytes() == out2.read_bytes()

    def test_provenance_sha_embedded_in_svg(self, tmp_path):
        out = tmp_path / "fig.svg"
        result = render(
            FigureSpec(
                input_csv=data_path("sweep_tasks.csv"),
                series=("mgf",),
                output_path=str(out),
            )
        )
        assert result.csv_sha256 in out.read_text()


class TestValidation:
    def test_empty_series_rejected_and_nothing_written(self, tmp_path):
        out = tmp_path / "fig.svg"
        spec = FigureSpec(
            input_csv=data_path("sweep_tasks.csv"), series=(), output_path=str(out)
        )
        with pytest.raises(SpecError, match="nonempty"):
            render(spec)
        assert not out.exists()

    def test_missing_csv_rejected(self, tmp_path):
        spec = FigureSpec(
            input_csv=str(tmp_path / "none.csv"), series=("mgf",), output_path=str(tmp_path / "f.svg")
        )
        with pytest.raises(SpecError, match="not found"):
            render(spec)

    def test_unknown_schema_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        spec = FigureSpec(input_csv=str(bad), series=("mgf",), output_path=str(tmp_path / "f.svg"))
        with pytest.raises(SchemaError, match="schema"):
            render(spec)


class TestCli:
    def write_spec(self, tmp_path, **overrides):
        data = {
            "input_csv": data_path("sweep_tasks.csv"),
            "series": ["mgf", "maf", "random"],
            "output_path": str(tmp_path / "fig.svg"),
        }
        data.update(overrides)
        p = tmp_path / "figspec.json"
        p.write_text(json.dumps(data))
        return p

    def test_renders_from_spec_file(self, tmp_path, capsys):
        path = self.write_spec(tmp_path)
        assert main([str(path)]) == 0
        assert (tmp_path / "fig.svg").exists()
        assert "fig.svg" in capsys.readouterr().out

    def test_bad_series_exits_one(self, tmp_path):
        path = self.write_spec(tmp_path, series=[])
        assert main([str(path)]) == 1

    def test_usage_without_args(self, capsys):
        assert main([]) == 1
