"""Command-line interface: outputs, determinism, and exit codes."""

from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from conftest import cie_csv_text
from vorafilter import DEFAULT_GRID, format_spectral_csv, make_basis, vora_value
from vorafilter.cli import main


@pytest.fixture
def cie_path(tmp_path):
    path = tmp_path / "cie.csv"
    path.write_text(cie_csv_text(), encoding="utf-8")
    return path


@pytest.fixture
def colorimetric_path(tmp_path, observer):
    t = np.array([[0.3, 0.1, 0.0], [0.2, 0.9, 0.05], [0.01, 0.2, 1.1]])
    text = format_spectral_csv(DEFAULT_GRID.wavelengths,
                               observer.responses @ t, ("r", "g", "b"))
    path = tmp_path / "colorimetric.csv"
    path.write_text(text, encoding="utf-8")
    return path


class TestEvaluate:
    def test_camera_equals_observer_prints_one(self, capsys, cie_path):
        code = main(["evaluate", "--camera", str(cie_path),
                     "--observer", str(cie_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "vora_value: 1.000000000000" in out

    def test_printed_value_matches_library(self, capsys, camera, observer):
        code = main(["evaluate", "--json"])
        out = capsys.readouterr().out
        assert code == 0
        expected = vora_value(camera, observer).raw
        line = next(l for l in out.splitlines() if l.startswith("vora_value:"))
        assert line.split(": ")[1] == f"{expected:.12f}"
        payload = json.loads(out.splitlines()[-1])
        assert payload["schema_version"] == "1"
        assert payload["vora_value"] == expected

    def test_missing_file_exits_2_and_names_path(self, capsys):
        code = main(["evaluate", "--camera", "/nonexistent/cam.csv"])
        err = capsys.readouterr().err
        assert code == 2
        assert "/nonexistent/cam.csv" in err

    def test_malformed_csv_reports_line(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("wavelength,r,g,b\n400,1,2\n", encoding="utf-8")
        code = main(["evaluate", "--camera", str(bad)])
        err = capsys.readouterr().err
        assert code == 2
        assert "bad.csv" in err and "line 2" in err

    def test_grid_override(self, capsys):
        code = main(["evaluate", "--grid", "420:20:12"])
        out = capsys.readouterr().out
        assert code == 0
        assert "grid: 420:20:12 (420-640 nm)" in out

    def test_filter_changes_value(self, capsys, tmp_path):
        lam = DEFAULT_GRID.wavelengths
        trans = 0.2 + 0.8 * np.exp(-0.5 * ((lam - 460.0) / 40.0) ** 2)
        fpath = tmp_path / "filter.csv"
        fpath.write_text(format_spectral_csv(lam, trans, ("transmittance",)),
                         encoding="utf-8")
        code = main(["evaluate", "--filter", str(fpath), "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out.splitlines()[-1])
        assert "filtered_vora_value" in payload
        assert payload["filtered_vora_value"] != payload["vora_value"]


class TestOptimize:
    def test_colorimetric_camera_trace(self, capsys, tmp_path, colorimetric_path,
                                       cie_path):
        trace = tmp_path / "trace.csv"
        code = main(["optimize", "--camera", str(colorimetric_path),
                     "--observer", str(cie_path), "--out-trace", str(trace)])
        out = capsys.readouterr().out
        assert code == 0
        assert "final_vora: 1.000000000000" in out
        rows = trace.read_text().strip().splitlines()
        assert rows[0] == "iter,vora,mu,step,gradnorm,backtracks"
        assert len(rows) - 1 <= 2

    def test_deterministic_outputs(self, capsys, tmp_path):
        argsets = []
        for tag in ("a", "b"):
            f = tmp_path / f"filter_{tag}.csv"
            t = tmp_path / f"trace_{tag}.csv"
            argsets.append((f, t, [
                "optimize", "--method", "newton", "--alpha", "1e-4",
                "--max-iters", "40", "--init", "random", "--seed", "7",
                "--out-filter", str(f), "--out-trace", str(t),
            ]))
        for _, _, argv in argsets:
            assert main(argv) == 0
        capsys.readouterr()
        assert argsets[0][0].read_bytes() == argsets[1][0].read_bytes()
        assert argsets[0][1].read_bytes() == argsets[1][1].read_bytes()

    def test_newton_trace_is_monotone(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code = main(["optimize", "--method", "newton", "--alpha", "1e-4",
                     "--max-iters", "60", "--out-trace", str(trace)])
        capsys.readouterr()
        assert code == 0
        rows = trace.read_text().strip().splitlines()[1:]
        voras = [float(r.split(",")[1]) for r in rows]
        assert all(b >= a for a, b in zip(voras, voras[1:]))

    def test_basis_coefficients_reconstruct_filter(self, capsys, tmp_path):
        out_filter = tmp_path / "filter.csv"
        code = main(["optimize", "--basis", "cosine:8", "--max-iters", "200",
                     "--emit-coeffs", "--json", "--out-filter", str(out_filter)])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out.splitlines()[-1])
        coeffs = np.array(payload["coefficients"])
        assert coeffs.shape == (8,)
        basis = make_basis("cosine", 8, DEFAULT_GRID)
        rebuilt = basis.basis @ coeffs
        written = np.array([float(line.split(",")[1]) for line in
                            out_filter.read_text().strip().splitlines()[1:]])
        assert np.max(np.abs(rebuilt - written)) < 1e-12

    def test_svg_output(self, capsys, tmp_path):
        svg = tmp_path / "plot.svg"
        code = main(["optimize", "--max-iters", "20", "--out-svg", str(svg)])
        capsys.readouterr()
        assert code == 0
        content = svg.read_text()
        assert content.startswith("<svg")
        assert content.count("<polyline") == 2

    def test_stalled_exits_3(self, capsys, tmp_path):
        code = main(["optimize", "--basis", "cosine:2", "--tau-min", "0.5",
                     "--tol-grad", "0", "--tol-obj", "0",
                     "--max-iters", "3000"])
        out = capsys.readouterr().out
        assert code == 3
        assert "termination: stalled" in out

    def test_output_collision_exits_2(self, capsys, tmp_path):
        path = tmp_path / "same.csv"
        code = main(["optimize", "--out-filter", str(path),
                     "--out-trace", str(path)])
        err = capsys.readouterr().err
        assert code == 2
        assert "same.csv" in err

    def test_initial_filter_roundtrip(self, capsys, tmp_path):
        lam = DEFAULT_GRID.wavelengths
        start = np.full(31, 0.75)
        fpath = tmp_path / "start.csv"
        fpath.write_text(format_spectral_csv(lam, start, ("transmittance",)),
                         encoding="utf-8")
        code = main(["optimize", "--filter", str(fpath), "--max-iters", "5",
                     "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out.splitlines()[-1])
        assert payload["iterations"] <= 5


class TestCheck:
    def test_fixtures_pass(self, capsys):
        code = main(["check", "--trials", "5", "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out.splitlines()[-1])
        assert payload["pass"] is True
        assert len(payload["checks"]) == 7

    def test_zero_trials_is_vacuous_pass(self, capsys):
        code = main(["check", "--trials", "0"])
        out = capsys.readouterr().out
        assert code == 0
        assert "identity" in out.splitlines()[0]

    def test_sabotage_negative_control(self, capsys):
        code = main(["check", "--trials", "3", "--sabotage"])
        out = capsys.readouterr().out
        assert code == 4
        assert "FAIL" in out


class TestDataEnvVar:
    def test_fixture_directory_override(self, capsys, tmp_path, monkeypatch):
        import importlib.resources
        data = importlib.resources.files("vorafilter").joinpath("data")
        for name in ("cie1931_2deg_5nm.csv", "gaussian_camera_10nm.csv"):
            shutil.copy(str(data.joinpath(name)), tmp_path / name)
        monkeypatch.setenv("VORA_FILTER_DATA", str(tmp_path))
        code = main(["evaluate"])
        out = capsys.readouterr().out
        assert code == 0
        assert "vora_value:" in out

    def test_broken_override_surfaces_as_input_error(self, capsys, tmp_path,
                                                     monkeypatch):
        monkeypatch.setenv("VORA_FILTER_DATA", str(tmp_path / "nope"))
        code = main(["evaluate"])
        assert code == 2
