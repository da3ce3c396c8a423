import subprocess
import sys
from pathlib import Path

import pytest

from lambdaflow_figures import (
    FigureInputError,
    render_diode_overlay,
    render_duration_heatmap,
    render_flow_timeseries,
)
from lambdaflow_figures.cli import main
from lambdaflow_figures.readers import read_intervals

DATA = Path(__file__).resolve().parents[1] / "data"


def test_single_window_analogue_has_one_shaded_window(tmp_path):
    result = render_flow_timeseries(
        DATA / "single_window.csv",
        tmp_path / "single.png",
        DATA / "single_window.intervals.csv",
    )
    assert result.path.exists() and result.path.stat().st_size > 0
    assert result.n_shaded == 1


def test_triple_window_analogue_has_three_shaded_windows(tmp_path):
    result = render_flow_timeseries(
        DATA / "triple_window.csv",
        tmp_path / "triple.png",
        DATA / "triple_window.intervals.csv",
    )
    assert result.path.exists() and result.path.stat().st_size > 0
    assert result.n_shaded == 3


@pytest.mark.parametrize(
    "stem", ["single_window", "triple_window"]
)
def test_shaded_count_equals_sidecar_row_count(tmp_path, stem):
    sidecar = DATA / f"{stem}.intervals.csv"
    result = render_flow_timeseries(
        DATA / f"{stem}.csv", tmp_path / f"{stem}.png", sidecar
    )
    assert result.n_shaded == len(read_intervals(sidecar)["t_start"])


def test_duration_heatmap_renders_with_zero_cells(tmp_path):
    result = render_duration_heatmap(
        DATA / "duration_map.csv", tmp_path / "map.png"
    )
    assert result.path.exists() and result.path.stat().st_size > 0
    assert result.n_zero_cells > 0


def test_diode_time_heatmap_on_difference_axes(tmp_path):
    result = render_duration_heatmap(
        DATA / "diode_map.csv", tmp_path / "diode_map.png", diff_axes=True
    )
    assert result.path.exists() and result.path.stat().st_size > 0


def test_diode_overlay_renders(tmp_path):
    result = render_diode_overlay(
        DATA / "diode.forward.csv",
        DATA / "diode.reverse.csv",
        tmp_path / "overlay.png",
    )
    assert result.path.exists() and result.path.stat().st_size > 0


def test_rendering_is_deterministic(tmp_path):
    a = render_flow_timeseries(
        DATA / "single_window.csv",
        tmp_path / "a.png",
        DATA / "single_window.intervals.csv",
    )
    b = render_flow_timeseries(
        DATA / "single_window.csv",
        tmp_path / "b.png",
        DATA / "single_window.intervals.csv",
    )
    assert a.path.read_bytes() == b.path.read_bytes()


def test_empty_input_fails_cleanly(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "never.png"
    with pytest.raises(FigureInputError, match="empty"):
        render_flow_timeseries(empty, out)
    assert not out.exists()


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,rho11\n0,1\n")
    with pytest.raises(FigureInputError, match="missing column 'rho22'"):
        render_flow_timeseries(bad, tmp_path / "never.png")


def test_cli_renders_all_five_analogues(tmp_path):
    jobs = [
        ["--kind", "flow-timeseries", "--in", str(DATA / "single_window.csv"),
         "--intervals", str(DATA / "single_window.intervals.csv"),
         "--out", str(tmp_path / "f1.png")],
        ["--kind", "flow-timeseries", "--in", str(DATA / "triple_window.csv"),
         "--intervals", str(DATA / "triple_window.intervals.csv"),
         "--out", str(tmp_path / "f2.png")],
        ["--kind", "duration-heatmap", "--in", str(DATA / "duration_map.csv"),
         "--out", str(tmp_path / "f3.png")],
        ["--kind", "diode-overlay", "--in", str(DATA / "diode.forward.csv"),
         "--in", str(DATA / "diode.reverse.csv"),
         "--out", str(tmp_path / "f4.png")],
        ["--kind", "duration-heatmap", "--diff-axes",
         "--in", str(DATA / "diode_map.csv"),
         "--out", str(tmp_path / "f5.png")],
    ]
    for job in jobs:
        assert main(["render", *job]) == 0
    for k in range(1, 6):
        assert (tmp_path / f"f{k}.png").stat().st_size > 0


def test_cli_error_exit_codes(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["render", "--kind", "flow-timeseries", "--in", str(empty)]) == 1
    assert (
        main(["render", "--kind", "diode-overlay", "--in", str(DATA / "diode.forward.csv")])
        == 1
    )


def test_physics_core_is_never_imported(tmp_path):
    # render everything in a fresh interpreter and prove the physics
    # package stays out of sys.modules
    script = (
        "import sys\n"
        "from lambdaflow_figures.cli import main\n"
        f"rc = main(['render', '--kind', 'flow-timeseries', '--in', r'{DATA / 'single_window.csv'}',"
        f" '--intervals', r'{DATA / 'single_window.intervals.csv'}', '--out', r'{tmp_path / 'iso.png'}'])\n"
        "assert rc == 0\n"
        "assert not any(m == 'lambdaflow' or m.startswith('lambdaflow.') for m in sys.modules)\n"
    )
    proc = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
