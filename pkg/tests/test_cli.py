import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hibox import cache as cache_mod
from hibox.cli import dof_report, main, run_benchmark
from hibox.config import RunConfig
from hibox.hierarchy import build_mesh, hbox_basis
from hibox.lattice import cells_in_box, refine_cells
from hibox.presets import preset_by_name
from hibox.strip import build_strip
from hibox.svg import render_mesh_svg, render_strip_svg


def _polygons(svg_text):
    root = ET.fromstring(svg_text)
    return root.findall(".//{http://www.w3.org/2000/svg}polygon")


# ---------------------------------------------------------------------------
# svg


def test_empty_svg_scaffold():
    text = render_mesh_svg(None)
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert len(_polygons(text)) == 0


def test_svg_polygon_count_matches_cells():
    base = set(cells_in_box(0, 0, 4, 4))
    inner = refine_cells(set(cells_in_box(1, 1, 3, 3)))
    mesh = build_mesh(base, [inner], h0=1)
    ncells = sum(len(list(mesh.active_cells(l))) for l in range(2))
    text = render_mesh_svg(mesh)
    assert len(_polygons(text)) == ncells
    # with anchors the polygon count must not change
    text2 = render_mesh_svg(mesh, hbox_basis(mesh))
    assert len(_polygons(text2)) == ncells
    assert len(text2) > len(text)


def test_svg_strip_styles_partition():
    mesh = build_mesh(set(cells_in_box(0, 0, 4, 4)), [], h0=1)
    text = render_strip_svg(build_strip(mesh, "fixed"))
    polys = _polygons(text)
    styled = [p for p in polys if p.get("class") == "strip"]
    unstyled = [p for p in polys if p.get("class") is None]
    assert len(styled) + len(unstyled) == len(polys)
    assert styled and unstyled
    for p in unstyled:
        assert p.get("fill") == "none"


def test_svg_deterministic():
    mesh = build_mesh(set(cells_in_box(0, 0, 3, 3)), [], h0=1)
    assert render_mesh_svg(mesh, hbox_basis(mesh)) == render_mesh_svg(
        mesh, hbox_basis(mesh)
    )


# ---------------------------------------------------------------------------
# dof report and run


def test_dof_report_quarter_circle_uniform():
    cfg = RunConfig(preset="quarter_circle", levels=3, strip_kind="hbox")
    lines = dof_report(cfg)
    assert lines[0] == "N,h,dof,strip_dof"
    got = [tuple(ln.split(",")) for ln in lines[1:]]
    assert [int(r[2]) for r in got] == [33, 75, 207]


def test_dof_report_hierarchical_below_uniform():
    uni = dof_report(RunConfig(preset="zshape", levels=3))
    hier = dof_report(RunConfig(preset="zshape", levels=3, mode="predefined"))
    u = int(uni[-1].split(",")[2])
    h = int(hier[-1].split(",")[2])
    assert h < u


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        [
            "run",
            "--preset",
            "quarter_circle",
            "--levels",
            "2",
            "--output",
            str(out),
            "--svg",
        ]
    )
    assert code == 0
    for name in (
        "table.csv",
        "config.txt",
        "mesh_level0.txt",
        "mesh_level1.txt",
        "strip.txt",
        "solution_grid.csv",
        "mesh.svg",
        "strip.svg",
    ):
        assert (out / name).is_file(), name
    table = (out / "table.csv").read_text().splitlines()
    assert table[0] == "N,h,dof,strip_dof,max_error"
    assert len(table) == 3
    row1 = table[1].split(",")
    assert int(row1[2]) == 33
    # stdout carries the same table
    assert table[0] in capsys.readouterr().out


def test_run_determinism(tmp_path):
    outs = []
    for k in (0, 1):
        out = tmp_path / f"out{k}"
        assert (
            main(
                [
                    "run",
                    "--preset",
                    "quarter_circle",
                    "--levels",
                    "2",
                    "--mode",
                    "predefined",
                    "--output",
                    str(out),
                ]
            )
            == 0
        )
        outs.append(out)
    for name in ("table.csv", "solution_grid.csv", "strip.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_run_config_file_round_trip(tmp_path):
    out1 = tmp_path / "a"
    assert (
        main(
            ["run", "--preset", "quarter_circle", "--levels", "2",
             "--output", str(out1)]
        )
        == 0
    )
    # re-run from the serialized effective config, only changing the output
    out2 = tmp_path / "b"
    code = main(
        ["run", "--config", str(out1 / "config.txt"), "--output", str(out2)]
    )
    assert code == 0
    assert (out1 / "table.csv").read_bytes() == (out2 / "table.csv").read_bytes()


def test_unknown_preset_exit_2(tmp_path):
    assert main(["run", "--preset", "nope", "--output", str(tmp_path)]) == 2
    assert main(["dof-report", "--preset", "nope"]) == 2


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("run.wibble = 1\n")
    assert main(["dof-report", "--config", str(cfg)]) == 2


def test_render_mesh_and_strip(tmp_path):
    out = tmp_path / "m.svg"
    code = main(
        ["render", "--preset", "quarter_circle", "--levels", "2",
         "--mode", "predefined", "--out", str(out), "--anchors"]
    )
    assert code == 0
    mesh = preset_by_name("quarter_circle").hierarchical_mesh(2)
    ncells = sum(len(list(mesh.active_cells(l))) for l in range(2))
    assert len(_polygons(out.read_text())) == ncells
    out2 = tmp_path / "s.svg"
    code = main(
        ["render", "--preset", "quarter_circle", "--levels", "2",
         "--what", "strip", "--out", str(out2)]
    )
    assert code == 0
    assert 'class="strip"' in out2.read_text()


def test_render_unwritable_exit_3():
    code = main(
        ["render", "--preset", "quarter_circle", "--levels", "1",
         "--out", "/dev/null/cannot/x.svg"]
    )
    assert code == 3


# ---------------------------------------------------------------------------
# cache


def test_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv(cache_mod.ENV_VAR, str(tmp_path))
    p = preset_by_name("quarter_circle")
    key = cache_mod.reference_key(p, 2, 1)
    assert cache_mod.lookup(key) is None
    v1 = cache_mod.reference_values(p, 2, sample_levels=1)
    assert cache_mod.lookup(key) is not None
    # second call is served from disk
    import hibox.cache as c

    def boom(*a, **k):
        raise AssertionError("cache miss")

    monkeypatch.setattr(c, "solve_problem", boom)
    v2 = cache_mod.reference_values(p, 2, sample_levels=1)
    assert np.array_equal(v1, v2)


def test_cache_key_sensitivity():
    p = preset_by_name("quarter_circle")
    z = preset_by_name("zshape")
    keys = {
        cache_mod.reference_key(p, 2, 1),
        cache_mod.reference_key(p, 3, 1),
        cache_mod.reference_key(p, 2, 2),
        cache_mod.reference_key(z, 2, 1),
    }
    assert len(keys) == 4


def test_cache_cli(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cache_mod.ENV_VAR, str(tmp_path))
    assert (
        main(
            ["cache", "build", "--preset", "quarter_circle", "--levels", "2"]
        )
        == 0
    )
    capsys.readouterr()
    assert main(["cache", "list"]) == 0
    assert "ref-" in capsys.readouterr().out
    assert main(["cache", "clear"]) == 0
    assert "removed" in capsys.readouterr().out
    assert not list(tmp_path.glob("ref-*.npz"))


# ---------------------------------------------------------------------------
# benchmark plumbing


def test_run_benchmark_minmax_table():
    cfg = RunConfig(
        preset="unit_square_advection", levels=1, mode="adaptive", output="x"
    )
    res = run_benchmark(cfg)
    lines = res.table()
    assert lines[0] == "N,h,dof,strip_dof,max_value,min_value"
    assert len(lines) == 2


def test_adaptive_mode_rejected_by_dof_report():
    cfg = RunConfig(preset="quarter_circle", levels=2, mode="adaptive")
    with pytest.raises(Exception):
        dof_report(cfg)
