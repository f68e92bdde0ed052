"""Config parsing, RunConfig validation, and VTK/CSV round trips."""

import numpy as np
import pytest

from shellreduce.config import RunConfig, parse_config
from shellreduce.errors import ConfigError
from shellreduce.vtkio import read_csv, read_vtk, write_csv, write_vtk

BASE = """
# minimal plate run
chart.kind = plate
chart.length1 = 1.0
chart.length2 = 2.0
grid.n1 = 9
grid.n2 = 11
material.mu = 1.0
material.lambda = 1.5
material.h = 0.05   # thickness
"""


def _cfg(extra="", drop=()):
    lines = [ln for ln in BASE.splitlines()
             if not any(ln.strip().startswith(key) for key in drop)]
    return "\n".join(lines) + "\n" + extra


def test_parse_config_strips_comments_and_blank_lines():
    raw = parse_config(BASE)
    assert raw["chart.kind"] == "plate"
    assert raw["material.h"] == "0.05"  # inline comment removed
    assert raw["grid.n2"] == "11"
    assert len(raw) == 8


def test_parse_config_keeps_extra_equals_in_value():
    # only the first '=' splits; the rest belongs to the value
    raw = parse_config("solver.grad_mode = ad\nchart.kind = a=b")
    assert raw["chart.kind"] == "a=b"


@pytest.mark.parametrize("text,fragment", [
    ("chart.kind plate", "expected key = value"),
    ("= 3", "empty key"),
    ("model = 1\nmodel = 2", "duplicate key"),
    ("materiel.mu = 1", "unknown config key"),
    ("solver.maxiter = 5", "unknown config key"),
])
def test_parse_config_rejections(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_runconfig_defaults():
    cfg = RunConfig.from_text(BASE)
    assert cfg.chart.name == "plate"
    assert (cfg.grid.n1, cfg.grid.n2) == (9, 11)
    assert cfg.model == 1
    assert cfg.constants == "oracle"
    assert cfg.order == 4
    assert cfg.clamped_edges == ()
    assert cfg.load_spec is None
    assert cfg.safety == 1.0
    s = cfg.solver
    assert (s.max_iter, s.memory) == (200, 10)
    assert s.gtol_rel == 1e-6 and s.gtol_abs == 1e-11
    assert s.penalty_beta == 0.0
    assert s.grad_mode == "ad"
    assert s.precondition is True
    # material went through floats
    assert cfg.material.lam == 1.5 and cfg.material.h == 0.05


@pytest.mark.parametrize("key,value", [
    ("grid.n1", "10"),   # even
    ("grid.n2", "7"),    # too small
])
def test_grid_counts_must_fit_simpson(key, value):
    raw = parse_config(BASE)
    raw[key] = value
    with pytest.raises(ConfigError, match="composite Simpson"):
        RunConfig.from_mapping(raw)


def test_model_and_constants_validation():
    with pytest.raises(ConfigError, match="model must be one of"):
        RunConfig.from_text(_cfg("model = 4"))
    with pytest.raises(ConfigError, match="constants must be one of"):
        RunConfig.from_text(_cfg("constants = exact"))
    cfg = RunConfig.from_text(_cfg("model = 2\nconstants = paper"))
    assert cfg.model == 2 and cfg.solver.model == 2
    assert cfg.constants == "paper" and cfg.solver.constants == "paper"


def test_chart_kind_required_and_dispatch():
    with pytest.raises(ConfigError, match="chart.kind"):
        RunConfig.from_text(_cfg(drop=("chart.kind",)))
    text = """
chart.kind = sphere-cap
chart.radius = 2.0
chart.extent = 0.5
grid.n1 = 9
grid.n2 = 9
material.mu = 1.0
material.lambda = 1.0
material.h = 0.01
"""
    cfg = RunConfig.from_text(text)
    assert cfg.chart.name == "sphere-cap"
    # a chart parameter the kind does not accept is an error, not a warning
    with pytest.raises(ConfigError):
        RunConfig.from_text(_cfg("chart.radius = 1.0"))


def test_chart_poly_and_bump_syntax():
    text = """
chart.kind = graph
chart.length1 = 1.0
chart.length2 = 1.0
chart.poly = 2,0:0.25; 1,1:-0.125
chart.bump = 0.05, 1, 2
grid.n1 = 9
grid.n2 = 9
material.mu = 1.0
material.lambda = 1.0
material.h = 0.01
"""
    cfg = RunConfig.from_text(text)
    pos = cfg.chart.position(np.array([[0.5]]), np.array([[0.5]]))
    want = 0.25 * 0.5 ** 2 - 0.125 * 0.25
    want += 0.05 * np.sin(np.pi * 0.5) * np.sin(2 * np.pi * 0.5)
    assert abs(pos[0, 0, 2] - want) < 1e-14

    bad = text.replace("2,0:0.25; 1,1:-0.125", "2:0.25")
    with pytest.raises(ConfigError, match="p,q:coef"):
        RunConfig.from_text(bad)


def test_loads_require_clamped_boundary():
    # with nothing clamped the traction boundary covers all four edges and
    # the load spec itself objects
    with pytest.raises(ConfigError, match="clamped boundary part"):
        RunConfig.from_text(_cfg("loads.face_plus = 0, 0, 0.001"))
    cfg = RunConfig.from_text(_cfg(
        "boundary.clamped = left\nloads.face_plus = 0, 0, 0.001"))
    spec = cfg.load_spec
    assert spec is not None
    assert np.array_equal(spec.face_plus, [0.0, 0.0, 0.001])
    # traction part of the boundary = everything not clamped, in edge order
    assert spec.gamma_t == ("right", "bottom", "top")
    assert spec.boundary_measure == "surface"


def test_loads_body_and_edge_parsing():
    cfg = RunConfig.from_text(_cfg(
        "boundary.clamped = left,right\n"
        "loads.body.0 = 0, 0, -0.002\n"
        "loads.body.1 = 0.1, 0, 0\n"
        "loads.edge.top.0 = 0, 0.005, 0\n"
        "loads.face_minus = 0, 0, -0.001\n"
        "loads.boundary_measure = parameter"))
    spec = cfg.load_spec
    assert set(spec.body) == {0, 1}
    assert np.array_equal(spec.body[0], [0.0, 0.0, -0.002])
    assert np.array_equal(spec.body[1], [0.1, 0.0, 0.0])
    assert set(spec.lateral) == {"top"}
    assert np.array_equal(spec.lateral["top"][0], [0.0, 0.005, 0.0])
    assert np.array_equal(spec.face_minus, [0.0, 0.0, -0.001])
    assert spec.boundary_measure == "parameter"
    assert spec.gamma_t == ("bottom", "top")


@pytest.mark.parametrize("extra,fragment", [
    ("boundary.clamped = left\nloads.body.0 = 1, 2", "three comma-separated"),
    ("boundary.clamped = left\nloads.body.x = 1, 2, 3", "bad x3 power"),
    ("boundary.clamped = left\nloads.edge.top = 1, 2, 3",
     r"loads\.edge\.<edge>\.<power>"),
    ("boundary.clamped = north", "unknown edge"),
    ("boundary.clamped = left,left", "repeated edge"),
])
def test_loads_and_edge_rejections(extra, fragment):
    with pytest.raises(ConfigError, match=fragment):
        RunConfig.from_text(_cfg(extra))


def test_solver_overrides_and_bool_parsing():
    cfg = RunConfig.from_text(_cfg(
        "solver.max_iter = 500\n"
        "solver.precondition = off\n"
        "solver.penalty_beta = 2.5\n"
        "solver.grad_mode = fd"))
    assert cfg.solver.max_iter == 500
    assert cfg.solver.precondition is False
    assert cfg.solver.penalty_beta == 2.5
    assert cfg.solver.grad_mode == "fd"
    for text in ("yes", "1", "ON", "True"):
        assert RunConfig.from_text(
            _cfg("solver.precondition = %s" % text)).solver.precondition
    with pytest.raises(ConfigError, match="solver.precondition"):
        RunConfig.from_text(_cfg("solver.precondition = maybe"))
    with pytest.raises(ConfigError, match="solver.max_iter"):
        RunConfig.from_text(_cfg("solver.max_iter = many"))


def test_safety_must_be_positive():
    for bad in ("0", "-1"):
        with pytest.raises(ConfigError, match="safety must be positive"):
            RunConfig.from_text(_cfg("safety = %s" % bad))
    assert RunConfig.from_text(_cfg("safety = 0.5")).safety == 0.5


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required config key"):
        RunConfig.from_text(_cfg(drop=("material.h",)))


def test_float_list():
    cfg = RunConfig.from_text(_cfg("compare3d.h_values = 0.1, 0.05, 0.025"))
    assert cfg.float_list("compare3d.h_values") == [0.1, 0.05, 0.025]
    assert cfg.float_list("compare3d.amplitude", default=(0.05,)) == [0.05]
    with pytest.raises(ConfigError, match="missing required config key"):
        cfg.float_list("compare3d.amplitude")
    bad = RunConfig.from_text(_cfg("compare3d.h_values = 0.1, small"))
    with pytest.raises(ConfigError, match="bad number list"):
        bad.float_list("compare3d.h_values")


# ---------------------------------------------------------------------------
# VTK structured-grid files


def _awkward_positions():
    rng = np.random.default_rng(7)
    pos = rng.standard_normal((5, 7, 3))
    pos[0, 0] = (-0.0, 1e308, -1e-308)
    pos[1, 2] = (np.pi, 5e-324, -5e-324)   # subnormals survive %.17g
    pos[4, 6] = (0.1 + 0.2, -0.3, 1.0 / 3.0)
    return pos


def test_vtk_round_trip_is_bit_exact(tmp_path):
    pos = _awkward_positions()
    fields = {"energy": np.linspace(-1, 1, 35).reshape(5, 7) ** 3,
              "b_min": np.full((5, 7), 0.25)}
    path = tmp_path / "mesh.vtk"
    write_vtk(path, pos, fields=fields)
    back, fback = read_vtk(path)
    assert back.shape == (5, 7, 3)
    assert np.array_equal(back, pos)
    assert np.signbit(back[0, 0, 0])  # -0.0 keeps its sign bit
    assert set(fback) == {"energy", "b_min"}
    for name in fields:
        assert np.array_equal(fback[name], fields[name])


def test_vtk_header_layout(tmp_path):
    path = tmp_path / "mesh.vtk"
    write_vtk(path, np.zeros((5, 7, 3)), comment="first line\nsecond")
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[1] == "first line"      # multi-line comments are truncated
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_GRID"
    assert lines[4] == "DIMENSIONS 7 5 1"   # x runs over the second index
    assert lines[5] == "POINTS 35 double"
    assert len(lines) == 6 + 35


def test_vtk_write_rejects_bad_shapes(tmp_path):
    path = tmp_path / "mesh.vtk"
    with pytest.raises(ConfigError, match="shape"):
        write_vtk(path, np.zeros((5, 7, 2)))
    with pytest.raises(ConfigError, match="shape"):
        write_vtk(path, np.zeros((5, 3)))
    with pytest.raises(ConfigError, match="field 'f'"):
        write_vtk(path, np.zeros((5, 7, 3)), fields={"f": np.zeros((7, 5))})


def test_vtk_read_rejects_malformed_files(tmp_path):
    junk = tmp_path / "junk.vtk"
    junk.write_text("this is not a mesh\n")
    with pytest.raises(ConfigError, match="STRUCTURED_GRID"):
        read_vtk(junk)

    path = tmp_path / "mesh.vtk"
    write_vtk(path, np.ones((5, 7, 3)))
    text = path.read_text()

    twosheet = tmp_path / "two.vtk"
    twosheet.write_text(text.replace("DIMENSIONS 7 5 1", "DIMENSIONS 7 5 2"))
    with pytest.raises(ConfigError, match="single sheet"):
        read_vtk(twosheet)

    short = tmp_path / "short.vtk"
    short.write_text("\n".join(text.splitlines()[:20]) + "\n")
    with pytest.raises(ConfigError, match="truncated coordinate"):
        read_vtk(short)

    miscount = tmp_path / "count.vtk"
    miscount.write_text(text.replace("POINTS 35 double", "POINTS 34 double"))
    with pytest.raises(ConfigError, match="does not match"):
        read_vtk(miscount)


# ---------------------------------------------------------------------------
# CSV tables


def test_csv_round_trip(tmp_path):
    path = tmp_path / "table.csv"
    header = ["h", "model", "note"]
    rows = [
        [0.1, 1, "plain"],
        [0.1 + 0.2, 3, "with, comma"],
        [np.float64(1.0) / 3.0, 2, 'say "hi"'],
        [-0.0, 1, ""],
    ]
    write_csv(path, header, rows)
    got_header, got_rows = read_csv(path)
    assert got_header == header
    assert len(got_rows) == 4
    for want, got in zip(rows, got_rows):
        # floats round-trip bit exactly through the %.17g cells
        assert np.array_equal(np.float64(got[0]), np.float64(want[0]))
        assert int(got[1]) == want[1]
        assert got[2] == want[2]
    assert np.signbit(np.float64(got_rows[3][0]))


def test_csv_read_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ConfigError, match="empty CSV"):
        read_csv(path)
