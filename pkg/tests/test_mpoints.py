import numpy as np
import pytest

from ghostmpm.errors import ConfigurationError, PointCloudParseError
from ghostmpm.grid import build_grid
from ghostmpm.mpoints import (
    Material,
    MaterialPoints,
    generate_block,
    generate_rect,
    import_point_cloud,
    write_point_cloud,
)

MAT = Material(1000.0, 0.3, 1000.0)


def test_material_validation():
    with pytest.raises(ConfigurationError):
        Material(-1.0, 0.3, 1.0)
    with pytest.raises(ConfigurationError):
        Material(1.0, 0.5, 1.0)
    with pytest.raises(ConfigurationError):
        Material(1.0, 0.3, -1.0)
    with pytest.raises(ConfigurationError):
        Material(1.0, 0.3, 1.0, yield_stress=0.0)


def test_lame_constants():
    m = Material(12e6, 0.2, 0.0)
    assert m.mu == pytest.approx(5e6)
    assert m.lam == pytest.approx(12e6 * 0.2 / (1.2 * 0.6))


def test_generate_rect_tiles_exactly():
    pts = generate_rect(((0.0, 0.0), (0.4, 0.4)), 26, MAT, body_id=3)
    assert len(pts) == 26**2
    assert pts.V0.sum() == pytest.approx(0.16, rel=1e-12)
    assert pts.m.sum() == pytest.approx(160.0, rel=1e-12)
    assert np.allclose(pts.half_lengths, 0.2 / 26)
    assert np.all(pts.body_id == 3)
    lo = (pts.x - pts.half_lengths).min(axis=0)
    hi = (pts.x + pts.half_lengths).max(axis=0)
    assert np.allclose(lo, 0.0, atol=1e-15) and np.allclose(hi, 0.4)


def test_generate_block_grid_aligned():
    g = build_grid((0, 0), 0.5, 4, 4)
    pts = generate_block(((0.5, 0.0), (1.5, 1.0)), g, 3, MAT)
    assert len(pts) == 4 * 9
    assert pts.V0.sum() == pytest.approx(1.0)
    # each cell holds exactly 9 points
    el = g.locate_elements(pts.x)
    assert np.all(np.bincount(el, minlength=g.n_elements)[el] == 9)


def test_generate_block_rejects_misaligned():
    g = build_grid((0, 0), 0.5, 4, 4)
    with pytest.raises(ConfigurationError):
        generate_block(((0.1, 0.0), (1.5, 1.0)), g, 2, MAT)
    with pytest.raises(ConfigurationError):
        generate_block(((0.0, 0.0), (3.0, 1.0)), g, 2, MAT)
    with pytest.raises(ConfigurationError):
        generate_block(((1.0, 1.0), (0.0, 0.0)), g, 2, MAT)


def test_concatenate_and_copy_are_independent():
    a = generate_rect(((0, 0), (1, 1)), 2, MAT, body_id=0)
    b = generate_rect(((2, 0), (3, 1)), 3, MAT, body_id=1)
    c = MaterialPoints.concatenate([a, b])
    assert len(c) == 13
    assert list(np.unique(c.body_id)) == [0, 1]
    d = c.copy()
    d.x[0] = 99.0
    assert c.x[0, 0] != 99.0


def test_point_cloud_roundtrip(tmp_path):
    pts = generate_rect(((0, 0), (0.4, 0.2)), (4, 2), MAT, body_id=1)
    path = tmp_path / "cloud.csv"
    write_point_cloud(path, pts)
    back = import_point_cloud(path, [MAT, MAT])
    assert np.array_equal(back.x, pts.x)
    assert np.array_equal(back.V0, pts.V0)
    assert np.array_equal(back.half_lengths, pts.half_lengths)
    assert np.array_equal(back.body_id, pts.body_id)
    assert np.allclose(back.m, pts.m)


def test_point_cloud_comments_and_blank_lines(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("# a comment\n\nx,y,V0,lx,ly,body_id,material_id\n# another\n0.5,0.5,0.01,0.05,0.05,0,0\n")
    pts = import_point_cloud(path, [MAT])
    assert len(pts) == 1
    assert pts.m[0] == pytest.approx(10.0)


@pytest.mark.parametrize(
    "body,line",
    [
        ("x,y,V0\n", 1),
        ("x,y,V0,lx,ly,body_id,material_id\n0.5,0.5,0.01,0.05,0.05,0\n", 2),
        ("x,y,V0,lx,ly,body_id,material_id\n0.5,abc,0.01,0.05,0.05,0,0\n", 2),
        ("x,y,V0,lx,ly,body_id,material_id\n0.5,0.5,0.01,0.05,0.05,0,0\n0.5,0.5,-1,0.05,0.05,0,0\n", 3),
        ("x,y,V0,lx,ly,body_id,material_id\n0.5,0.5,0.01,0.0,0.05,0,0\n", 2),
        ("x,y,V0,lx,ly,body_id,material_id\n0.5,0.5,0.01,0.05,0.05,0,4\n", 2),
    ],
)
def test_point_cloud_errors_carry_line_number(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(PointCloudParseError) as exc:
        import_point_cloud(path, [MAT])
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")
