import numpy as np
import pytest

from curvematch.errors import ShapeMismatch
from curvematch.mesh import curve_polygon
from curvematch.raster import (
    RasterField,
    RasterSpec,
    area,
    l2_inner,
    rasterize,
    read_raster,
    smooth,
    write_raster,
)


def square_polygon(s=5.0):
    return np.array([[-s, -s], [s, -s], [s, s], [-s, s]])


def test_spec_validation():
    with pytest.raises(ValueError):
        RasterSpec(nx=7)
    with pytest.raises(ValueError):
        RasterSpec(ny=4)
    with pytest.raises(ValueError):
        RasterSpec(half_width=0.0)
    with pytest.raises(ValueError):
        RasterSpec(kappa=-1.0)


def test_total_weight_is_domain_area():
    spec = RasterSpec()
    assert spec.cell_area * spec.nx * spec.ny == pytest.approx(400.0, rel=1.0e-14)


def test_gon48_mass(template):
    mesh, loop = template
    f = rasterize(curve_polygon(loop, mesh.vertices), RasterSpec())
    assert set(np.unique(f.values)) <= {0.0, 1.0}
    assert area(f) == pytest.approx(3.149414, abs=1.0e-5)
    assert abs(area(f) - 3.1327) < 0.1


def test_axis_square_exact():
    spec = RasterSpec()
    f = rasterize(square_polygon(), spec)
    assert area(f) == pytest.approx(100.0, rel=1.0e-14)


def test_orientation_independent():
    spec = RasterSpec(nx=32, ny=32)
    poly = square_polygon(3.3)
    a = rasterize(poly, spec)
    b = rasterize(poly[::-1], spec)
    assert np.array_equal(a.values, b.values)


def test_winding_against_slow_oracle():
    rng = np.random.default_rng(5)
    th = np.sort(rng.uniform(0.0, 2.0 * np.pi, 11))
    r = rng.uniform(2.0, 8.0, 11)
    poly = np.column_stack([r * np.cos(th), r * np.sin(th)])
    spec = RasterSpec(nx=16, ny=16)
    got = rasterize(poly, spec).values

    xs, ys = spec.points()
    nxt = np.roll(poly, -1, axis=0)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            # angle summation, robust away from the edges
            a = np.arctan2(poly[:, 1] - y, poly[:, 0] - x)
            b = np.arctan2(nxt[:, 1] - y, nxt[:, 0] - x)
            d = b - a
            d = (d + np.pi) % (2.0 * np.pi) - np.pi
            wind = d.sum() / (2.0 * np.pi)
            if abs(wind - round(wind)) > 1.0e-6:
                continue  # point effectively on an edge
            assert got[j, i] == float(round(wind) != 0)


def test_smoother_preserves_constant():
    spec = RasterSpec(nx=24, ny=24)
    f = RasterField(spec=spec, values=np.full((24, 24), 2.5))
    s = smooth(f)
    assert np.abs(s.values - 2.5).max() < 1.0e-8


def test_smoother_mass_conservation(template):
    mesh, loop = template
    f = rasterize(curve_polygon(loop, mesh.vertices), RasterSpec())
    s = smooth(f)
    assert s.values.sum() == pytest.approx(f.values.sum(), rel=1.0e-6)


def test_smoother_linearity():
    spec = RasterSpec(nx=20, ny=20)
    rng = np.random.default_rng(2)
    a = RasterField(spec=spec, values=rng.standard_normal((20, 20)))
    b = RasterField(spec=spec, values=rng.standard_normal((20, 20)))
    comb = RasterField(spec=spec, values=a.values + 2.0 * b.values)
    lhs = smooth(comb).values
    rhs = smooth(a).values + 2.0 * smooth(b).values
    assert np.abs(lhs - rhs).max() < 1.0e-6


def test_smoother_self_adjoint():
    spec = RasterSpec(nx=20, ny=20)
    rng = np.random.default_rng(3)
    a = RasterField(spec=spec, values=rng.standard_normal((20, 20)))
    b = RasterField(spec=spec, values=rng.standard_normal((20, 20)))
    lhs = l2_inner(smooth(a), b)
    rhs = l2_inner(a, smooth(b))
    assert lhs == pytest.approx(rhs, rel=1.0e-6)


def test_smoother_impulse_symmetry():
    spec = RasterSpec(nx=33, ny=33)
    v = np.zeros((33, 33))
    v[16, 16] = 1.0
    s = smooth(RasterField(spec=spec, values=v)).values
    assert np.abs(s - s[::-1, :]).max() < 1.0e-8
    assert np.abs(s - s[:, ::-1]).max() < 1.0e-8
    assert np.abs(s - s.T).max() < 1.0e-8
    assert s[16, 16] == s.max()


def test_smoother_reduces_peak(template):
    mesh, loop = template
    f = rasterize(curve_polygon(loop, mesh.vertices), RasterSpec())
    s = smooth(f)
    assert s.values.max() < f.values.max()
    assert s.values.min() > -1.0e-8


def test_l2_inner_checks_spec():
    a = RasterField(spec=RasterSpec(nx=16, ny=16), values=np.ones((16, 16)))
    b = RasterField(spec=RasterSpec(nx=32, ny=32), values=np.ones((32, 32)))
    with pytest.raises(ShapeMismatch):
        l2_inner(a, b)
    assert l2_inner(a, a) == pytest.approx(400.0, rel=1.0e-14)


def test_field_shape_checked():
    with pytest.raises(ShapeMismatch):
        RasterField(spec=RasterSpec(nx=16, ny=16), values=np.ones((8, 16)))
    with pytest.raises(ShapeMismatch):
        rasterize(np.zeros((2, 2)), RasterSpec())


def test_raster_roundtrip(tmp_path, template):
    mesh, loop = template
    f = rasterize(curve_polygon(loop, mesh.vertices), RasterSpec())
    base = str(tmp_path / "target_raster")
    write_raster(base, f)
    g = read_raster(base)
    assert g.spec == f.spec
    assert np.array_equal(g.values, f.values)
