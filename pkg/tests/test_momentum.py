import numpy as np
import pytest

from curvematch.errors import ShapeMismatch
from curvematch.momentum import (
    SYNTHETIC,
    facet_midpoints,
    momentum_norm,
    read_momentum_csv,
    synthetic_momentum,
    write_momentum_csv,
)


def test_midpoints_on_chords(template):
    mesh, loop = template
    mids = facet_midpoints(loop, mesh.vertices)
    assert mids.shape == (loop.num_facets, 2)
    r = np.hypot(mids[:, 0], mids[:, 1])
    assert np.abs(r - np.cos(np.pi / 48)).max() < 1.0e-12


@pytest.mark.parametrize("name", sorted(SYNTHETIC))
def test_families_finite(template, name):
    mesh, loop = template
    p = synthetic_momentum(name, loop, mesh.vertices)
    assert p.shape == (loop.num_facets,)
    assert np.isfinite(p).all()
    assert np.abs(p).max() > 0.1


def test_contract_is_constant(template):
    mesh, loop = template
    p = synthetic_momentum("contract", loop, mesh.vertices)
    assert np.all(p == -1.38 * np.pi)


def test_teardrop_branches(template):
    mesh, loop = template
    mids = facet_midpoints(loop, mesh.vertices)
    p = synthetic_momentum("teardrop", loop, mesh.vertices)
    below = mids[:, 1] < 0
    assert np.all(p[below] == 3.0 * np.pi)
    assert np.all(p[~below] <= 3.0 * np.pi + 1.0e-12)
    assert np.all(p[~below] > 0)


def test_star_even_in_x():
    from curvematch.momentum import _star

    pts = np.array([[0.4, 0.7], [-0.4, 0.7], [0.9, -0.2], [-0.9, -0.2]])
    v = _star(pts)
    assert v[0] == pytest.approx(v[1], rel=1.0e-14)
    assert v[2] == pytest.approx(v[3], rel=1.0e-14)


def test_unknown_family_raises(template):
    mesh, loop = template
    with pytest.raises(ValueError):
        synthetic_momentum("wiggle", loop, mesh.vertices)


def test_norm_of_unit_momentum(template):
    mesh, loop = template
    p = np.ones(loop.num_facets)
    expected = np.sqrt(96.0 * np.sin(np.pi / 48.0))
    assert momentum_norm(loop, p) == pytest.approx(expected, rel=1.0e-12)
    with pytest.raises(ShapeMismatch):
        momentum_norm(loop, p[:-1])


def test_csv_roundtrip(tmp_path, template):
    mesh, loop = template
    p = synthetic_momentum("squeeze", loop, mesh.vertices)
    path = str(tmp_path / "p0.csv")
    write_momentum_csv(path, p)
    q = read_momentum_csv(path)
    assert np.array_equal(p, q)
    bad = tmp_path / "bad.csv"
    bad.write_text("facet;p\n0;1.0\n")
    with pytest.raises(ValueError):
        read_momentum_csv(str(bad))
