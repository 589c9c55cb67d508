import io
import math

import numpy as np
import pytest

from sielab.errors import ConfigurationError, MeshError
from sielab.mesh import (GeometrySpec, Obstacle, build_background_mesh, build_concentric_mesh,
                         check_mesh, collapse, load_mesh, make_crack_mesh, mesh_to_text, refine,
                         save_mesh)


def polygon_area(mesh, tag):
    nodes = mesh.tag_nodes(tag)
    x, y = mesh.vertices[nodes].T
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@pytest.mark.parametrize("spec", [
    GeometrySpec(2.0, (1.0,)),
    GeometrySpec(3.0, (1.0, 2.0)),
    GeometrySpec(1.5, (), Obstacle(1.0)),
    GeometrySpec(2.0, (1.2,), Obstacle(0.5, ((0, math.pi, "DIRICHLET"),
                                             (math.pi, 2 * math.pi, "NEUMANN")))),
])
def test_generated_meshes_are_valid(spec):
    mesh = build_concentric_mesh(spec, 0.15)
    assert check_mesh(mesh, spec) == []
    assert mesh.h <= 1.5 * 0.15
    assert sorted(set(mesh.regions.tolist())) == list(range(len(spec.interface_radii) + 1))
    fine = refine(mesh)
    assert check_mesh(fine, spec) == []
    np.testing.assert_array_equal(fine.vertices[:mesh.n_vertices], mesh.vertices)


def test_area_and_region_layout():
    spec = GeometrySpec(2.0, (1.0,))
    mesh = build_concentric_mesh(spec, 0.1)
    a = mesh.areas()
    assert a.sum() == pytest.approx(polygon_area(mesh, "OUTER"), rel=1e-12)
    assert a[mesh.regions == 1].sum() == pytest.approx(polygon_area(mesh, "IFACE:0"), rel=1e-12)
    c = mesh.vertices[mesh.triangles].mean(axis=1)
    r = np.hypot(*c.T)
    assert np.all(r[mesh.regions == 1] < 1.0) and np.all(r[mesh.regions == 0] > 1.0 - 0.1)


def test_background_contains_obstacle_interior():
    spec = GeometrySpec(1.25, (), Obstacle(1.0))
    bg = build_background_mesh(spec, 0.1)
    assert set(bg.regions.tolist()) == {0, 1}
    assert "IFACE:0" in bg.tags()
    phys = build_concentric_mesh(spec, 0.1)
    assert set(phys.tags()) == {"OUTER", "DIR"}
    assert check_mesh(bg, GeometrySpec(1.25, (1.0,))) == []


def test_mixed_obstacle_arcs_are_tagged():
    obs = Obstacle(0.5, ((0, math.pi, "DIRICHLET"), (math.pi, 2 * math.pi, "NEUMANN")))
    mesh = build_concentric_mesh(GeometrySpec(2.0, (1.0,), obs), 0.1)
    for tag, sign in (("DIR", 1), ("NEU", -1)):
        e = mesh.tag_edges(tag)
        mid = mesh.vertices[e].mean(axis=1)
        assert np.all(sign * mid[:, 1] >= -1e-12)


def test_text_round_trip():
    mesh = build_concentric_mesh(GeometrySpec(2.0, (1.0,)), 0.3)
    again = load_mesh(io.StringIO(mesh_to_text(mesh)))
    assert again.same_as(mesh)
    assert mesh_to_text(again) == mesh_to_text(mesh)


def test_save_and_load_path(tmp_path):
    mesh = build_concentric_mesh(GeometrySpec(1.0), 0.25)
    save_mesh(mesh, tmp_path / "m.txt")
    assert load_mesh(tmp_path / "m.txt").same_as(mesh)


@pytest.mark.parametrize("text, msg", [
    ("", "empty"),
    ("mesh 1\n", "header"),
    ("siemesh 2\n", "version"),
    ("siemesh 1\nv 0 0\nq 1\n", "line 3"),
    ("siemesh 1\nv 0 0\nv 1 0\ne 0 1 FOO\n", "tag"),
    ("siemesh 1\nv 0 0\nt 0 1 2 0\n", "out of range"),
])
def test_load_errors(text, msg):
    with pytest.raises(MeshError, match=msg):
        load_mesh(io.StringIO(text))


def test_crack_mesh_duplicates_interface_nodes():
    mesh = build_concentric_mesh(GeometrySpec(2.0, (0.8, 1.4)), 0.2)
    crack = make_crack_mesh(mesh, [0, 1])
    n0, n1 = len(mesh.tag_nodes("IFACE:0")), len(mesh.tag_nodes("IFACE:1"))
    assert crack.mesh.n_vertices == mesh.n_vertices + n0 + n1
    for k in (0, 1):
        np.testing.assert_array_equal(crack.mesh.vertices[crack.inner[k]],
                                      crack.mesh.vertices[crack.outer[k]])
    v = np.arange(crack.mesh.n_vertices, dtype=float)
    assert np.all(crack.jump(v, 0) < 0)
    assert collapse(crack).same_as(mesh)


@pytest.mark.parametrize("make", [
    lambda: GeometrySpec(1.0, (1.5,)),
    lambda: GeometrySpec(2.0, (1.0, 0.5)),
    lambda: GeometrySpec(-1.0),
    lambda: GeometrySpec(2.0, (1.0,), Obstacle(1.2)),
    lambda: Obstacle(0.5, ((0, 1.0, "DIRICHLET"),)),
    lambda: Obstacle(0.5, ((0, 2 * math.pi, "ROBIN"),)),
])
def test_invalid_geometry(make):
    with pytest.raises(ConfigurationError):
        make()


def test_too_coarse_annulus():
    with pytest.raises(MeshError, match="too coarse"):
        build_concentric_mesh(GeometrySpec(1.25, (), Obstacle(1.0)), 0.15)


def test_anchor_rings_are_not_duplicated():
    """Interface radii whose ring arithmetic rounds down must still give distinct rings."""
    obs = Obstacle(0.5, ((0, math.pi, "DIRICHLET"), (math.pi, 2 * math.pi, "NEUMANN")))
    spec = GeometrySpec(2.0, (1.2,), obs)
    mesh = build_concentric_mesh(spec, 0.15)
    assert check_mesh(mesh, spec) == []
    assert mesh.min_angle() > 25.0
