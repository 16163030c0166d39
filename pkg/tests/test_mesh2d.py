import thinshell
from thinshell.mesh2d import BoundaryTag, GeometrySpec, MeshFormatError, Region, TopologyError

import numpy as np
import pytest


################################################################################
## Fixtures

@pytest.fixture
def geometry():
    return GeometrySpec(shield_width=0.2, shield_thickness=1e-3, wire_size=0.02,
                        wire_separation=0.1, wire_gap=0.03, air_box=(0.6, 0.6))

@pytest.fixture
def shell_mesh(geometry):
    return thinshell.mesh2d.generate_mesh(geometry, 0.02, 0.1)

@pytest.fixture
def volume_mesh(geometry):
    geometry = thinshell.mesh2d.GeometrySpec(**{**geometry.as_dict(), 'resolve_shield_volume': True})
    return thinshell.mesh2d.generate_mesh(geometry, 0.02, 0.1, through_thickness_layers=4)


################################################################################
## Geometry

def test_geometry_spec(geometry):
    assert geometry.wire_top == pytest.approx(-0.0305)
    assert geometry.wire_bottom == pytest.approx(-0.0505)
    assert geometry.wire_centers == pytest.approx(np.array([[-0.05, -0.0405], [0.05, -0.0405]]))
    assert geometry.wire_area == pytest.approx(4e-4)

    scaled = geometry.scaled(2)
    assert scaled.air_box == (1.2, 1.2)
    assert scaled.shield_width == geometry.shield_width

def test_geometry_spec_invalid():
    with pytest.raises(ValueError):
        GeometrySpec(wire_size=0.3, wire_separation=0.2)
    with pytest.raises(ValueError):
        GeometrySpec(air_box=(0.5, 4.0))
    with pytest.raises(ValueError):
        GeometrySpec(shield_thickness=-1e-3)


################################################################################
## Generation

def test_generate_shell_mesh(geometry, shell_mesh):
    mesh = shell_mesh
    assert mesh.has_crack
    assert mesh.geometry == geometry
    assert np.all(mesh.signed_areas() > 0)
    assert thinshell.mesh2d.euler_characteristic(mesh) == 0
    assert not np.any(mesh.regions == Region.SHIELD)

    plus, minus = mesh.crack_chains
    assert plus[0] == minus[0] and plus[-1] == minus[-1]
    assert mesh.nodes[plus] == pytest.approx(mesh.nodes[minus])
    assert mesh.nodes[plus, 1] == pytest.approx(np.zeros(len(plus)))
    assert mesh.nodes[plus[[0, -1]], 0] == pytest.approx([-0.1, 0.1])
    assert np.all(np.diff(mesh.nodes[plus, 0]) > 0)

    tags = mesh.boundary_tags
    assert np.sum(tags == BoundaryTag.CRACK_PLUS) == len(plus) - 1
    assert np.sum(tags == BoundaryTag.CRACK_MINUS) == len(minus) - 1

def test_generate_regions(geometry, shell_mesh, volume_mesh):
    for mesh in (shell_mesh, volume_mesh):
        areas = mesh.signed_areas()
        assert np.sum(areas[mesh.regions == Region.WIRE_PLUS]) == pytest.approx(geometry.wire_area)
        assert np.sum(areas[mesh.regions == Region.WIRE_MINUS]) == pytest.approx(geometry.wire_area)
        assert np.sum(areas) == pytest.approx(0.36)

    shield = volume_mesh.signed_areas()[volume_mesh.regions == Region.SHIELD]
    assert np.sum(shield) == pytest.approx(0.2 * 1e-3)

def test_generate_cut_paths(geometry, shell_mesh):
    assert len(shell_mesh.cut_paths) == 2
    for path, (xc, _) in zip(shell_mesh.cut_paths, geometry.wire_centers):
        points = shell_mesh.nodes[path]
        assert points[:, 0] == pytest.approx(np.full(len(path), xc))
        assert points[0, 1] == pytest.approx(geometry.wire_bottom)
        assert points[-1, 1] == pytest.approx(-0.3)

def test_generate_volume_mesh(volume_mesh):
    assert not volume_mesh.has_crack
    assert thinshell.mesh2d.euler_characteristic(volume_mesh) == 1
    assert np.all(volume_mesh.boundary_tags == BoundaryTag.OUTER)
    with pytest.raises(TopologyError):
        volume_mesh.crack_chains

    layers = np.unique(np.round(volume_mesh.nodes[:, 1], 12))
    inside = layers[np.abs(layers) <= 0.5e-3 + 1e-12]
    assert len(inside) == 5

def test_generate_mesh_invalid(geometry):
    with pytest.raises(ValueError):
        thinshell.mesh2d.generate_mesh(geometry, 0.02, 1.0)
    with pytest.raises(ValueError):
        thinshell.mesh2d.generate_mesh(geometry, 0.5, 0.1)
    with pytest.raises(ValueError):
        thinshell.mesh2d.generate_mesh(geometry, 0.02, 0.1, wire_h=0.05)
    with pytest.raises(ValueError):
        thinshell.mesh2d.generate_mesh(geometry, 0.0, 0.1)

def test_estimate_dofs(geometry, shell_mesh, volume_mesh):
    nodes = len(shell_mesh.nodes)
    crack_nodes = len(shell_mesh.crack_pairs) + 2
    assert thinshell.mesh2d.estimate_dofs(shell_mesh) == nodes + 2 * crack_nodes
    assert thinshell.mesh2d.estimate_dofs(shell_mesh, n=3) == nodes + 10 * crack_nodes
    assert thinshell.mesh2d.estimate_dofs(volume_mesh) == len(volume_mesh.nodes) + 1

    bare = thinshell.mesh2d.generate_mesh(
        GeometrySpec(**{**geometry.as_dict(), 'include_shield': False}), 0.02, 0.1)
    assert not bare.has_crack
    assert thinshell.mesh2d.estimate_dofs(bare) == len(bare.nodes)

def test_mesh_stats(shell_mesh):
    stats = shell_mesh.stats()
    assert stats['nodes'] == len(shell_mesh.nodes)
    assert stats['cut_paths'] == 2
    assert stats['euler_characteristic'] == 0
    assert 0 < stats['min_quality'] <= stats['mean_quality'] <= 1


################################################################################
## Cracks and quality

def unit_square():
    nodes = [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1], [0, 2], [1, 2], [2, 2]]
    triangles = []
    for j in range(2):
        for i in range(2):
            a = 3 * j + i
            triangles += [[a, a + 1, a + 4], [a, a + 4, a + 3]]
    return thinshell.mesh2d.Mesh2D(nodes=nodes, triangles=triangles)

def test_insert_crack():
    mesh = thinshell.mesh2d.insert_crack(unit_square(), [3, 4, 5])
    assert mesh.has_crack
    assert len(mesh.nodes) == 10
    assert mesh.crack_pairs.tolist() == [[4, 9]]
    assert mesh.crack_endpoints.tolist() == [3, 5]
    below = mesh.centroids()[:, 1] < 1
    assert not np.any(mesh.triangles[~below] == 9)
    assert not np.any(mesh.triangles[below] == 4)
    assert thinshell.mesh2d.euler_characteristic(mesh) == 0

def test_insert_crack_invalid():
    mesh = unit_square()
    with pytest.raises(ValueError):
        thinshell.mesh2d.insert_crack(mesh, [3])
    with pytest.raises(ValueError):
        thinshell.mesh2d.insert_crack(mesh, [3, 5])
    with pytest.raises(ValueError):
        thinshell.mesh2d.insert_crack(mesh, [3, 4, 3])
    cracked = thinshell.mesh2d.insert_crack(mesh, [3, 4, 5])
    with pytest.raises(TopologyError):
        thinshell.mesh2d.insert_crack(cracked, [1, 4, 7])

def test_mesh_quality():
    equilateral = thinshell.mesh2d.Mesh2D(nodes=[[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]],
                                          triangles=[[0, 1, 2]])
    assert thinshell.mesh2d.mesh_quality(equilateral).minimum == pytest.approx(1.0)

    report = thinshell.mesh2d.mesh_quality(unit_square())
    assert report.quality == pytest.approx(np.full(8, 16 * 0.25 / ((2 + np.sqrt(2)) * np.sqrt(2))))

def test_mesh2d_invalid():
    with pytest.raises(ValueError):
        thinshell.mesh2d.Mesh2D(nodes=[[0, 0], [1, 0]], triangles=[[0, 1, 2]])
    with pytest.raises(ValueError):
        thinshell.mesh2d.Mesh2D(nodes=[[0, 0], [1, 0], [0, 1]], triangles=[[0, 1, 2]], regions=[0, 1])


################################################################################
## Point location

def test_point_locator(shell_mesh):
    locator = thinshell.mesh2d.PointLocator(shell_mesh)
    centroids = shell_mesh.centroids()[::37]
    elements, bary = locator.locate(centroids)
    assert np.array_equal(elements, np.arange(len(shell_mesh.triangles))[::37])
    assert bary == pytest.approx(np.full_like(bary, 1 / 3))

    elements, bary = locator.locate([[0.01, 0.2], [5.0, 5.0]])
    assert elements[0] >= 0 and elements[1] == -1
    assert bary[0].sum() == pytest.approx(1.0)
    corners = shell_mesh.nodes[shell_mesh.triangles[elements[0]]]
    assert bary[0] @ corners == pytest.approx([0.01, 0.2])

def test_point_locator_mask(volume_mesh):
    locator = thinshell.mesh2d.PointLocator(volume_mesh)
    mask = volume_mesh.regions == Region.SHIELD
    elements, _ = locator.locate([[0.0, 0.0], [0.0, 0.2]], mask=mask)
    assert volume_mesh.regions[elements[0]] == Region.SHIELD
    assert elements[1] == -1


################################################################################
## Mesh files

def test_write_read_mesh(tmp_path, shell_mesh):
    path = tmp_path / 'shell.mesh'
    thinshell.mesh2d.write_mesh(shell_mesh, path)
    mesh = thinshell.mesh2d.read_mesh(path)
    assert mesh.nodes == pytest.approx(shell_mesh.nodes, rel=1e-15)
    assert np.array_equal(mesh.triangles, shell_mesh.triangles)
    assert np.array_equal(mesh.regions, shell_mesh.regions)
    assert np.array_equal(mesh.boundary_tags, shell_mesh.boundary_tags)
    assert np.array_equal(mesh.crack_pairs, shell_mesh.crack_pairs)
    assert np.array_equal(mesh.crack_endpoints, shell_mesh.crack_endpoints)
    assert all(np.array_equal(a, b) for a, b in zip(mesh.cut_paths, shell_mesh.cut_paths))
    assert mesh.geometry == shell_mesh.geometry

def test_read_mesh_errors(tmp_path, shell_mesh):
    path = tmp_path / 'shell.mesh'
    thinshell.mesh2d.write_mesh(shell_mesh, path)
    lines = path.read_text().splitlines()
    header = next(i for i, text in enumerate(lines) if text.startswith('TRIANGLES'))
    lines[header + 2] = '1 2 x 0'
    path.write_text('\n'.join(lines) + '\n')
    with pytest.raises(MeshFormatError) as info:
        thinshell.mesh2d.read_mesh(path)
    assert info.value.line == header + 3
    assert info.value.section == 'TRIANGLES'

    path.write_text('not a mesh\n')
    with pytest.raises(MeshFormatError) as info:
        thinshell.mesh2d.read_mesh(path)
    assert info.value.line == 1

    path.write_text('\n'.join(lines[:header]) + '\n')
    with pytest.raises(MeshFormatError):
        thinshell.mesh2d.read_mesh(path)
