# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

import os
import tempfile

import numpy as np

from models.mesh import (build_square_mesh, build_unit_square_mesh, dual_geometry, dual_segments, dump_mesh,
                         element_geometry, locate, mesh_size, single_triangle_mesh)


REFERENCE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]


def test_counts_and_boundary():
    for n in (1, 3, 8):
        mesh = build_unit_square_mesh(n)
        assert mesh.num_nodes == (n + 1) ** 2
        assert mesh.num_elements == 2 * n * n
        assert mesh.boundary_node_flags.sum() == 4 * n
        assert np.all(mesh.areas > 0)
        assert abs(mesh.areas.sum() - 1.0) < 1e-12


def test_dual_sub_areas():
    for n in (2, 8, 32):
        mesh = build_unit_square_mesh(n)
        for k in (0, mesh.num_elements // 2, mesh.num_elements - 1):
            dual = dual_geometry(mesh, k)
            area = element_geometry(mesh, k).area
            assert np.allclose(dual.sub_areas, area / 3.0, atol=1e-15)
            assert abs(dual.sub_areas.sum() - area) < 1e-15


def test_reference_segment_length():
    mesh = single_triangle_mesh(REFERENCE)
    dual = dual_geometry(mesh, 0)
    assert abs(dual.segment_lengths[0, 0] - np.sqrt(5.0) / 6.0) < 1e-12
    assert np.allclose(dual.segment_endpoints[0, 0, 1], [1.0 / 3.0, 1.0 / 3.0])


def test_normals_point_away_from_vertex():
    mesh = build_unit_square_mesh(4)
    lengths, normals, starts = dual_segments(mesh)
    assert np.allclose(np.linalg.norm(normals, axis=-1), 1.0)
    away = np.einsum('mvsk,mvsk->mvs', normals, starts - mesh.coords[:, :, None, :])
    assert np.all(away > 0)
    # every interior segment is shared by two vertices with opposite normals
    closed = np.einsum('mvs,mvsk->mk', lengths, normals)
    assert np.allclose(closed, 0.0, atol=1e-14)


def test_mesh_size():
    mesh = build_unit_square_mesh(8)
    assert abs(mesh_size(mesh) - np.sqrt(2.0) / 8) < 1e-14
    assert abs(mesh.H - mesh_size(mesh)) < 1e-14


def test_locate():
    mesh = build_square_mesh(5, length=2.0, origin=(-1.0, -1.0))
    assert np.array_equal(locate(mesh, mesh.barycenters), np.arange(mesh.num_elements))
    assert locate(mesh, [1.0, 1.0])[0] in (mesh.num_elements - 2, mesh.num_elements - 1)
    try:
        locate(mesh, [1.5, 0.0])
        assert False, "point outside accepted"
    except ValueError:
        pass


def test_invalid_inputs():
    for bad in (0, -2, 2.5):
        try:
            build_unit_square_mesh(bad)
            assert False, "bad resolution accepted"
        except ValueError:
            pass
    try:
        single_triangle_mesh([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        assert False, "clockwise triangle accepted"
    except ValueError:
        pass
    try:
        element_geometry(build_unit_square_mesh(1), 2)
        assert False, "element index out of range accepted"
    except IndexError:
        pass


def test_dump_mesh():
    mesh = build_unit_square_mesh(2)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, 'mesh.txt')
        dump_mesh(mesh, path)
        with open(path) as f:
            lines = f.read().splitlines()
    assert len(lines) == mesh.num_nodes + mesh.num_elements
    assert lines[0] == '0 0 1' and lines[4] == '0.5 0.5 0'
    assert lines[mesh.num_nodes] == ' '.join(str(i) for i in mesh.triangles[0])


if __name__ == '__main__':
    for name, fn in list(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
            print(f'* True {name}')
