#! /usr/bin/python

# Copyright (C) 2026 The thermoface developers
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA

"""Tests for thermoface.geometry."""

import io
import os
import shutil
import tempfile
import unittest

import numpy as np
import numpy.testing

from thermoface._util import ParameterError
from thermoface.geometry import (
    Mesh,
    MeshFormatError,
    ShapeInstance,
    WarpDegenerateError,
    barycentric,
    barycentric_matrix,
    bilinear_matrix,
    build_warp,
    default_mesh,
    dump_landmarks,
    dump_mesh,
    parse_landmarks,
    parse_mesh,
    point_location,
    raster_mask,
    rasterize,
    read_landmarks,
    sample_bilinear,
    warp_image,
    write_landmarks,
)
from thermoface.imgcore import ImageGrid


AFFINE = np.array([[0.9, 0.1], [-0.05, 1.1]])
OFFSET = np.array([3.0, 2.0])


def mesh_area(mesh, points):
    # type: (Mesh, np.ndarray) -> float
    total = 0.0
    for tri in mesh.triangles:
        a, b, c = points[tri]
        total += 0.5 * abs((b[0] - a[0]) * (c[1] - a[1])
                           - (b[1] - a[1]) * (c[0] - a[0]))
    return total


class MeshTests(unittest.TestCase):

    def test_default_mesh(self):
        # type: () -> None
        mesh = default_mesh()
        self.assertEqual(58, mesh.vertex_count)
        self.assertEqual(96, mesh.triangle_count)
        self.assertIs(mesh, default_mesh())
        for incident in mesh.vertex_triangles():
            self.assertTrue(incident)

    def test_validation(self):
        # type: () -> None
        self.assertRaises(ParameterError, Mesh, [[0, 0], [1, 0]], [[0, 1, 1]])
        self.assertRaises(ParameterError, Mesh,
                          [[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
        self.assertRaises(ParameterError, Mesh,
                          [[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])

    def test_parse_dump(self):
        # type: () -> None
        mesh = default_mesh()
        buf = io.StringIO()
        dump_mesh(mesh, buf)
        self.assertEqual(mesh, parse_mesh(buf.getvalue().splitlines()))

    def test_parse_errors(self):
        # type: () -> None
        self.assertRaises(MeshFormatError, parse_mesh, [])
        self.assertRaises(MeshFormatError, parse_mesh, ['MESH 3'])
        self.assertRaises(MeshFormatError, parse_mesh,
                          ['MESH 3 1', '0 0', '1 0', '0 1'])
        self.assertRaises(MeshFormatError, parse_mesh,
                          ['MESH 3 1', '0 0', '1 x', '0 1', '0 1 2'])
        self.assertRaises(MeshFormatError, parse_mesh,
                          ['MESH 3 1', '0 0', '2 0', '4 0', '0 1 2'])

    def test_trailing_content(self):
        # type: () -> None
        lines = ['# comment', 'MESH 3 1', '0 0', '1 0', '', '0 1', '0 1 2',
                 '5 5 5']
        with self.assertLogs('thermoface', 'WARNING'):
            mesh = parse_mesh(lines)
        self.assertEqual(1, mesh.triangle_count)
        self.assertRaises(MeshFormatError, parse_mesh, lines, strict=True)


class LandmarkTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        shutil.rmtree(self.tmpdir)

    def test_round_trip(self):
        # type: () -> None
        shape = ShapeInstance(default_mesh().vertices * 1.5 + 0.1)
        path = os.path.join(self.tmpdir, 'face.pts')
        write_landmarks(shape, path)
        self.assertEqual(shape, read_landmarks(path))

    def test_count_mismatch(self):
        # type: () -> None
        self.assertRaises(MeshFormatError, parse_landmarks,
                          ['3', '0 0', '1 1'])
        self.assertRaises(MeshFormatError, parse_landmarks, [])
        buf = io.StringIO()
        dump_landmarks(ShapeInstance([[1, 2], [3, 4]]), buf)
        self.assertEqual('2\n1.0 2.0\n3.0 4.0\n', buf.getvalue())

    def test_shape_instance(self):
        # type: () -> None
        shape = ShapeInstance.from_flat([0, 1, 2, 3])
        numpy.testing.assert_array_equal([[0, 1], [2, 3]], shape.points)
        numpy.testing.assert_array_equal([0, 1, 2, 3], shape.flat())
        self.assertEqual(ShapeInstance([[1, 2], [3, 4]]),
                         shape.translated(1, 1))
        self.assertRaises(ParameterError, ShapeInstance, [0, 1, 2])
        self.assertRaises(ParameterError, ShapeInstance, [[0, np.nan]])
        self.assertRaises(ParameterError, shape.check_mesh, default_mesh())


class RasterTests(unittest.TestCase):

    def test_barycentric(self):
        # type: () -> None
        corners = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        numpy.testing.assert_allclose([1, 0, 0], barycentric((0, 0), corners))
        numpy.testing.assert_allclose([0.5, 0.25, 0.25],
                                      barycentric((1, 1), corners))

    def test_coverage(self):
        # type: () -> None
        mesh = default_mesh()
        raster = rasterize(mesh, ShapeInstance(mesh.vertices), (64, 80))
        covered = raster_mask(raster).count()
        area = mesh_area(mesh, mesh.vertices)
        self.assertAlmostEqual(area, covered, delta=0.05 * area)
        inside = raster.triangle >= 0
        numpy.testing.assert_allclose(1.0, raster.weights[inside].sum(axis=1))

    def test_barycentric_matrix(self):
        # type: () -> None
        mesh = default_mesh()
        raster = rasterize(mesh, ShapeInstance(mesh.vertices), (64, 80))
        b = barycentric_matrix(mesh, raster)
        rows, cols = np.nonzero(raster.triangle >= 0)
        positions = b.dot(mesh.vertices)
        numpy.testing.assert_allclose(cols, positions[:, 0], atol=1e-9)
        numpy.testing.assert_allclose(rows, positions[:, 1], atol=1e-9)

    def test_clipped(self):
        # type: () -> None
        mesh = default_mesh()
        shape = ShapeInstance(mesh.vertices).translated(-200, 0)
        self.assertEqual(0, raster_mask(rasterize(mesh, shape, (10, 10)))
                         .count())


class WarpTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.mesh = default_mesh()
        self.source = ShapeInstance(self.mesh.vertices)
        self.target = ShapeInstance(self.mesh.vertices.dot(AFFINE.T)
                                    + OFFSET)

    def test_affine_points(self):
        # type: () -> None
        warp = build_warp(self.mesh, self.source, self.target)
        pts = np.array([[30.0, 40.0], [12.5, 20.0], [45.0, 60.0]])
        numpy.testing.assert_allclose(pts.dot(AFFINE.T) + OFFSET,
                                      warp.map_points(pts))
        numpy.testing.assert_allclose(
            pts, warp.inverse().map_points(warp.map_points(pts)))

    def test_point_location(self):
        # type: () -> None
        warp = build_warp(self.mesh, self.source, self.source)
        self.assertIsNotNone(point_location(warp, (30.0, 40.0)))
        self.assertIsNone(point_location(warp, (-50.0, -50.0)))
        numpy.testing.assert_allclose(
            [[-50.0, -50.0]], warp.map_points([[-50.0, -50.0]]))

    def test_identity_warp(self):
        # type: () -> None
        rng = np.random.default_rng(1)
        img = ImageGrid(rng.random((80, 64)))
        warp = build_warp(self.mesh, self.source, self.source)
        out = warp_image(img, warp, (64, 80))
        inside = raster_mask(warp.raster((64, 80))).bits
        numpy.testing.assert_allclose(img.data[inside], out.data[inside])
        self.assertTrue(np.all(out.data[~inside] == 0))

    def test_linear_image(self):
        # type: () -> None
        ys, xs = np.mgrid[0:100, 0:100].astype(np.float64)
        img = ImageGrid(0.3 * xs + 0.2 * ys)
        warp = build_warp(self.mesh, self.source, self.target)
        out = warp_image(img, warp, (64, 80))
        rows, cols = np.nonzero(raster_mask(warp.raster((64, 80))).bits)
        mapped = np.column_stack((cols, rows)).dot(AFFINE.T) + OFFSET
        expected = 0.3 * mapped[:, 0] + 0.2 * mapped[:, 1]
        numpy.testing.assert_allclose(expected, out.data[rows, cols],
                                      atol=1e-9)

    def test_degenerate(self):
        # type: () -> None
        flat = self.mesh.vertices.copy()
        flat[:, 1] = 0.0
        self.assertRaises(WarpDegenerateError, build_warp, self.mesh,
                          self.source, ShapeInstance(flat))

    def test_warp_holds_no_state(self):
        # type: () -> None
        warp = build_warp(self.mesh, self.source, self.target)
        before = dict(vars(warp))
        img = ImageGrid(np.ones((100, 100)))
        warp_image(img, warp, (64, 80))
        warp_image(img, warp, (32, 40))
        self.assertEqual(sorted(before), sorted(vars(warp)))
        self.assertFalse(warp.matrices.flags.writeable)
        first = warp.raster((64, 80))
        second = warp.raster((64, 80))
        numpy.testing.assert_array_equal(first.triangle, second.triangle)


class BilinearMatrixTests(unittest.TestCase):

    def test_matches_sampling(self):
        # type: () -> None
        rng = np.random.default_rng(3)
        img = rng.random((30, 40))
        xs = rng.uniform(-2.0, 42.0, 200)
        ys = rng.uniform(-2.0, 32.0, 200)
        xs[:3] = [0.0, 39.0, 12.0]
        ys[:3] = [0.0, 29.0, 7.0]
        op = bilinear_matrix(xs, ys, (40, 30))
        self.assertEqual((200, 1200), op.shape)
        numpy.testing.assert_allclose(sample_bilinear(img, xs, ys),
                                      op.dot(img.ravel()), atol=1e-12)
        numpy.testing.assert_allclose(1.0, np.asarray(op.sum(axis=1)).ravel())

    def test_too_small(self):
        # type: () -> None
        self.assertRaises(ParameterError, bilinear_matrix, [0.0], [0.0],
                          (1, 5))


if __name__ == '__main__':
    unittest.main()
