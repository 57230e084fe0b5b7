""" Triangle meshes and piecewise affine warps

A :class:`Mesh` is a set of 2-D vertices plus vertex-index triangles.  A
:class:`ShapeInstance` places the mesh vertices somewhere, and a
:class:`PiecewiseAffineWarp` maps every triangle of a *source* instance
affinely onto the same triangle of a *target* instance.

:func:`warp_image` resamples an image into the source frame: each output
pixel lying inside a source triangle is mapped into the target instance
and the input image is sampled there bilinearly.  So with the canonical
mean shape as source and a fitted shape as target, it brings a face into
the canonical frame.

Rasterization is deterministic: a pixel centre on an edge shared by
several triangles belongs to the triangle with the lowest index.

Mesh file format::

    MESH <vertex count> <triangle count>
    <x> <y>           (one line per vertex)
    <i> <j> <k>       (one line per triangle, 0-based)

Blank lines and lines starting with ``#`` are ignored.  Landmark files
hold a point count on the first line followed by one ``x y`` pair per
line, in mesh vertex order.
"""

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

import collections
import io
import logging
import os

import numpy as np
from scipy import sparse
from scipy.ndimage import map_coordinates

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        IO,
        Iterable,
        List,
        Optional,
        Sequence,
        TextIO,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import (
    DataError,
    ParameterError,
    PipelineError,
    complain,
    require,
)
from thermoface.imgcore import BinaryMask, ImageGrid, as_array


logger = logging.getLogger(__name__)


DEFAULT_MESH_FILE = os.path.join(os.path.dirname(__file__), 'data',
                                 'face58.mesh')

# Barycentric coordinates down to this value still count as inside.
INSIDE_TOLERANCE = -1e-9

# Triangles with a smaller absolute area are degenerate.
DEGENERATE_AREA = 1e-12


class MeshFormatError(DataError):
    """ A mesh or landmark file could not be parsed """


class WarpDegenerateError(PipelineError):
    """ A triangle collapsed, so its affine map cannot be solved """


def _signed_areas(points, triangles):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    p0 = points[triangles[:, 0]]
    p1 = points[triangles[:, 1]]
    p2 = points[triangles[:, 2]]
    a = p1 - p0
    b = p2 - p0
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


class Mesh(object):
    """ Triangulated landmark layout.

    :ivar vertices: ``(n, 2)`` float array of canonical ``x, y`` positions
    :ivar triangles: ``(t, 3)`` int array of vertex indices
    """

    __slots__ = ('vertices', 'triangles')

    def __init__(self, vertices, triangles):
        # type: (Any, Any) -> None
        verts = np.array(vertices, dtype=np.float64)
        tris = np.array(triangles, dtype=np.int64)
        require(verts.ndim == 2 and verts.shape[1] == 2 and len(verts) >= 3,
                'mesh vertices must be an (n, 2) array with n >= 3')
        require(tris.ndim == 2 and tris.shape[1] == 3 and len(tris) >= 1,
                'mesh triangles must be a (t, 3) array with t >= 1')
        require(np.all(np.isfinite(verts)), 'mesh vertices must be finite')
        require(tris.min() >= 0 and tris.max() < len(verts),
                'triangle vertex index out of range')
        areas = _signed_areas(verts, tris)
        bad = np.flatnonzero(np.abs(areas) <= DEGENERATE_AREA)
        require(bad.size == 0, 'degenerate mesh triangle(s) %s',
                ', '.join(str(i) for i in bad[:5]))
        verts.setflags(write=False)
        tris.setflags(write=False)
        self.vertices = verts
        self.triangles = tris

    @property
    def vertex_count(self):
        # type: () -> int
        return len(self.vertices)

    @property
    def triangle_count(self):
        # type: () -> int
        return len(self.triangles)

    def vertex_triangles(self):
        # type: () -> List[List[int]]
        """ For every vertex, the indices of the triangles using it """
        incident = [[] for _ in range(self.vertex_count)]  # type: List[List[int]]
        for t, tri in enumerate(self.triangles):
            for v in tri:
                incident[v].append(t)
        return incident

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, Mesh):
            return NotImplemented
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles))

    __hash__ = None  # type: ignore

    def __repr__(self):
        # type: () -> str
        return 'Mesh(%d vertices, %d triangles)' % (
            self.vertex_count, self.triangle_count)


class ShapeInstance(object):
    """ One placement of the mesh vertices, ``(n, 2)`` image coordinates """

    __slots__ = ('points',)

    def __init__(self, points):
        # type: (Any) -> None
        pts = np.array(points, dtype=np.float64)
        if pts.ndim == 1:
            require(pts.size % 2 == 0, 'flattened shape has odd length')
            pts = pts.reshape(-1, 2)
        require(pts.ndim == 2 and pts.shape[1] == 2,
                'shape points must be an (n, 2) array')
        require(np.all(np.isfinite(pts)), 'shape points must be finite')
        pts.setflags(write=False)
        self.points = pts

    @classmethod
    def from_flat(cls, flat):
        # type: (Any) -> ShapeInstance
        """ Build from ``[x0, y0, x1, y1, ...]`` """
        return cls(np.asarray(flat, dtype=np.float64).reshape(-1, 2))

    def flat(self):
        # type: () -> np.ndarray
        return self.points.reshape(-1).copy()

    def __len__(self):
        # type: () -> int
        return len(self.points)

    def translated(self, dx, dy):
        # type: (float, float) -> ShapeInstance
        return ShapeInstance(self.points + np.array([dx, dy]))

    def check_mesh(self, mesh):
        # type: (Mesh) -> None
        require(len(self.points) == mesh.vertex_count,
                'shape has %d points, mesh has %d vertices',
                len(self.points), mesh.vertex_count)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, ShapeInstance):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    __hash__ = None  # type: ignore

    def __repr__(self):
        # type: () -> str
        return 'ShapeInstance(%d points)' % len(self.points)


Raster = collections.namedtuple('Raster', ['triangle', 'weights', 'size'])
Raster.__doc__ = """ Pixel to triangle assignment of a shape instance.

``triangle`` is an ``(h, w)`` int array (-1 outside every triangle),
``weights`` an ``(h, w, 3)`` array of barycentric weights of the three
triangle vertices and ``size`` the ``(width, height)`` of the raster. """


def barycentric(point, corners):
    # type: (Sequence[float], np.ndarray) -> np.ndarray
    """ Barycentric coordinates of a point in a triangle ``(3, 2)`` """
    p0, p1, p2 = np.asarray(corners, dtype=np.float64)
    t = np.column_stack((p1 - p0, p2 - p0))
    l12 = np.linalg.solve(t, np.asarray(point, dtype=np.float64) - p0)
    return np.array([1.0 - l12[0] - l12[1], l12[0], l12[1]])


def rasterize(mesh, points, size):
    # type: (Mesh, Union[ShapeInstance, np.ndarray], Tuple[int, int]) -> Raster
    """ Assign every pixel centre of a ``(width, height)`` raster to the
    lowest-index triangle of ``points`` containing it """
    pts = points.points if isinstance(points, ShapeInstance) \
        else np.asarray(points, dtype=np.float64)
    width, height = int(size[0]), int(size[1])
    require(width >= 1 and height >= 1, 'raster size must be positive')
    tri_index = np.full((height, width), -1, dtype=np.int64)
    weights = np.zeros((height, width, 3))
    for t, tri in enumerate(mesh.triangles):
        corners = pts[tri]
        x0 = max(int(np.floor(corners[:, 0].min())), 0)
        x1 = min(int(np.ceil(corners[:, 0].max())), width - 1)
        y0 = max(int(np.floor(corners[:, 1].min())), 0)
        y1 = min(int(np.ceil(corners[:, 1].max())), height - 1)
        if x1 < x0 or y1 < y0:
            continue
        p0 = corners[0]
        m = np.column_stack((corners[1] - p0, corners[2] - p0))
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) <= 2 * DEGENERATE_AREA:
            continue
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        dx = xs - p0[0]
        dy = ys - p0[1]
        l1 = inv[0, 0] * dx + inv[0, 1] * dy
        l2 = inv[1, 0] * dx + inv[1, 1] * dy
        l0 = 1.0 - l1 - l2
        inside = ((l0 >= INSIDE_TOLERANCE) & (l1 >= INSIDE_TOLERANCE)
                  & (l2 >= INSIDE_TOLERANCE))
        inside &= tri_index[y0:y1 + 1, x0:x1 + 1] < 0
        if not inside.any():
            continue
        sub_index = tri_index[y0:y1 + 1, x0:x1 + 1]
        sub_weights = weights[y0:y1 + 1, x0:x1 + 1]
        sub_index[inside] = t
        sub_weights[inside] = np.column_stack(
            (l0[inside], l1[inside], l2[inside]))
    return Raster(tri_index, weights, (width, height))


def raster_mask(raster):
    # type: (Raster) -> BinaryMask
    """ Pixels covered by some triangle """
    return BinaryMask(raster.triangle >= 0)


def barycentric_matrix(mesh, raster):
    # type: (Mesh, Raster) -> sparse.csr_matrix
    """ Sparse ``(inside pixels, vertices)`` interpolation matrix.

    Rows follow the row-major order of the covered pixels, so
    ``B @ points`` gives the position of every covered pixel under any
    shape instance.
    """
    rows, cols = np.nonzero(raster.triangle >= 0)
    tris = mesh.triangles[raster.triangle[rows, cols]]
    w = raster.weights[rows, cols]
    npix = rows.size
    row_index = np.repeat(np.arange(npix), 3)
    return sparse.csr_matrix(
        (w.reshape(-1), (row_index, tris.reshape(-1))),
        shape=(npix, mesh.vertex_count))


class PiecewiseAffineWarp(object):
    """ Per-triangle affine maps from a source to a target shape.

    ``matrices[t]`` is the ``2x3`` matrix taking homogeneous source
    coordinates of triangle ``t`` to target coordinates.
    """

    def __init__(self, mesh, source, target, matrices):
        # type: (Mesh, ShapeInstance, ShapeInstance, np.ndarray) -> None
        self.mesh = mesh
        self.source = source
        self.target = target
        self.matrices = matrices

    def raster(self, size):
        # type: (Tuple[int, int]) -> Raster
        """ Rasterization of the source shape, computed afresh per call """
        return rasterize(self.mesh, self.source, (int(size[0]), int(size[1])))

    def map_points(self, points):
        # type: (Any) -> np.ndarray
        """ Map source-frame points to the target frame.

        Points outside the source mesh use the affine map of the triangle
        they are closest to in barycentric terms.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.empty_like(pts)
        for n, pt in enumerate(pts):
            t = point_location(self, pt)
            if t is None:
                t = self._nearest_triangle(pt)
            out[n] = self.matrices[t].dot([pt[0], pt[1], 1.0])
        return out

    def _nearest_triangle(self, point):
        # type: (np.ndarray) -> int
        best = 0
        best_score = -np.inf
        for t, tri in enumerate(self.mesh.triangles):
            score = barycentric(point, self.source.points[tri]).min()
            if score > best_score:
                best = t
                best_score = score
        return best

    def inverse(self):
        # type: () -> PiecewiseAffineWarp
        return build_warp(self.mesh, self.target, self.source)

    def __repr__(self):
        # type: () -> str
        return 'PiecewiseAffineWarp(%r)' % (self.mesh,)


def build_warp(mesh, source, target):
    # type: (Mesh, ShapeInstance, ShapeInstance) -> PiecewiseAffineWarp
    """ Solve the affine map of every triangle from its three vertices.

    :raise WarpDegenerateError: if a source or target triangle has (near)
        zero area
    """
    source.check_mesh(mesh)
    target.check_mesh(mesh)
    for name, shape in (('target', target), ('source', source)):
        areas = _signed_areas(shape.points, mesh.triangles)
        bad = np.flatnonzero(np.abs(areas) <= DEGENERATE_AREA)
        if bad.size:
            raise WarpDegenerateError('degenerate %s triangle %d'
                                      % (name, bad[0]))
    matrices = np.empty((mesh.triangle_count, 2, 3))
    for t, tri in enumerate(mesh.triangles):
        src = np.column_stack((source.points[tri], np.ones(3)))
        matrices[t] = np.linalg.solve(src, target.points[tri]).T
    matrices.setflags(write=False)
    return PiecewiseAffineWarp(mesh, source, target, matrices)


def point_location(warp, point):
    # type: (PiecewiseAffineWarp, Sequence[float]) -> Optional[int]
    """ Lowest-index source triangle containing the point, or None """
    pt = np.asarray(point, dtype=np.float64)
    for t, tri in enumerate(warp.mesh.triangles):
        if barycentric(pt, warp.source.points[tri]).min() >= INSIDE_TOLERANCE:
            return t
    return None


def sample_bilinear(img, xs, ys):
    # type: (Union[ImageGrid, np.ndarray], np.ndarray, np.ndarray) -> np.ndarray
    """ Bilinear samples at ``(x, y)``; coordinates clamp to the border """
    arr = as_array(img)
    coords = np.vstack((np.ravel(ys), np.ravel(xs)))
    values = map_coordinates(arr, coords, order=1, mode='nearest')
    return values.reshape(np.shape(xs))


def bilinear_matrix(xs, ys, size):
    # type: (np.ndarray, np.ndarray, Tuple[int, int]) -> sparse.csr_matrix
    """ Sparse operator equal to :func:`sample_bilinear` on images of ``size``.

    Row ``n`` holds the weights of sample ``(xs[n], ys[n])`` over the
    row-major flattened pixels of a ``(width, height)`` image.
    """
    width, height = int(size[0]), int(size[1])
    require(width >= 2 and height >= 2,
            'bilinear sampling needs at least 2x2 pixels, got %dx%d',
            width, height)
    xs = np.clip(np.ravel(xs).astype(np.float64), 0, width - 1)
    ys = np.clip(np.ravel(ys).astype(np.float64), 0, height - 1)
    x0 = np.minimum(np.floor(xs), width - 2).astype(np.intp)
    y0 = np.minimum(np.floor(ys), height - 2).astype(np.intp)
    fx = xs - x0
    fy = ys - y0
    top = y0 * width + x0
    cols = np.column_stack((top, top + 1, top + width, top + width + 1))
    weights = np.column_stack(((1 - fy) * (1 - fx), (1 - fy) * fx,
                               fy * (1 - fx), fy * fx))
    rows = np.repeat(np.arange(xs.size), 4)
    return sparse.csr_matrix((weights.ravel(), (rows, cols.ravel())),
                             shape=(xs.size, width * height))


def warp_image(img, warp, out_size):
    # type: (ImageGrid, PiecewiseAffineWarp, Tuple[int, int]) -> ImageGrid
    """ Resample ``img`` into the source frame of ``warp``.

    :param out_size: ``(width, height)`` of the output raster
    :return: image of ``out_size``; pixels outside every source triangle
        are 0
    """
    raster = warp.raster(out_size)
    out = np.zeros((raster.size[1], raster.size[0]))
    rows, cols = np.nonzero(raster.triangle >= 0)
    if rows.size:
        tris = warp.mesh.triangles[raster.triangle[rows, cols]]
        w = raster.weights[rows, cols]
        targets = np.einsum('nk,nkd->nd', w, warp.target.points[tris])
        out[rows, cols] = sample_bilinear(img, targets[:, 0], targets[:, 1])
    return ImageGrid(out)


def _meaningful_lines(lines):
    # type: (Iterable[str]) -> Iterable[Tuple[int, str]]
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        yield lineno, line


def _numbers(line, count, conv, name, lineno):
    # type: (str, int, Any, str, int) -> list
    fields = line.split()
    if len(fields) != count:
        raise MeshFormatError('%s:%d: expected %d fields, got %r'
                              % (name, lineno, count, line))
    try:
        return [conv(f) for f in fields]
    except ValueError:
        raise MeshFormatError('%s:%d: bad number in %r' % (name, lineno, line))


def parse_mesh(lines, name='<mesh>', strict=False):
    # type: (Iterable[str], str, bool) -> Mesh
    """ Parse a mesh from an iterable of text lines """
    content = _meaningful_lines(lines)
    try:
        lineno, header = next(content)
    except StopIteration:
        raise MeshFormatError('%s: empty mesh file' % name)
    fields = header.split()
    if len(fields) != 3 or fields[0] != 'MESH':
        raise MeshFormatError('%s:%d: expected "MESH <nv> <nt>", got %r'
                              % (name, lineno, header))
    nv, nt = _numbers(' '.join(fields[1:]), 2, int, name, lineno)
    vertices = []
    triangles = []
    for lineno, line in content:
        if len(vertices) < nv:
            vertices.append(_numbers(line, 2, float, name, lineno))
        elif len(triangles) < nt:
            triangles.append(_numbers(line, 3, int, name, lineno))
        else:
            complain('%s:%d: ignoring trailing content %r'
                     % (name, lineno, line), strict, MeshFormatError)
            break
    if len(vertices) != nv or len(triangles) != nt:
        raise MeshFormatError('%s: expected %d vertices and %d triangles, '
                              'found %d and %d' % (name, nv, nt,
                                                   len(vertices),
                                                   len(triangles)))
    try:
        return Mesh(vertices, triangles)
    except ParameterError as e:
        raise MeshFormatError('%s: %s' % (name, e))


def load_mesh(path, strict=False):
    # type: (str, bool) -> Mesh
    with io.open(path, encoding='ascii') as fh:
        return parse_mesh(fh, name=str(path), strict=strict)


def dump_mesh(mesh, fileobj):
    # type: (Mesh, TextIO) -> None
    fileobj.write('MESH %d %d\n' % (mesh.vertex_count, mesh.triangle_count))
    for x, y in mesh.vertices:
        fileobj.write('%r %r\n' % (float(x), float(y)))
    for i, j, k in mesh.triangles:
        fileobj.write('%d %d %d\n' % (i, j, k))


_default_mesh = None  # type: Optional[Mesh]


def default_mesh():
    # type: () -> Mesh
    """ The bundled 58-vertex face mesh """
    global _default_mesh  # pylint: disable=global-statement
    if _default_mesh is None:
        _default_mesh = load_mesh(DEFAULT_MESH_FILE, strict=True)
    return _default_mesh


def parse_landmarks(lines, name='<landmarks>'):
    # type: (Iterable[str], str) -> ShapeInstance
    content = _meaningful_lines(lines)
    try:
        lineno, header = next(content)
    except StopIteration:
        raise MeshFormatError('%s: empty landmark file' % name)
    (count,) = _numbers(header, 1, int, name, lineno)
    points = [_numbers(line, 2, float, name, lineno)
              for lineno, line in content]
    if len(points) != count:
        raise MeshFormatError('%s: expected %d points, found %d'
                              % (name, count, len(points)))
    try:
        return ShapeInstance(points)
    except ParameterError as e:
        raise MeshFormatError('%s: %s' % (name, e))


def read_landmarks(path):
    # type: (str) -> ShapeInstance
    with io.open(path, encoding='ascii') as fh:
        return parse_landmarks(fh, name=str(path))


def write_landmarks(shape, path):
    # type: (ShapeInstance, str) -> None
    with io.open(path, 'w', encoding='ascii') as fh:
        dump_landmarks(shape, fh)


def dump_landmarks(shape, fileobj):
    # type: (ShapeInstance, TextIO) -> None
    fileobj.write('%d\n' % len(shape.points))
    for x, y in shape.points:
        fileobj.write('%r %r\n' % (float(x), float(y)))
