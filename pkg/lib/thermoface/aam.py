""" Active appearance models: training, inverse compositional fitting, I/O

An :class:`AamModel` couples

  * a :class:`ShapeModel`: the generalized-Procrustes mean of the training
    landmark sets plus their principal deformation modes, and
  * an :class:`AppearanceModel`: the mean texture ``a0`` and principal
    texture modes of the training images, each warped into the canonical
    frame spanned by the mean shape.

Fitting minimizes the inverse compositional error with the
"project-out" treatment of appearance.  The steepest-descent images and
the Gauss-Newton Hessian are computed once per model.  Every iteration
only samples the image under the current warp and solves for an update.
The current warp is then composed with the inverse of the incremental
warp, and ``alpha`` is recovered after convergence by projecting the
residual onto the appearance modes.  The shape basis used for fitting is
the PCA basis with four global similarity modes (scale/rotation and two
translations) prepended.  The appearance basis always includes a constant
mode so fits are insensitive to global intensity shifts.

Model files ("AAM1") are little-endian binary: a magic and version,
a count header, the embedded mesh, then length-prefixed arrays.
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

import logging
import math
import struct
import warnings

import numpy as np
from scipy.ndimage import distance_transform_edt
from scipy.sparse.linalg import MatrixRankWarning, lsqr, spsolve

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        BinaryIO,
        List,
        Optional,
        Sequence,
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
    require,
    require_positive,
)
from thermoface.geometry import (
    DEGENERATE_AREA,
    Mesh,
    ShapeInstance,
    barycentric_matrix,
    bilinear_matrix,
    build_warp,
    default_mesh,
    rasterize,
    sample_bilinear,
    warp_image,
)
from thermoface.imgcore import BinaryMask, ImageGrid, as_array
from thermoface.segment import moment_ellipse


logger = logging.getLogger(__name__)


# Distance of the mean shape's bounding box from the frame origin.
FRAME_MARGIN = 2.0

PROCRUSTES_TOL = 1e-10
PROCRUSTES_MAX_ITER = 100

# Eigenvalues below this fraction of the total variance are noise.
NEGLIGIBLE_VARIANCE = 1e-12

# Residual norm below which a basis vector is linearly dependent.
DEPENDENT_NORM = 1e-8

# Largest per-pixel miss accepted from the exact rendering solve.
EXACT_SAMPLE_TOL = 1e-9

# Landmark RMS radius over sqrt(semi_major * semi_minor) of the face
# ellipse, used until a model is calibrated on real masks.
DEFAULT_SEED_SCALE = 0.6

SIMILARITY_MODES = 4


class ModelFormatError(DataError):
    """ An AAM1 model file could not be read """


class FitDivergedError(PipelineError):
    """ Fitting produced a degenerate warp or non-finite values """


class FitOptions(object):
    """ Stopping rule for :func:`fit_icaam` """

    __slots__ = ('tol', 'max_iter')

    def __init__(self, tol=1e-6, max_iter=50):
        # type: (float, int) -> None
        self.tol = require_positive(tol, 'tol')
        require(int(max_iter) == max_iter and max_iter >= 1,
                'max_iter must be a positive integer, got %r', max_iter)
        self.max_iter = int(max_iter)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, FitOptions):
            return NotImplemented
        return (self.tol, self.max_iter) == (other.tol, other.max_iter)

    def __repr__(self):
        # type: () -> str
        return 'FitOptions(tol=%r, max_iter=%r)' % (self.tol, self.max_iter)


def orthonormal_rows(vectors, tol=DEPENDENT_NORM):
    # type: (Any, float) -> np.ndarray
    """ Gram-Schmidt over the rows, in order, dropping dependent rows """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    basis = []  # type: List[np.ndarray]
    for v in vectors:
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        w = v / norm
        for _ in range(2):
            for b in basis:
                w = w - np.dot(b, w) * b
        residual = np.linalg.norm(w)
        if residual < tol:
            continue
        basis.append(w / residual)
    if not basis:
        return np.zeros((0, vectors.shape[1]))
    return np.array(basis)


def pca(data, variance_keep):
    # type: (np.ndarray, float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]
    """ Principal components of the rows of ``data``.

    :return: ``(mean, modes, variances)`` where ``modes`` holds the
        smallest number of orthonormal rows whose variance reaches
        ``variance_keep`` of the total
    """
    data = np.asarray(data, dtype=np.float64)
    mean = data.mean(axis=0)
    centred = data - mean
    _, sigma, vt = np.linalg.svd(centred, full_matrices=False)
    energy = sigma ** 2
    total = energy.sum()
    # rounding noise of identical rows is not variation
    if total <= NEGLIGIBLE_VARIANCE * float(np.sum(data ** 2)):
        return mean, np.zeros((0, data.shape[1])), np.zeros(0)
    keep = energy > NEGLIGIBLE_VARIANCE * total
    energy = energy[keep]
    vt = vt[keep]
    cumulative = np.cumsum(energy) / total
    count = int(np.searchsorted(cumulative, variance_keep - 1e-12) + 1)
    count = min(count, len(energy))
    variances = energy[:count] / max(len(data) - 1, 1)
    return mean, vt[:count].copy(), variances


def _centroid_size(points):
    # type: (np.ndarray) -> float
    return float(np.linalg.norm(points - points.mean(axis=0)))


def _rotation_onto(shape, reference):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """ Proper rotation minimizing ``|shape @ R - reference|`` """
    u, _, vt = np.linalg.svd(shape.T.dot(reference))
    d = np.sign(np.linalg.det(u.dot(vt))) or 1.0
    return u.dot(np.diag([1.0, d])).dot(vt)


def procrustes_align(shapes):
    # type: (Sequence[np.ndarray]) -> np.ndarray
    """ Generalized Procrustes analysis.

    :return: ``(N, n, 2)`` centred, unit-size shapes rotated onto their
        common mean
    """
    aligned = []
    for pts in shapes:
        centred = pts - pts.mean(axis=0)
        size = np.linalg.norm(centred)
        require(size > 0, 'cannot align a shape whose points coincide')
        aligned.append(centred / size)
    aligned = np.array(aligned)
    reference = aligned[0].copy()
    for iteration in range(PROCRUSTES_MAX_ITER):
        for n in range(len(aligned)):
            aligned[n] = aligned[n].dot(_rotation_onto(aligned[n], reference))
        mean = aligned.mean(axis=0)
        mean /= np.linalg.norm(mean)
        mean = mean.dot(_rotation_onto(mean, reference))
        change = np.linalg.norm(mean - reference)
        reference = mean
        if change < PROCRUSTES_TOL:
            logger.debug('procrustes converged after %d iterations',
                         iteration + 1)
            break
    return aligned


class ShapeModel(object):
    """ Mean shape and orthonormal PCA deformation modes.

    ``basis`` rows are flattened ``[x0, y0, x1, y1, ...]`` displacement
    fields.
    """

    def __init__(self, mesh, mean_shape, basis, variances):
        # type: (Mesh, ShapeInstance, np.ndarray, np.ndarray) -> None
        mean_shape.check_mesh(mesh)
        basis = np.asarray(basis, dtype=np.float64).reshape(
            -1, 2 * mesh.vertex_count)
        self.mesh = mesh
        self.mean_shape = mean_shape
        self.basis = basis
        self.variances = np.asarray(variances, dtype=np.float64)

    @property
    def mode_count(self):
        # type: () -> int
        return len(self.basis)

    def reconstruct(self, shape):
        # type: (ShapeInstance) -> ShapeInstance
        """ Project a (frame aligned) shape onto the model and back """
        s0 = self.mean_shape.flat()
        coeffs = self.basis.dot(shape.flat() - s0)
        return ShapeInstance.from_flat(s0 + self.basis.T.dot(coeffs))

    def __repr__(self):
        # type: () -> str
        return 'ShapeModel(%d vertices, %d modes)' % (
            self.mesh.vertex_count, self.mode_count)


def _place_in_frame(aligned, scale):
    # type: (np.ndarray, float) -> Tuple[np.ndarray, np.ndarray]
    """ Scale aligned shapes and translate them to the frame margin """
    scaled = aligned * scale
    mean = scaled.mean(axis=0)
    offset = FRAME_MARGIN - mean.min(axis=0)
    return scaled + offset, mean + offset


def train_shape_model(shapes, variance_keep=0.95, mesh=None):
    # type: (Sequence[ShapeInstance], float, Optional[Mesh]) -> ShapeModel
    """ Procrustes-align landmark sets and extract their principal modes.

    :param shapes: at least two shapes with identical point counts
    :param variance_keep: fraction of the total variance to retain
    :param mesh: triangulation of the shapes, the default face mesh if None
    :raise ParameterError: on fewer than two shapes or bad variance_keep
    """
    require(len(shapes) >= 2, 'need at least 2 shapes, got %d', len(shapes))
    require(0.0 < variance_keep <= 1.0,
            'variance_keep must be in (0, 1], got %r', variance_keep)
    if mesh is None:
        mesh = default_mesh()
    for shape in shapes:
        shape.check_mesh(mesh)
    raw = [shape.points for shape in shapes]
    aligned = procrustes_align(raw)
    scale = float(np.mean([_centroid_size(pts) for pts in raw]))
    placed, mean = _place_in_frame(aligned, scale)
    _, modes, variances = pca(placed.reshape(len(placed), -1), variance_keep)
    logger.debug('shape model: %d shapes, %d modes', len(shapes), len(modes))
    return ShapeModel(mesh, ShapeInstance(mean), modes, variances)


def frame_size_for(shape):
    # type: (ShapeInstance) -> Tuple[int, int]
    """ Canonical raster ``(width, height)`` holding a shape plus margin """
    top = shape.points.max(axis=0)
    return (int(math.ceil(top[0] + FRAME_MARGIN)) + 1,
            int(math.ceil(top[1] + FRAME_MARGIN)) + 1)


class AppearanceModel(object):
    """ Mean texture and orthonormal texture modes in the canonical frame.

    All images are ``frame_size`` rasters that are zero outside ``mask``;
    the modes are orthonormal over the pixels of ``mask``.
    """

    def __init__(self, frame_size, mask, a0, modes, variances=None):
        # type: (Tuple[int, int], BinaryMask, ImageGrid, Sequence[ImageGrid], Optional[np.ndarray]) -> None
        self.frame_size = (int(frame_size[0]), int(frame_size[1]))
        require(mask.shape == (self.frame_size[1], self.frame_size[0]),
                'appearance mask does not match the frame size')
        self.mask = mask
        self.a0 = a0
        self.modes = list(modes)
        self.variances = np.zeros(len(self.modes)) if variances is None \
            else np.asarray(variances, dtype=np.float64)

    @property
    def mode_count(self):
        # type: () -> int
        return len(self.modes)

    def vector(self, img):
        # type: (Union[ImageGrid, np.ndarray]) -> np.ndarray
        """ The masked pixels of a frame image, row-major """
        return as_array(img)[self.mask.bits]

    def image(self, vector):
        # type: (np.ndarray) -> ImageGrid
        """ Inverse of :meth:`vector`, zero outside the mask """
        out = np.zeros(self.mask.shape)
        out[self.mask.bits] = vector
        return ImageGrid(out)

    def mode_matrix(self):
        # type: () -> np.ndarray
        if not self.modes:
            return np.zeros((0, self.mask.count()))
        return np.array([self.vector(m) for m in self.modes])

    def __repr__(self):
        # type: () -> str
        return 'AppearanceModel(frame=%dx%d, %d modes)' % (
            self.frame_size[0], self.frame_size[1], self.mode_count)


def warp_to_frame(img, shape, mesh, mean_shape, frame_size):
    # type: (ImageGrid, ShapeInstance, Mesh, ShapeInstance, Tuple[int, int]) -> ImageGrid
    """ Bring the face at ``shape`` into the canonical frame of
    ``mean_shape`` """
    return warp_image(img, build_warp(mesh, mean_shape, shape), frame_size)


def train_appearance_model(images,            # type: Sequence[ImageGrid]
                           shapes,            # type: Sequence[ShapeInstance]
                           mesh=None,         # type: Optional[Mesh]
                           variance_keep=0.95,  # type: float
                           mean_shape=None,   # type: Optional[ShapeInstance]
                           ):
    # type: (...) -> AppearanceModel
    """ PCA of training images warped into the canonical frame.

    :param mean_shape: canonical shape; the Procrustes mean of ``shapes``
        if None
    :raise ParameterError: on mismatched inputs or fewer than two samples
    """
    require(len(images) == len(shapes),
            '%d images but %d shapes', len(images), len(shapes))
    require(len(images) >= 2, 'need at least 2 samples, got %d', len(images))
    require(0.0 < variance_keep <= 1.0,
            'variance_keep must be in (0, 1], got %r', variance_keep)
    if mesh is None:
        mesh = default_mesh()
    if mean_shape is None:
        mean_shape = train_shape_model(shapes, 1.0, mesh).mean_shape
    frame_size = frame_size_for(mean_shape)
    raster = rasterize(mesh, mean_shape, frame_size)
    mask = BinaryMask(raster.triangle >= 0)
    vectors = np.array([
        as_array(warp_to_frame(img, shape, mesh, mean_shape,
                               frame_size))[mask.bits]
        for img, shape in zip(images, shapes)])
    mean, modes, variances = pca(vectors, variance_keep)
    model = AppearanceModel(frame_size, mask, None, [], variances)
    model.a0 = model.image(mean)
    model.modes = [model.image(m) for m in modes]
    logger.debug('appearance model: %d samples, %d px, %d modes',
                 len(images), mask.count(), len(modes))
    return model


class FitResult(object):
    """ Outcome of :func:`fit_icaam`.

    :ivar shape_params: combined (similarity + PCA) shape parameters
    :ivar appearance_params: coefficients of the model appearance basis
    :ivar final_error: mean squared residual per canonical pixel
    :ivar converged: whether the last update fell below the tolerance
    :ivar iterations: number of updates computed
    :ivar shape: the fitted vertex positions in image coordinates
    """

    __slots__ = ('shape_params', 'appearance_params', 'final_error',
                 'converged', 'iterations', 'shape')

    def __init__(self, shape_params, appearance_params, final_error,
                 converged, iterations, shape=None):
        # type: (np.ndarray, np.ndarray, float, bool, int, Optional[ShapeInstance]) -> None
        self.shape_params = np.asarray(shape_params, dtype=np.float64)
        self.appearance_params = np.asarray(appearance_params,
                                            dtype=np.float64)
        self.final_error = float(final_error)
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.shape = shape

    def __repr__(self):
        # type: () -> str
        return 'FitResult(error=%.6g, converged=%s, iterations=%d)' % (
            self.final_error, self.converged, self.iterations)


class AamModel(object):
    """ A trained AAM with its fitting quantities precomputed.

    :ivar shape_basis: ``(K, 2n)`` orthonormal rows, the similarity modes
        followed by the PCA modes
    :ivar appearance_basis: ``(M, pixels)`` orthonormal rows, the PCA modes
        followed by the constant mode
    """

    def __init__(self,
                 shape,                          # type: ShapeModel
                 appearance,                     # type: AppearanceModel
                 seed_scale=DEFAULT_SEED_SCALE,  # type: float
                 seed_shift=(0.0, 0.0),          # type: Sequence[float]
                 ):
        # type: (...) -> None
        self.shape = shape
        self.appearance = appearance
        self.seed_scale = require_positive(seed_scale, 'seed_scale')
        self.seed_shift = np.array(seed_shift, dtype=np.float64).reshape(2)
        mesh = shape.mesh
        s0 = shape.mean_shape.points
        raster = rasterize(mesh, s0, appearance.frame_size)
        if not np.array_equal(raster.triangle >= 0, appearance.mask.bits):
            raise ParameterError('appearance mask does not match the mean '
                                 'shape rasterization')
        self._raster = raster
        self._bary = barycentric_matrix(mesh, raster)
        self._s0 = s0.reshape(-1).copy()

        centred = s0 - s0.mean(axis=0)
        similarity = np.array([
            centred.reshape(-1),
            np.column_stack((-centred[:, 1], centred[:, 0])).reshape(-1),
            np.tile([1.0, 0.0], mesh.vertex_count),
            np.tile([0.0, 1.0], mesh.vertex_count),
        ])
        self.shape_basis = orthonormal_rows(
            np.vstack((similarity, shape.basis)))

        a0 = appearance.vector(appearance.a0)
        self._a0 = a0
        self.appearance_basis = orthonormal_rows(np.vstack((
            appearance.mode_matrix(), np.ones((1, a0.size)))))

        gx, gy = self._mean_gradient()
        sx = self.shape_basis[:, 0::2]
        sy = self.shape_basis[:, 1::2]
        sd = (gx[:, None] * self._bary.dot(sx.T)
              + gy[:, None] * self._bary.dot(sy.T))
        a = self.appearance_basis
        self.sd_images = sd - a.T.dot(a.dot(sd))
        self.hessian = self.sd_images.T.dot(self.sd_images)
        self._hessian_pinv = np.linalg.pinv(self.hessian, rcond=1e-12,
                                            hermitian=True)

        tris = mesh.triangles
        homog = np.concatenate((s0[tris], np.ones((len(tris), 3, 1))),
                               axis=2)
        self._base_inverse = np.linalg.inv(homog)
        pairs = [(v, t) for v, incident in enumerate(mesh.vertex_triangles())
                 for t in incident]
        self._pair_vertex = np.array([v for v, _ in pairs])
        self._pair_triangle = np.array([t for _, t in pairs])
        self._incidence = np.bincount(self._pair_vertex,
                                      minlength=mesh.vertex_count)

    def _mean_gradient(self):
        # type: () -> Tuple[np.ndarray, np.ndarray]
        """ Gradient of a0 at the mask pixels, with a0 extended outside
        the mask by its nearest value """
        mask = self.appearance.mask.bits
        a0 = as_array(self.appearance.a0)
        idx = distance_transform_edt(~mask, return_distances=False,
                                     return_indices=True)
        extended = a0[idx[0], idx[1]]
        gy, gx = np.gradient(extended)
        return gx[mask], gy[mask]

    @property
    def mesh(self):
        # type: () -> Mesh
        return self.shape.mesh

    @property
    def mean_shape(self):
        # type: () -> ShapeInstance
        return self.shape.mean_shape

    @property
    def frame_size(self):
        # type: () -> Tuple[int, int]
        return self.appearance.frame_size

    @property
    def mask(self):
        # type: () -> BinaryMask
        return self.appearance.mask

    @property
    def a0_vector(self):
        # type: () -> np.ndarray
        return self._a0

    @property
    def shape_param_count(self):
        # type: () -> int
        return len(self.shape_basis)

    @property
    def appearance_param_count(self):
        # type: () -> int
        return len(self.appearance_basis)

    def shape_points(self, p):
        # type: (Any) -> ShapeInstance
        """ Vertex positions ``s0 + S^T p`` """
        p = self._check_p(p)
        return ShapeInstance.from_flat(self._s0 + self.shape_basis.T.dot(p))

    def params_from_points(self, points):
        # type: (Union[ShapeInstance, np.ndarray]) -> np.ndarray
        """ Least-squares shape parameters of a point set """
        shape = points if isinstance(points, ShapeInstance) \
            else ShapeInstance(points)
        shape.check_mesh(self.mesh)
        return self.shape_basis.dot(shape.flat() - self._s0)

    def texture(self, alpha):
        # type: (Any) -> np.ndarray
        """ ``a0 + A^T alpha`` over the mask pixels """
        return self._a0 + self.appearance_basis.T.dot(self._check_alpha(alpha))

    def sample_positions(self, p):
        # type: (Any) -> np.ndarray
        """ Image coordinates of the mask pixels under the warp ``p`` """
        return self._bary.dot(self.shape_points(p).points)

    def sample(self, img, p):
        # type: (Union[ImageGrid, np.ndarray], Any) -> np.ndarray
        """ The image warped into the canonical frame, masked pixels only """
        positions = self.sample_positions(p)
        return sample_bilinear(img, positions[:, 0], positions[:, 1])

    def project_out(self, error):
        # type: (np.ndarray) -> np.ndarray
        a = self.appearance_basis
        return error - a.T.dot(a.dot(error))

    def _check_p(self, p):
        # type: (Any) -> np.ndarray
        p = np.asarray(p, dtype=np.float64).reshape(-1)
        require(p.size == self.shape_param_count,
                'expected %d shape parameters, got %d',
                self.shape_param_count, p.size)
        return p

    def _check_alpha(self, alpha):
        # type: (Any) -> np.ndarray
        alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
        full = self.appearance_param_count
        require(alpha.size in (full, self.appearance.mode_count),
                'expected %d appearance parameters, got %d', full,
                alpha.size)
        if alpha.size < full:
            alpha = np.concatenate((alpha, np.zeros(full - alpha.size)))
        return alpha

    def compose_inverse(self, p, dp):
        # type: (np.ndarray, np.ndarray) -> np.ndarray
        """ Parameters of ``W(x; p) o W(x; dp)^-1``.

        The incremental inverse warp moves the base vertices by ``-S^T dp``;
        each moved vertex is mapped through the affine maps of the current
        warp over its incident triangles and the results are averaged.
        """
        current = self.shape_points(p).points
        tris = self.mesh.triangles
        e1 = current[tris[:, 1]] - current[tris[:, 0]]
        e2 = current[tris[:, 2]] - current[tris[:, 0]]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(np.abs(areas) <= DEGENERATE_AREA):
            raise FitDivergedError('warp degenerated during fitting')
        affine = np.einsum('tij,tjd->tid', self._base_inverse,
                           current[tris])
        moved = (self._s0 - self.shape_basis.T.dot(dp)).reshape(-1, 2)
        homog = np.column_stack((moved, np.ones(len(moved))))
        mapped = np.einsum('pi,pid->pd', homog[self._pair_vertex],
                           affine[self._pair_triangle])
        new = np.zeros_like(moved)
        np.add.at(new, self._pair_vertex, mapped)
        new /= self._incidence[:, None]
        return self.shape_basis.dot(new.reshape(-1) - self._s0)

    def gauss_newton_step(self, img, p):
        # type: (Union[ImageGrid, np.ndarray], np.ndarray) -> np.ndarray
        error = self.sample(img, p) - self._a0
        return self._hessian_pinv.dot(self.sd_images.T.dot(error))

    def __repr__(self):
        # type: () -> str
        return 'AamModel(frame=%dx%d, %d shape params, %d appearance ' \
            'params)' % (self.frame_size[0], self.frame_size[1],
                         self.shape_param_count, self.appearance_param_count)


def _shape_stats(points):
    # type: (np.ndarray) -> Tuple[np.ndarray, float]
    centroid = points.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum((points - centroid) ** 2, axis=1))))
    return centroid, rms


def calibrate_seed(masks, shapes):
    # type: (Sequence[BinaryMask], Sequence[ShapeInstance]) -> Tuple[float, np.ndarray]
    """ Average landmark placement relative to the foreground ellipse.

    :return: ``(seed_scale, seed_shift)``: landmark RMS radius and
        centroid offset, both in units of ``sqrt(semi_major * semi_minor)``
    """
    require(len(masks) == len(shapes) and len(masks) >= 1,
            'calibration needs one mask per shape')
    scales = []
    shifts = []
    for mask, shape in zip(masks, shapes):
        ellipse = moment_ellipse(mask)
        size = math.sqrt(ellipse.semi_major * ellipse.semi_minor)
        require(size > 0, 'degenerate foreground in calibration')
        centroid, rms = _shape_stats(shape.points)
        scales.append(rms / size)
        shifts.append((centroid - (ellipse.cx, ellipse.cy)) / size)
    return float(np.mean(scales)), np.mean(shifts, axis=0)


def seed_from_mask(model, mask):
    # type: (AamModel, BinaryMask) -> np.ndarray
    """ Shape parameters placing the mean shape on a segmented face.

    The mean shape is scaled and translated onto the foreground moment
    ellipse using the model's seed calibration.
    """
    ellipse = moment_ellipse(mask)
    size = math.sqrt(ellipse.semi_major * ellipse.semi_minor)
    if size <= 0:
        raise ParameterError('foreground too small to seed a fit')
    s0 = model.mean_shape.points
    c0, rms0 = _shape_stats(s0)
    centre = np.array([ellipse.cx, ellipse.cy]) + model.seed_shift * size
    points = centre + (s0 - c0) * (model.seed_scale * size / rms0)
    return model.params_from_points(points)


def train_aam(images,              # type: Sequence[ImageGrid]
              shapes,              # type: Sequence[ShapeInstance]
              mesh=None,           # type: Optional[Mesh]
              variance_keep=0.95,  # type: float
              masks=None,          # type: Optional[Sequence[BinaryMask]]
              ):
    # type: (...) -> AamModel
    """ Train shape and appearance models and assemble an :class:`AamModel`.

    :param masks: foreground masks of the images; when given the model's
        segmentation seed is calibrated on them
    """
    shape_model = train_shape_model(shapes, variance_keep, mesh)
    appearance = train_appearance_model(images, shapes, shape_model.mesh,
                                        variance_keep, shape_model.mean_shape)
    seed_scale = DEFAULT_SEED_SCALE
    seed_shift = np.zeros(2)  # type: Any
    if masks is not None:
        seed_scale, seed_shift = calibrate_seed(masks, shapes)
    return AamModel(shape_model, appearance, seed_scale, seed_shift)


def _match_samples(op, flat, texture):
    # type: (Any, np.ndarray, np.ndarray) -> np.ndarray
    """ Smallest change to ``flat`` after which ``op`` samples ``texture`` """
    residual = texture - op.dot(flat)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', MatrixRankWarning)
        dual = spsolve(op.dot(op.T).tocsc(), residual)
    if np.all(np.isfinite(dual)):
        update = op.T.dot(dual)
        miss = np.abs(op.dot(flat + update) - texture).max()
        if miss <= EXACT_SAMPLE_TOL:
            return flat + update
    # Samples packed denser than the pixel grid overdetermine the image.
    logger.debug('shape too compressed for an exact rendering, using '
                 'least squares')
    update = lsqr(op, residual, atol=1e-14, btol=1e-14,
                  iter_lim=10 * op.shape[0])[0]
    return flat + update


def synthesize(model, p, alpha, out_size=None):
    # type: (AamModel, Any, Any, Optional[Tuple[int, int]]) -> ImageGrid
    """ Render ``a0 + sum(alpha_i A_i)`` at the shape given by ``p``.

    The texture is warped from the mean shape and then corrected so that
    :meth:`AamModel.sample` at ``p`` returns it exactly whenever the shape
    covers at least as many pixels as the canonical frame.

    :param out_size: ``(width, height)`` of the image; by default the
        canonical frame, enlarged if the shape reaches beyond it
    """
    shape = model.shape_points(p)
    texture = model.texture(alpha)
    mask = model.mask.bits
    canvas = np.zeros(mask.shape)
    canvas[mask] = texture
    idx = distance_transform_edt(~mask, return_distances=False,
                                 return_indices=True)
    canvas = canvas[idx[0], idx[1]]
    if out_size is None:
        width, height = model.frame_size
        top = shape.points.max(axis=0)
        out_size = (max(width, int(math.ceil(top[0] + FRAME_MARGIN)) + 1),
                    max(height, int(math.ceil(top[1] + FRAME_MARGIN)) + 1))
    warp = build_warp(model.mesh, shape, model.mean_shape)
    rendered = as_array(warp_image(ImageGrid(canvas), warp, out_size))
    positions = model.sample_positions(p)
    op = bilinear_matrix(positions[:, 0], positions[:, 1], out_size)
    flat = _match_samples(op, rendered.reshape(-1).astype(np.float64),
                          texture)
    return ImageGrid(flat.reshape(rendered.shape))


def aam_error(model, img, p, alpha):
    # type: (AamModel, Union[ImageGrid, np.ndarray], Any, Any) -> float
    """ Mean squared difference between the model texture and the image
    warped into the canonical frame """
    residual = model.texture(alpha) - model.sample(img, p)
    return float(np.mean(residual ** 2))


def _initial_params(model, init):
    # type: (AamModel, Any) -> np.ndarray
    if init is None:
        return np.zeros(model.shape_param_count)
    if isinstance(init, FitResult):
        return model._check_p(init.shape_params)
    if isinstance(init, ShapeInstance):
        return model.params_from_points(init)
    return model._check_p(init)


def fit_icaam(model, img, init=None, opts=None):
    # type: (AamModel, Union[ImageGrid, np.ndarray], Any, Optional[FitOptions]) -> FitResult
    """ Fit a model to an image by inverse compositional Gauss-Newton.

    :param model: trained model
    :param img: enhanced, segmented image
    :param init: seed shape parameters, a seed :class:`FitResult` or a
        :class:`~thermoface.geometry.ShapeInstance`; the mean shape if None
    :param opts: stopping rule, defaults if None
    :raise FitDivergedError: if the warp degenerates or values blow up
    """
    if opts is None:
        opts = FitOptions()
    p = _initial_params(model, init).copy()
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        dp = model.gauss_newton_step(img, p)
        if not np.all(np.isfinite(dp)):
            raise FitDivergedError('non-finite parameter update')
        step = float(np.linalg.norm(dp))
        logger.debug('iteration %d: |dp| = %.3g', iterations, step)
        if step < opts.tol:
            converged = True
            break
        p = model.compose_inverse(p, dp)
        if not np.all(np.isfinite(p)):
            raise FitDivergedError('non-finite shape parameters')
    error = model.sample(img, p) - model.a0_vector
    alpha = model.appearance_basis.dot(error)
    final_error = float(np.mean(model.project_out(error) ** 2))
    if not math.isfinite(final_error):
        raise FitDivergedError('non-finite fitting error')
    if not converged:
        logger.debug('fit stopped after %d iterations without converging',
                     iterations)
    return FitResult(p, alpha, final_error, converged, iterations,
                     model.shape_points(p))


MODEL_MAGIC = b"AAM"
MODEL_VERSION = b"1"
_HEADER = struct.Struct('<6I2d')
_LENGTH = struct.Struct('<I')


def _write_array(fileobj, arr, dtype):
    # type: (BinaryIO, np.ndarray, str) -> None
    data = np.ascontiguousarray(arr, dtype=dtype).reshape(-1)
    fileobj.write(_LENGTH.pack(data.size))
    fileobj.write(data.tobytes())


def _read_array(fileobj, dtype, name):
    # type: (BinaryIO, str, str) -> np.ndarray
    raw = fileobj.read(_LENGTH.size)
    if len(raw) != _LENGTH.size:
        raise ModelFormatError('truncated model file reading %s' % name)
    (count,) = _LENGTH.unpack(raw)
    dt = np.dtype(dtype)
    payload = fileobj.read(count * dt.itemsize)
    if len(payload) != count * dt.itemsize:
        raise ModelFormatError('truncated model file reading %s' % name)
    return np.frombuffer(payload, dtype=dt).copy()


def save_model(model, fileobj):
    # type: (AamModel, BinaryIO) -> None
    """ Serialize a model in AAM1 format.

    Geometry (mesh, mean shape, shape modes) is stored as float-64 so that
    the canonical rasterization is reproduced exactly; images are float-32.
    """
    mesh = model.mesh
    appearance = model.appearance
    fileobj.write(MODEL_MAGIC + MODEL_VERSION)
    fileobj.write(_HEADER.pack(
        mesh.vertex_count, mesh.triangle_count,
        appearance.frame_size[0], appearance.frame_size[1],
        model.shape.mode_count, appearance.mode_count,
        model.seed_scale, 0.0))
    _write_array(fileobj, mesh.vertices, '<f8')
    _write_array(fileobj, mesh.triangles, '<i4')
    _write_array(fileobj, model.mean_shape.points, '<f8')
    _write_array(fileobj, model.shape.basis, '<f8')
    _write_array(fileobj, model.shape.variances, '<f8')
    _write_array(fileobj, model.seed_shift, '<f8')
    _write_array(fileobj, as_array(appearance.a0), '<f4')
    _write_array(fileobj, np.array([as_array(m) for m in appearance.modes]),
                 '<f4')
    _write_array(fileobj, appearance.variances, '<f8')


def load_model(fileobj):
    # type: (BinaryIO) -> AamModel
    """ Read a model written by :func:`save_model`.

    :raise ModelFormatError: on a bad magic, an unknown version or
        truncated or inconsistent content
    """
    magic = fileobj.read(len(MODEL_MAGIC) + 1)
    if magic[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelFormatError('not an AAM model file')
    if magic[len(MODEL_MAGIC):] != MODEL_VERSION:
        raise ModelFormatError('unsupported AAM model version %r'
                               % magic[len(MODEL_MAGIC):])
    raw = fileobj.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ModelFormatError('truncated model header')
    (nv, nt, width, height, n_shape, n_app,
     seed_scale, _) = _HEADER.unpack(raw)
    vertices = _read_array(fileobj, '<f8', 'mesh vertices')
    triangles = _read_array(fileobj, '<i4', 'mesh triangles')
    mean = _read_array(fileobj, '<f8', 'mean shape')
    basis = _read_array(fileobj, '<f8', 'shape modes')
    shape_var = _read_array(fileobj, '<f8', 'shape variances')
    seed_shift = _read_array(fileobj, '<f8', 'seed shift')
    a0 = _read_array(fileobj, '<f4', 'mean appearance')
    modes = _read_array(fileobj, '<f4', 'appearance modes')
    app_var = _read_array(fileobj, '<f8', 'appearance variances')
    npix = width * height
    sizes = ((vertices.size, 2 * nv), (triangles.size, 3 * nt),
             (mean.size, 2 * nv), (basis.size, 2 * nv * n_shape),
             (shape_var.size, n_shape), (seed_shift.size, 2),
             (a0.size, npix), (modes.size, npix * n_app),
             (app_var.size, n_app))
    if any(got != expected for got, expected in sizes):
        raise ModelFormatError('model arrays do not match the header')
    try:
        mesh = Mesh(vertices.reshape(nv, 2), triangles.reshape(nt, 3))
        mean_shape = ShapeInstance(mean.reshape(nv, 2))
        shape = ShapeModel(mesh, mean_shape,
                           orthonormal_rows(basis.reshape(n_shape, 2 * nv))
                           if n_shape else basis.reshape(0, 2 * nv),
                           shape_var)
        frame = (width, height)
        raster = rasterize(mesh, mean_shape, frame)
        mask = BinaryMask(raster.triangle >= 0)
        appearance = AppearanceModel(frame, mask, None, [], app_var)
        appearance.a0 = appearance.image(a0.reshape(height, width)[mask.bits])
        mode_vectors = modes.reshape(n_app, height, width)[:, mask.bits] \
            .astype(np.float64)
        appearance.modes = [appearance.image(v) for v in
                            orthonormal_rows(mode_vectors)] if n_app else []
        return AamModel(shape, appearance, seed_scale, seed_shift)
    except ParameterError as e:
        raise ModelFormatError('inconsistent model file: %s' % e)


def write_model(model, path):
    # type: (AamModel, str) -> None
    with open(path, 'wb') as fh:
        save_model(model, fh)


def read_model(path):
    # type: (str) -> AamModel
    with open(path, 'rb') as fh:
        return load_model(fh)
