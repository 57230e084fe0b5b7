""" Image containers and Gaussian scale-space differential operators

This module provides the two raster types every other part of thermoface
works with:

  * :class:`ImageGrid`, an immutable 2-D grid of finite real intensities
    (thermal frames, diffusion output, vesselness maps, signatures)
  * :class:`BinaryMask`, an immutable 2-D grid of set/unset bits

together with γ-normalized Gaussian derivatives, the per-pixel Hessian and
the closed-form eigen-analysis of symmetric 2x2 matrices used by the
vesselness filter.

Conventions: pixel (row ``i``, column ``j``) has its centre at ``x = j``,
``y = i``; ``width`` counts columns and ``height`` counts rows.  Derivative
kernels are sampled Gaussians truncated at ``ceil(4 * scale)`` pixels,
renormalized so that their discrete moments are exact (a 0th order kernel
sums to one, a 1st order kernel differentiates ``x`` to exactly one and a
2nd order kernel differentiates ``x**2`` to exactly two).  Borders are
handled by mirror reflection.
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
import math

import numpy as np
from scipy.ndimage import correlate1d

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Optional,
        Sequence,
        Tuple,
        Union,
    )
    ArrayLike = Any
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import ParameterError, require, require_positive


# Multiple of the scale used as the kernel truncation radius.
KERNEL_TRUNCATION = 4.0

# Extension mode handed to scipy.ndimage for every derivative filter.
BORDER_MODE = 'reflect'


class ImageGrid(object):
    """ A 2-D grid of finite real intensities.

    The pixel values are held in a read-only ``float64`` numpy array
    available as :attr:`data`; ``numpy.asarray(grid)`` returns the same
    array without copying.  Construction fails with
    :class:`~thermoface._util.ParameterError` if the input is not a
    non-empty 2-D array of finite numbers.
    """

    __slots__ = ('_data',)

    def __init__(self, data):
        # type: (ArrayLike) -> None
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ParameterError(
                'image data must be a non-empty 2-D array, got shape %r'
                % (arr.shape,))
        if not np.all(np.isfinite(arr)):
            raise ParameterError('image data contains NaN or infinite values')
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def filled(cls, width, height, value=0.0):
        # type: (int, int, float) -> ImageGrid
        """ Build a constant image of the given size """
        return cls(np.full((int(height), int(width)), float(value)))

    @property
    def data(self):
        # type: () -> np.ndarray
        return self._data

    @property
    def width(self):
        # type: () -> int
        return self._data.shape[1]

    @property
    def height(self):
        # type: () -> int
        return self._data.shape[0]

    @property
    def shape(self):
        # type: () -> Tuple[int, int]
        """ (height, width), numpy order """
        return self._data.shape  # type: ignore

    @property
    def size(self):
        # type: () -> Tuple[int, int]
        """ (width, height) """
        return (self.width, self.height)

    def to_array(self):
        # type: () -> np.ndarray
        """ Return a writeable copy of the pixel data """
        return self._data.copy()

    def __array__(self, dtype=None, copy=None):
        # type: (Any, Optional[bool]) -> np.ndarray
        arr = self._data
        if dtype is not None:
            arr = arr.astype(dtype)
        if copy:
            arr = arr.copy()
        return arr

    def __eq__(self, other):
        # type: (Any) -> bool
        if not isinstance(other, ImageGrid):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __ne__(self, other):
        # type: (Any) -> Any
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None  # type: ignore

    def __repr__(self):
        # type: () -> str
        return '%s(width=%d, height=%d, min=%g, max=%g)' % (
            self.__class__.__name__, self.width, self.height,
            self._data.min(), self._data.max())


class BinaryMask(object):
    """ A 2-D grid of bits (foreground masks, structuring elements) """

    __slots__ = ('_bits',)

    def __init__(self, bits):
        # type: (ArrayLike) -> None
        arr = np.array(bits)
        if arr.ndim != 2 or arr.size == 0:
            raise ParameterError(
                'mask data must be a non-empty 2-D array, got shape %r'
                % (arr.shape,))
        arr = arr.astype(bool)
        arr.setflags(write=False)
        self._bits = arr

    @property
    def bits(self):
        # type: () -> np.ndarray
        return self._bits

    data = bits

    @property
    def width(self):
        # type: () -> int
        return self._bits.shape[1]

    @property
    def height(self):
        # type: () -> int
        return self._bits.shape[0]

    @property
    def shape(self):
        # type: () -> Tuple[int, int]
        return self._bits.shape  # type: ignore

    def count(self):
        # type: () -> int
        """ Number of set bits """
        return int(np.count_nonzero(self._bits))

    def __array__(self, dtype=None, copy=None):
        # type: (Any, Optional[bool]) -> np.ndarray
        arr = self._bits
        if dtype is not None:
            arr = arr.astype(dtype)
        if copy:
            arr = arr.copy()
        return arr

    def __eq__(self, other):
        # type: (Any) -> bool
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __ne__(self, other):
        # type: (Any) -> Any
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None  # type: ignore

    def __repr__(self):
        # type: () -> str
        return '%s(width=%d, height=%d, set=%d)' % (
            self.__class__.__name__, self.width, self.height, self.count())


class EigenPair(collections.namedtuple('EigenPair', ['lambda1', 'lambda2'])):
    """ Eigenvalues of a symmetric 2x2 matrix, ordered so that
    ``abs(lambda1) <= abs(lambda2)`` """

    __slots__ = ()

    @classmethod
    def ordered(cls, a, b):
        # type: (float, float) -> EigenPair
        if abs(a) <= abs(b):
            return cls(float(a), float(b))
        return cls(float(b), float(a))


class HessianField(object):
    """ γ-normalized second order Gaussian derivatives of an image at one
    scale.  The Hessian at each pixel is ``((lxx, lxy), (lxy, lyy))``. """

    __slots__ = ('scale', 'lxx', 'lxy', 'lyy')

    def __init__(self,
                 scale,    # type: float
                 lxx,      # type: ImageGrid
                 lxy,      # type: ImageGrid
                 lyy,      # type: ImageGrid
                 ):
        # type: (...) -> None
        if not lxx.shape == lxy.shape == lyy.shape:
            raise ParameterError('Hessian components differ in size')
        self.scale = float(scale)
        self.lxx = lxx
        self.lxy = lxy
        self.lyy = lyy

    def eigenvalues(self):
        # type: () -> Tuple[np.ndarray, np.ndarray]
        """ Per-pixel ordered eigenvalues, see :func:`eigen_fields` """
        return eigen_fields(self.lxx.data, self.lxy.data, self.lyy.data)

    def frobenius_norm(self):
        # type: () -> np.ndarray
        l1, l2 = self.eigenvalues()
        return np.hypot(l1, l2)


def as_array(img):
    # type: (Union[ImageGrid, ArrayLike]) -> np.ndarray
    """ View any image-like input as a float64 numpy array """
    return np.asarray(img, dtype=np.float64)


def kernel_radius(scale):
    # type: (float) -> int
    return int(math.ceil(KERNEL_TRUNCATION * scale))


def derivative_kernel(scale, order):
    # type: (float, int) -> np.ndarray
    """ Sampled Gaussian derivative kernel, as correlation weights.

    The weights are indexed by offsets ``-r .. r`` and satisfy
    ``sum(w * u**order) == order!`` exactly (up to rounding), so that
    polynomials of degree ``order`` are differentiated exactly.
    """
    scale = require_positive(scale, 'scale')
    require(order in (0, 1, 2), 'derivative order must be 0, 1 or 2, got %r',
            order)
    radius = kernel_radius(scale)
    u = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-u * u / (2.0 * scale * scale))
    if order == 0:
        return g / g.sum()
    if order == 1:
        # Correlating with u*g computes -(g' * f), i.e. +df/dx
        w = u * g
        return w / np.dot(u, w)
    w = (u * u - scale * scale) * g
    w -= g * (w.sum() / g.sum())
    return w / (0.5 * np.dot(u * u, w))


def gaussian_derivative(img, scale, order_x, order_y):
    # type: (Union[ImageGrid, ArrayLike], float, int, int) -> ImageGrid
    """ γ-normalized Gaussian derivative of an image.

    :param img: input image
    :param scale: standard deviation of the Gaussian, in pixels
    :param order_x: derivative order along x (columns)
    :param order_y: derivative order along y (rows)
    :return: the response multiplied by ``scale ** (order_x + order_y)``
    :raise ParameterError: on a non-positive scale or total order above 2
    """
    scale = require_positive(scale, 'scale')
    require(order_x in (0, 1, 2) and order_y in (0, 1, 2)
            and order_x + order_y <= 2,
            'unsupported derivative order (%r, %r)', order_x, order_y)
    arr = as_array(img)
    require(arr.ndim == 2 and arr.size > 0, 'image must be a non-empty grid')
    out = correlate1d(arr, derivative_kernel(scale, order_x), axis=1,
                      mode=BORDER_MODE)
    out = correlate1d(out, derivative_kernel(scale, order_y), axis=0,
                      mode=BORDER_MODE)
    order = order_x + order_y
    if order:
        out *= scale ** order
    return ImageGrid(out)


def hessian_at_scale(img, scale):
    # type: (Union[ImageGrid, ArrayLike], float) -> HessianField
    """ The γ-normalized Hessian of an image at one scale """
    return HessianField(
        scale,
        gaussian_derivative(img, scale, 2, 0),
        gaussian_derivative(img, scale, 1, 1),
        gaussian_derivative(img, scale, 0, 2),
    )


def eigen_fields(lxx, lxy, lyy):
    # type: (ArrayLike, ArrayLike, ArrayLike) -> Tuple[np.ndarray, np.ndarray]
    """ Closed-form eigenvalues of symmetric 2x2 matrices, elementwise.

    Returns ``(lambda1, lambda2)`` arrays with
    ``abs(lambda1) <= abs(lambda2)`` everywhere.
    """
    a = np.asarray(lxx, dtype=np.float64)
    b = np.asarray(lxy, dtype=np.float64)
    d = np.asarray(lyy, dtype=np.float64)
    half_trace = 0.5 * (a + d)
    radius = np.hypot(0.5 * (a - d), b)
    low = half_trace - radius
    high = half_trace + radius
    swap = np.abs(low) > np.abs(high)
    lambda1 = np.where(swap, high, low)
    lambda2 = np.where(swap, low, high)
    return lambda1, lambda2


def eigen2x2_ordered(h):
    # type: (ArrayLike) -> EigenPair
    """ Eigenvalues of one symmetric 2x2 matrix, ``|lambda1| <= |lambda2|`` """
    m = np.asarray(h, dtype=np.float64)
    require(m.shape == (2, 2), 'expected a 2x2 matrix, got shape %r',
            m.shape)
    require(m[0, 1] == m[1, 0], 'matrix is not symmetric')
    l1, l2 = eigen_fields(m[0, 0], m[0, 1], m[1, 1])
    return EigenPair(float(l1), float(l2))


def read_image(path):
    # type: (str) -> ImageGrid
    """ Read a TFR1 or binary PGM raster, see :mod:`thermoface.rasterfile` """
    from thermoface import rasterfile
    return rasterfile.read_image(path)


def write_image(img, path):
    # type: (ImageGrid, str) -> None
    """ Write an image in the native TFR1 float format """
    from thermoface import rasterfile
    rasterfile.write_image(img, path)
