""" Foreground face segmentation

A thermal face is much warmer than its surroundings, so the foreground is
found by keeping the pixels whose intensity falls within a band
``[t_low, t_high]``.  The resulting provisional map is then cleaned with a
morphological opening (removes speckle) followed by a closing (fills
holes), both using a disc whose area is a fixed fraction of the area of
the ellipse fitted to the provisional foreground.

Morphology is computed on the image domain only.  Pixels outside the image
are treated as set when eroding and as unset when dilating, which keeps
``open(m) <= m <= close(m)`` and the idempotence of both operators true up
to the image border.
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
import logging
import math

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

try:
    # pylint: disable=unused-import
    from typing import (
        Optional,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import ParameterError, PipelineError, require
from thermoface.imgcore import BinaryMask, ImageGrid, as_array


logger = logging.getLogger(__name__)


DEFAULT_AREA_FRACTION = 0.06


class SegmentationError(PipelineError):
    """ No usable foreground was found in the image """


class SegmentationParams(object):
    """ Intensity band and structuring element size for segmentation.

    ``t_low=None`` selects Otsu's threshold of the image being segmented;
    ``t_high`` defaults to +inf.
    """

    __slots__ = ('t_low', 't_high', 'struct_elem_area_fraction')

    def __init__(self,
                 t_low=None,        # type: Optional[float]
                 t_high=math.inf,   # type: float
                 struct_elem_area_fraction=DEFAULT_AREA_FRACTION,  # type: float
                 ):
        # type: (...) -> None
        self.t_low = None if t_low is None else float(t_low)
        self.t_high = float(t_high)
        self.struct_elem_area_fraction = float(struct_elem_area_fraction)
        if self.t_low is not None:
            require(not math.isnan(self.t_low) and self.t_low < self.t_high,
                    't_low (%r) must be below t_high (%r)',
                    self.t_low, self.t_high)
        require(not math.isnan(self.t_high), 't_high must be a number')
        require(0.0 < self.struct_elem_area_fraction < 1.0,
                'struct_elem_area_fraction must be in (0, 1), got %r',
                self.struct_elem_area_fraction)

    def resolve(self, img):
        # type: (Union[ImageGrid, np.ndarray]) -> Tuple[float, float]
        """ Concrete ``(t_low, t_high)`` for one image """
        t_low = self.t_low
        if t_low is None:
            t_low = otsu_threshold(img)
        if not t_low < self.t_high:
            raise ParameterError('t_low (%r) must be below t_high (%r)'
                                 % (t_low, self.t_high))
        return t_low, self.t_high

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, SegmentationParams):
            return NotImplemented
        return (self.t_low, self.t_high, self.struct_elem_area_fraction) == \
            (other.t_low, other.t_high, other.struct_elem_area_fraction)

    def __repr__(self):
        # type: () -> str
        return 'SegmentationParams(t_low=%r, t_high=%r, ' \
            'struct_elem_area_fraction=%r)' % (
                self.t_low, self.t_high, self.struct_elem_area_fraction)


class MomentEllipse(collections.namedtuple(
        'MomentEllipse', ['cx', 'cy', 'semi_major', 'semi_minor', 'angle'])):
    """ Ellipse with the same second moments as a pixel set.

    ``angle`` is the direction of the major axis in radians, measured from
    +x towards +y.
    """

    __slots__ = ()

    @property
    def area(self):
        # type: () -> float
        return math.pi * self.semi_major * self.semi_minor


Segmentation = collections.namedtuple('Segmentation', ['mask', 'image'])


def otsu_threshold(img):
    # type: (Union[ImageGrid, np.ndarray]) -> float
    """ Otsu's two-class threshold of the image intensities """
    arr = as_array(img)
    if arr.min() == arr.max():
        return float(arr.min())
    return float(threshold_otsu(arr))


def threshold_band(img, params):
    # type: (ImageGrid, SegmentationParams) -> BinaryMask
    """ Set every pixel with ``t_low <= value <= t_high`` """
    arr = as_array(img)
    t_low, t_high = params.resolve(arr)
    return BinaryMask((arr >= t_low) & (arr <= t_high))


def moment_ellipse(mask):
    # type: (BinaryMask) -> MomentEllipse
    """ Fit an ellipse to the set pixels from their second central moments.

    The semi-axes are twice the square roots of the covariance eigenvalues,
    which reproduces the axes of a filled ellipse.
    """
    rows, cols = np.nonzero(np.asarray(mask))
    if rows.size == 0:
        raise SegmentationError('cannot fit an ellipse to an empty mask')
    xs = cols.astype(np.float64)
    ys = rows.astype(np.float64)
    cx = xs.mean()
    cy = ys.mean()
    dx = xs - cx
    dy = ys - cy
    cov = np.array([[np.mean(dx * dx), np.mean(dx * dy)],
                    [np.mean(dx * dy), np.mean(dy * dy)]])
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)
    major = evecs[:, 1]
    return MomentEllipse(
        float(cx), float(cy),
        2.0 * math.sqrt(evals[1]), 2.0 * math.sqrt(evals[0]),
        float(math.atan2(major[1], major[0])))


def circular_structuring_element(radius):
    # type: (float) -> BinaryMask
    """ Disc of the given radius on an odd ``2*floor(radius)+1`` square """
    radius = float(radius)
    require(radius >= 1.0, 'structuring element radius must be >= 1, got %r',
            radius)
    half = int(math.floor(radius))
    offsets = np.arange(-half, half + 1)
    dy, dx = np.meshgrid(offsets, offsets, indexing='ij')
    return BinaryMask(dx * dx + dy * dy <= radius * radius)


def _check_element(mask, elem):
    # type: (BinaryMask, BinaryMask) -> None
    require(elem.height <= mask.height and elem.width <= mask.width,
            'structuring element (%dx%d) larger than mask (%dx%d)',
            elem.width, elem.height, mask.width, mask.height)


def erode(mask, elem):
    # type: (BinaryMask, BinaryMask) -> BinaryMask
    _check_element(mask, elem)
    return BinaryMask(ndimage.binary_erosion(
        np.asarray(mask), structure=np.asarray(elem), border_value=1))


def dilate(mask, elem):
    # type: (BinaryMask, BinaryMask) -> BinaryMask
    _check_element(mask, elem)
    return BinaryMask(ndimage.binary_dilation(
        np.asarray(mask), structure=np.asarray(elem), border_value=0))


def morph_open(mask, elem):
    # type: (BinaryMask, BinaryMask) -> BinaryMask
    """ Opening: erosion followed by dilation """
    return dilate(erode(mask, elem), elem)


def morph_close(mask, elem):
    # type: (BinaryMask, BinaryMask) -> BinaryMask
    """ Closing: dilation followed by erosion """
    return erode(dilate(mask, elem), elem)


def element_radius(ellipse, area_fraction, mask_shape=None):
    # type: (MomentEllipse, float, Optional[Tuple[int, int]]) -> float
    """ Radius of the disc whose area is ``area_fraction`` of the ellipse.

    The result is at least 1 and, when ``mask_shape`` is given, small
    enough for the element to fit inside the mask.
    """
    radius = math.sqrt(area_fraction * ellipse.semi_major * ellipse.semi_minor)
    radius = max(radius, 1.0)
    if mask_shape is not None:
        limit = max((min(mask_shape) - 1) // 2, 1)
        radius = min(radius, float(limit))
    return radius


def segment_face(img, params=None):
    # type: (ImageGrid, Optional[SegmentationParams]) -> Segmentation
    """ Segment the face and suppress the background.

    :param img: thermal image
    :param params: thresholds and element sizing, defaults if None
    :return: ``(mask, image)`` where ``image`` is ``img`` with every
        background pixel set to exactly 0
    :raise SegmentationError: if no pixel falls in the band, or none
        survives the morphological cleanup
    """
    if params is None:
        params = SegmentationParams()
    provisional = threshold_band(img, params)
    if provisional.count() == 0:
        raise SegmentationError('no pixel within the foreground band')
    ellipse = moment_ellipse(provisional)
    radius = element_radius(ellipse, params.struct_elem_area_fraction,
                            provisional.shape)
    logger.debug('provisional foreground %d px, ellipse %.1fx%.1f, '
                 'element radius %.2f', provisional.count(),
                 ellipse.semi_major, ellipse.semi_minor, radius)
    elem = circular_structuring_element(radius)
    mask = morph_close(morph_open(provisional, elem), elem)
    if mask.count() == 0:
        raise SegmentationError('foreground removed by morphological opening')
    segmented = np.where(mask.bits, as_array(img), 0.0)
    return Segmentation(mask, ImageGrid(segmented))
