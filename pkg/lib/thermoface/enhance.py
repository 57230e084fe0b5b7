""" Detail enhancement by anisotropic diffusion

The enhanced image is the input minus an anisotropically diffused copy of
itself, ``I_e = I - I_d``.  Diffusion runs an explicit scheme on the
4-neighbour grid: every pair of adjacent pixels exchanges the flux
``step * c(|d|) * d`` where ``d`` is their intensity difference, and no
flux crosses the image border.  The total intensity is therefore conserved
and, with ``step <= 0.25``, every update is a convex combination of the
previous values.

Two conductance functions are available:

``paper``
    ``c(g) = exp(-g / k**2)``
``perona_malik``
    ``c(g) = exp(-(g / k)**2)``

With ``conductance_update = frozen`` the conductances are computed once
from the input image and held constant over time; ``per_step`` recomputes
them from every iterate.
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

import numpy as np

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

from thermoface._util import require, require_positive
from thermoface.imgcore import BinaryMask, ImageGrid, as_array
from thermoface.segment import SegmentationParams, segment_face


logger = logging.getLogger(__name__)


CONDUCTANCE_KINDS = ('paper', 'perona_malik')
CONDUCTANCE_UPDATES = ('frozen', 'per_step')

# Explicit 4-neighbour scheme stability bound.
MAX_STEP = 0.25


class DiffusionParams(object):
    """ Parameters of the explicit diffusion scheme """

    __slots__ = ('k', 'step', 'iterations', 'conductance',
                 'conductance_update')

    def __init__(self,
                 k=20.0,                      # type: float
                 step=0.2,                    # type: float
                 iterations=20,               # type: int
                 conductance='paper',         # type: str
                 conductance_update='frozen',  # type: str
                 ):
        # type: (...) -> None
        self.k = require_positive(k, 'k')
        self.step = require_positive(step, 'step')
        require(self.step <= MAX_STEP,
                'step must not exceed %g for stability, got %r',
                MAX_STEP, self.step)
        require(int(iterations) == iterations and iterations >= 1,
                'iterations must be a positive integer, got %r', iterations)
        self.iterations = int(iterations)
        require(conductance in CONDUCTANCE_KINDS,
                'conductance must be one of %s, got %r',
                ', '.join(CONDUCTANCE_KINDS), conductance)
        self.conductance = conductance
        require(conductance_update in CONDUCTANCE_UPDATES,
                'conductance_update must be one of %s, got %r',
                ', '.join(CONDUCTANCE_UPDATES), conductance_update)
        self.conductance_update = conductance_update

    def _key(self):
        # type: () -> Tuple
        return (self.k, self.step, self.iterations, self.conductance,
                self.conductance_update)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, DiffusionParams):
            return NotImplemented
        return self._key() == other._key()

    def __repr__(self):
        # type: () -> str
        return 'DiffusionParams(k=%r, step=%r, iterations=%r, ' \
            'conductance=%r, conductance_update=%r)' % self._key()


PreparedImage = collections.namedtuple(
    'PreparedImage', ['raw', 'mask', 'segmented', 'enhanced'])


def conductance(gradient, k, kind='paper'):
    # type: (Union[float, np.ndarray], float, str) -> np.ndarray
    """ Diffusion conductance for a gradient magnitude, in (0, 1] """
    g = np.abs(np.asarray(gradient, dtype=np.float64))
    if kind == 'paper':
        return np.exp(-g / (k * k))
    if kind == 'perona_malik':
        return np.exp(-(g / k) ** 2)
    raise ValueError('unknown conductance %r' % kind)


def _edge_differences(arr):
    # type: (np.ndarray) -> Tuple[np.ndarray, np.ndarray]
    """ Differences across every horizontal and vertical pixel edge """
    return np.diff(arr, axis=1), np.diff(arr, axis=0)


def _edge_conductances(arr, params):
    # type: (np.ndarray, DiffusionParams) -> Tuple[np.ndarray, np.ndarray]
    dx, dy = _edge_differences(arr)
    return (conductance(dx, params.k, params.conductance),
            conductance(dy, params.k, params.conductance))


def diffuse(img, params=None):
    # type: (ImageGrid, Optional[DiffusionParams]) -> ImageGrid
    """ Anisotropically diffuse an image.

    :param img: input image
    :param params: scheme parameters, defaults if None
    :return: the image after ``params.iterations`` explicit steps
    """
    if params is None:
        params = DiffusionParams()
    arr = as_array(img).copy()
    cx, cy = _edge_conductances(arr, params)
    for _ in range(params.iterations):
        if params.conductance_update == 'per_step':
            cx, cy = _edge_conductances(arr, params)
        dx, dy = _edge_differences(arr)
        flux_x = params.step * cx * dx
        flux_y = params.step * cy * dy
        update = np.zeros_like(arr)
        update[:, :-1] += flux_x
        update[:, 1:] -= flux_x
        update[:-1, :] += flux_y
        update[1:, :] -= flux_y
        arr += update
    return ImageGrid(arr)


def enhance_detail(img, params=None):
    # type: (ImageGrid, Optional[DiffusionParams]) -> ImageGrid
    """ The detail image ``img - diffuse(img)`` """
    return ImageGrid(as_array(img) - as_array(diffuse(img, params)))


def prepare_image(img,            # type: ImageGrid
                  seg=None,       # type: Optional[SegmentationParams]
                  diff=None,      # type: Optional[DiffusionParams]
                  ):
    # type: (...) -> PreparedImage
    """ Segment an image and enhance the segmented result.

    The enhanced image is zero outside the foreground mask.

    :raise thermoface.segment.SegmentationError: if segmentation fails
    """
    mask, segmented = segment_face(img, seg)
    enhanced = masked(enhance_detail(segmented, diff), mask)
    return PreparedImage(img, mask, segmented, enhanced)


def masked(img, mask):
    # type: (ImageGrid, BinaryMask) -> ImageGrid
    """ Zero every pixel outside the mask """
    return ImageGrid(np.where(np.asarray(mask), as_array(img), 0.0))
