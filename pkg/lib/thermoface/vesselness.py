""" Multi-scale vesselness maps and canonical-frame signatures

At each scale ``s`` the eigenvalues ``|l1| <= |l2|`` of the γ-normalized
Hessian give the blobiness ratio ``R = |l1| / |l2|`` and the structureness
``S = sqrt(l1**2 + l2**2)``.  The vesselness is::

    V_s = 0                                                if l2 > 0
    V_s = exp(-R**2 / (2 beta**2)) * (1 - exp(-S**2 / (2 c**2)))  otherwise

so bright tubes on a darker background (warm vessels on cooler skin) score
close to one, while blobs, flat regions and dark valleys score close to
zero.  The multi-scale map is the pixelwise maximum over the scales.

When ``c`` is not given it is half the largest structureness found in the
image over all scales (restricted to a foreground mask when one is
supplied).
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

import numpy as np

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Optional,
        Sequence,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import (
    ParameterError,
    PipelineError,
    parallel_map,
    require,
    require_positive,
)
from thermoface.geometry import ShapeInstance, build_warp, warp_image
from thermoface.imgcore import BinaryMask, ImageGrid, hessian_at_scale


logger = logging.getLogger(__name__)


DEFAULT_SCALES = (3.0, 4.0, 5.0)

# Fraction of the peak structureness used as the default c.
AUTO_C_FRACTION = 0.5


class SignatureError(PipelineError):
    """ A signature was requested from an unusable fit """


class VesselnessParams(object):
    """ Scales and sensitivities of the vesselness filter.

    ``c=None`` resolves ``c`` per image, see :func:`resolve_c`.
    """

    __slots__ = ('scales', 'beta', 'c')

    def __init__(self, scales=DEFAULT_SCALES, beta=0.5, c=None):
        # type: (Sequence[float], float, Optional[float]) -> None
        scales = tuple(float(s) for s in scales)
        require(len(scales) >= 1, 'at least one scale is required')
        for s in scales:
            require_positive(s, 'scale')
        require(all(a < b for a, b in zip(scales, scales[1:])),
                'scales must be strictly increasing, got %r', scales)
        self.scales = scales
        self.beta = require_positive(beta, 'beta')
        self.c = None if c is None else require_positive(c, 'c')

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, VesselnessParams):
            return NotImplemented
        return (self.scales, self.beta, self.c) == \
            (other.scales, other.beta, other.c)

    def __repr__(self):
        # type: () -> str
        return 'VesselnessParams(scales=%r, beta=%r, c=%r)' % (
            self.scales, self.beta, self.c)


class VesselnessMap(object):
    """ A vesselness confidence map; every value lies in [0, 1] """

    __slots__ = ('values',)

    def __init__(self, values):
        # type: (Union[ImageGrid, np.ndarray]) -> None
        grid = values if isinstance(values, ImageGrid) else ImageGrid(values)
        data = grid.data
        if data.min() < 0.0 or data.max() > 1.0:
            raise ParameterError('vesselness values must lie in [0, 1]')
        self.values = grid

    def __array__(self, dtype=None, copy=None):
        # type: (Any, Optional[bool]) -> np.ndarray
        return self.values.__array__(dtype, copy)

    @property
    def shape(self):
        # type: () -> Tuple[int, int]
        return self.values.shape

    def __repr__(self):
        # type: () -> str
        return 'VesselnessMap(%dx%d, max=%.3g)' % (
            self.values.width, self.values.height, self.values.data.max())


def _eigen(img, scale):
    # type: (Union[ImageGrid, np.ndarray], float) -> Tuple[np.ndarray, np.ndarray]
    return hessian_at_scale(img, scale).eigenvalues()


def _response(lambda1, lambda2, beta, c):
    # type: (np.ndarray, np.ndarray, float, float) -> np.ndarray
    abs2 = np.abs(lambda2)
    ratio = np.divide(np.abs(lambda1), abs2, out=np.zeros_like(abs2),
                      where=abs2 > 0)
    blobiness = np.exp(-ratio ** 2 / (2.0 * beta * beta))
    structureness = lambda1 ** 2 + lambda2 ** 2
    out = blobiness * (1.0 - np.exp(-structureness / (2.0 * c * c)))
    out[lambda2 > 0] = 0.0
    return np.clip(out, 0.0, 1.0)


def vesselness_at_scale(img, s, beta, c):
    # type: (Union[ImageGrid, np.ndarray], float, float, float) -> ImageGrid
    """ Single-scale vesselness of an image """
    s = require_positive(s, 'scale')
    beta = require_positive(beta, 'beta')
    c = require_positive(c, 'c')
    return ImageGrid(_response(*_eigen(img, s), beta=beta, c=c))


def resolve_c(img, scales, mask=None):
    # type: (Union[ImageGrid, np.ndarray], Sequence[float], Optional[BinaryMask]) -> float
    """ Default structureness sensitivity: half the peak Hessian norm.

    Falls back to 1 for images without any structure.
    """
    peak = 0.0
    for s in scales:
        l1, l2 = _eigen(img, s)
        norm = np.hypot(l1, l2)
        if mask is not None:
            bits = np.asarray(mask)
            if not bits.any():
                continue
            norm = norm[bits]
        peak = max(peak, float(norm.max()))
    if peak <= 0.0:
        return 1.0
    return AUTO_C_FRACTION * peak


def vesselness_multiscale(img,          # type: Union[ImageGrid, np.ndarray]
                          params=None,  # type: Optional[VesselnessParams]
                          mask=None,    # type: Optional[BinaryMask]
                          jobs=1,       # type: int
                          ):
    # type: (...) -> VesselnessMap
    """ Pixelwise maximum of the vesselness over ``params.scales``.

    :param mask: foreground used to resolve an automatic ``c``
    :param jobs: number of scales evaluated concurrently
    """
    if params is None:
        params = VesselnessParams()
    c = params.c
    if c is None:
        c = resolve_c(img, params.scales, mask)
        logger.debug('resolved vesselness c = %.4g', c)
    maps = parallel_map(
        lambda s: vesselness_at_scale(img, s, params.beta, c).data,
        params.scales, jobs)
    return VesselnessMap(np.maximum.reduce(maps))


def extract_signature(img,           # type: ImageGrid
                      fit,           # type: Any
                      model,         # type: Any
                      params=None,   # type: Optional[VesselnessParams]
                      mask=None,     # type: Optional[BinaryMask]
                      frame=None,    # type: Optional[Tuple[ShapeInstance, Tuple[int, int]]]
                      ):
    # type: (...) -> VesselnessMap
    """ Vesselness of a segmented raw thermal image, in a canonical frame.

    :param img: segmented raw (not enhanced) image
    :param fit: :class:`~thermoface.aam.FitResult` locating the face
    :param model: the :class:`~thermoface.aam.AamModel` that was fitted
    :param mask: foreground mask, used for the automatic ``c``
    :param frame: ``(reference shape, (width, height))`` to warp into;
        the model's mean shape and frame by default
    :raise SignatureError: if the fit is missing or unusable
    """
    if fit is None or getattr(fit, 'shape', None) is None:
        raise SignatureError('no fit to extract a signature from')
    if not np.isfinite(fit.final_error):
        raise SignatureError('fit error is not finite')
    if frame is None:
        frame = (model.mean_shape, model.frame_size)
    reference, size = frame
    vmap = vesselness_multiscale(img, params, mask)
    warp = build_warp(model.mesh, reference, fit.shape)
    warped = np.clip(warp_image(vmap.values, warp, size).data, 0.0, 1.0)
    return VesselnessMap(warped)
