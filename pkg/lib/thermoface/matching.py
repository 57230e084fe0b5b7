""" Signature similarity and gallery ranking

Two signatures are compared with the normalized cross-correlation
coefficient: the dot product of the mean-subtracted signatures divided by
the product of their mean-subtracted norms.  When a mask is given only its
pixels enter the sums, for both signatures alike.
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
import csv

import numpy as np

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Dict,
        Iterable,
        List,
        Mapping,
        Optional,
        TextIO,
        Tuple,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import Error, require


class UndefinedScoreError(Error, ArithmeticError):
    """ A constant signature makes the correlation undefined """


class ScorePair(collections.namedtuple('ScorePair', ['gallery_id', 'rho'])):
    """ Similarity of a probe to one gallery identity """

    __slots__ = ()


def ncc(a, b, mask=None):
    # type: (Any, Any, Any) -> float
    """ Normalized cross-correlation coefficient of two signatures.

    :raise ParameterError: if the dimensions differ
    :raise UndefinedScoreError: if either signature is constant
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    require(x.shape == y.shape, 'signature dimensions differ: %r vs %r',
            x.shape, y.shape)
    if mask is not None:
        bits = np.asarray(mask, dtype=bool)
        require(bits.shape == x.shape, 'mask does not match the signatures')
        x = x[bits]
        y = y[bits]
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt(np.dot(x.ravel(), x.ravel()) * np.dot(y.ravel(), y.ravel()))
    if denom == 0.0:
        raise UndefinedScoreError('correlation of a constant signature')
    rho = float(np.dot(x.ravel(), y.ravel()) / denom)
    return min(1.0, max(-1.0, rho))


def rank_scores(scores):
    # type: (Iterable[Tuple[Any, float]]) -> List[ScorePair]
    """ Sort ``(gallery_id, rho)`` pairs by descending rho, then by id """
    pairs = [ScorePair(gid, float(rho)) for gid, rho in scores]
    return sorted(pairs, key=lambda pair: (-pair.rho, pair.gallery_id))


def match_one_to_gallery(probe, gallery, mask=None):
    # type: (Any, Mapping[Any, Any], Any) -> List[ScorePair]
    """ Score a probe signature against every gallery signature.

    :raise ParameterError: on an empty gallery or mismatched dimensions
    """
    require(len(gallery) > 0, 'gallery is empty')
    return rank_scores((gid, ncc(probe, sig, mask))
                       for gid, sig in gallery.items())


SCORE_FIELDS = ('probe_id', 'gallery_id', 'rho')


def write_scores(rows, fileobj):
    # type: (Iterable[Tuple[Any, Any, float]], TextIO) -> None
    """ Write ``(probe_id, gallery_id, rho)`` rows as CSV with a header """
    writer = csv.writer(fileobj, lineterminator='\n')
    writer.writerow(SCORE_FIELDS)
    for probe_id, gallery_id, rho in rows:
        writer.writerow((probe_id, gallery_id, '%.10f' % rho))
