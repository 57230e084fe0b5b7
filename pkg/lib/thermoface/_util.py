""" Shared exception roots and small helpers used across thermoface """

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

from joblib import Parallel, delayed

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Callable,
        Iterable,
        List,
        Optional,
        Sequence,
        TypeVar,
    )
    T = TypeVar('T')
    R = TypeVar('R')
except ImportError:
    # Missing types aren't important at runtime
    pass


logger = logging.getLogger(__name__)


class Error(Exception):
    """Base class for every exception raised by thermoface."""


class ParameterError(Error, ValueError):
    """Raised when an operation is called with parameters violating its
    preconditions.

    This is both a `thermoface.Error` and a `ValueError` to ease handling of
    errors coming from numerical code.
    """


class DataError(Error):
    """Raised when input data (files, annotations, manifests) is malformed."""


class PipelineError(Error):
    """Raised when a processing stage fails on otherwise valid input."""


def complain(msg, strict, exc_class=DataError):
    # type: (str, bool, Callable[[str], Exception]) -> None
    """Raise `exc_class` in strict mode, otherwise log a warning."""
    if strict:
        raise exc_class(msg)
    logger.warning(msg)


def require(condition, msg, *args):
    # type: (bool, str, Any) -> None
    """Raise ParameterError with a %-formatted message unless condition holds"""
    if not condition:
        raise ParameterError(msg % args if args else msg)


def require_positive(value, name):
    # type: (float, str) -> float
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError('%s must be a number, got %r' % (name, value))
    if not value > 0 or not math.isfinite(value):
        raise ParameterError('%s must be positive and finite, got %r'
                             % (name, value))
    return value


def parallel_map(func, items, jobs=1):
    # type: (Callable[[T], R], Iterable[T], int) -> List[R]
    """Apply func to every item, preserving input order.

    With jobs > 1 the calls run on a joblib thread pool; numpy and scipy
    release the GIL for the heavy parts.  The result order never depends on
    completion order.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=jobs, prefer='threads')(
        delayed(func)(item) for item in items)
