""" Reading and writing raster files: native TFR1 floats and binary PGM

Two formats are understood:

TFR1
    The native thermal raster.  One ASCII header line
    ``TFR1 <width> <height>\\n`` followed by ``width * height``
    little-endian IEEE float-32 values, row-major, top row first.  Writing
    then reading a grid whose values are representable in float-32 gives
    back a bit-identical grid.

PGM (P5)
    Binary greymap with maxval up to 65535.  Samples are scaled linearly
    to [0, 1] by dividing by maxval (so 65535 reads as 1.0).  Foreground
    masks are written as 8-bit P5 with values 0 and 255.
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
        BinaryIO,
        Optional,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import DataError, ParameterError, complain
from thermoface.imgcore import BinaryMask, ImageGrid


logger = logging.getLogger(__name__)


TFR_MAGIC = b"TFR1"
TFR_DTYPE = np.dtype('<f4')
PGM_MAGIC = b"P5"
PGM_WHITESPACE = b" \t\r\n"

# Header lines longer than this are not a raster header at all.
MAX_HEADER_LENGTH = 256


class RasterError(DataError):
    """ Common base for all exceptions raised within the rasterfile module """


class RasterHeaderError(RasterError):
    """ The file header is malformed """


class RasterTruncatedError(RasterError):
    """ The pixel payload is shorter than the header announces """


class UnsupportedRasterFormatError(RasterError):
    """ The file is not TFR1 or binary PGM """


def _read_exact(fileobj, count, name):
    # type: (BinaryIO, int, str) -> bytes
    data = fileobj.read(count)
    if len(data) != count:
        raise RasterTruncatedError(
            '%s: expected %d bytes of pixel data, found %d'
            % (name, count, len(data)))
    return data


def _check_trailing(fileobj, name, strict):
    # type: (BinaryIO, str, bool) -> None
    if fileobj.read(1):
        complain('%s: trailing data after the pixel payload' % name, strict,
                 RasterError)


def _parse_dimensions(fields, name):
    # type: (list, str) -> Tuple[int, int]
    try:
        width, height = (int(f) for f in fields)
    except ValueError:
        raise RasterHeaderError('%s: bad raster dimensions %r'
                                % (name, fields))
    if width < 1 or height < 1:
        raise RasterHeaderError('%s: raster dimensions must be positive, '
                                'got %dx%d' % (name, width, height))
    return width, height


def _read_tfr(fileobj, name, strict):
    # type: (BinaryIO, str, bool) -> ImageGrid
    line = fileobj.readline(MAX_HEADER_LENGTH)
    if not line.endswith(b"\n"):
        raise RasterHeaderError('%s: unterminated TFR1 header' % name)
    fields = line.split()
    if len(fields) != 3 or fields[0] != TFR_MAGIC:
        raise RasterHeaderError('%s: malformed TFR1 header %r' % (name, line))
    width, height = _parse_dimensions(fields[1:], name)
    payload = _read_exact(fileobj, width * height * TFR_DTYPE.itemsize, name)
    _check_trailing(fileobj, name, strict)
    data = np.frombuffer(payload, dtype=TFR_DTYPE).reshape(height, width)
    try:
        return ImageGrid(data)
    except ParameterError as e:
        raise RasterError('%s: %s' % (name, e))


def _pgm_tokens(fileobj, count, name):
    # type: (BinaryIO, int, str) -> list
    """ Read header tokens, skipping '#' comments; consumes exactly one
    whitespace byte after the last token """
    tokens = []
    current = b""
    while True:
        ch = fileobj.read(1)
        if not ch:
            raise RasterHeaderError('%s: unexpected end of PGM header' % name)
        if ch == b"#" and not current:
            fileobj.readline(MAX_HEADER_LENGTH)
            continue
        if ch in PGM_WHITESPACE:
            if current:
                tokens.append(current)
                current = b""
                if len(tokens) == count:
                    return tokens
            continue
        current += ch
        if len(current) > 16:
            raise RasterHeaderError('%s: overlong PGM header token' % name)


def _read_pgm(fileobj, name, strict):
    # type: (BinaryIO, str, bool) -> ImageGrid
    magic = fileobj.read(2)
    if magic != PGM_MAGIC:
        raise UnsupportedRasterFormatError(
            '%s: only binary (P5) greymaps are supported, got %r'
            % (name, magic))
    tokens = _pgm_tokens(fileobj, 3, name)
    width, height = _parse_dimensions(tokens[:2], name)
    try:
        maxval = int(tokens[2])
    except ValueError:
        raise RasterHeaderError('%s: bad PGM maxval %r' % (name, tokens[2]))
    if not 0 < maxval < 65536:
        raise RasterHeaderError('%s: PGM maxval out of range: %d'
                                % (name, maxval))
    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
    payload = _read_exact(fileobj, width * height * dtype.itemsize, name)
    _check_trailing(fileobj, name, strict)
    samples = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return ImageGrid(samples.astype(np.float64) / maxval)


def read_raster(fileobj, name='<raster>', strict=False):
    # type: (BinaryIO, str, bool) -> ImageGrid
    """ Read a TFR1 or P5 raster from an open binary file object.

    :param fileobj: binary file object positioned at the start of the raster
    :param name: file name used in error messages
    :param strict: raise on trailing data instead of logging a warning
    :raise RasterError: (or one of its subclasses) on malformed input
    """
    head = fileobj.read(4)
    stream = _Prefixed(head, fileobj)
    if head == TFR_MAGIC:
        return _read_tfr(stream, name, strict)  # type: ignore
    if head[:2] == PGM_MAGIC:
        return _read_pgm(stream, name, strict)  # type: ignore
    if head[:1] == b"P":
        raise UnsupportedRasterFormatError(
            '%s: only binary (P5) greymaps are supported, got %r'
            % (name, head[:2]))
    raise UnsupportedRasterFormatError('%s: unknown raster format' % name)


class _Prefixed(object):
    """ File-like wrapper that replays already consumed header bytes """

    def __init__(self, prefix, fileobj):
        # type: (bytes, BinaryIO) -> None
        self._prefix = prefix
        self._fileobj = fileobj

    def read(self, size=-1):
        # type: (int) -> bytes
        if size is None or size < 0:
            data = self._prefix + self._fileobj.read()
            self._prefix = b""
            return data
        data = self._prefix[:size]
        self._prefix = self._prefix[size:]
        if len(data) < size:
            data += self._fileobj.read(size - len(data))
        return data

    def readline(self, limit=-1):
        # type: (int) -> bytes
        idx = self._prefix.find(b"\n")
        if idx >= 0 and (limit < 0 or idx < limit):
            data = self._prefix[:idx + 1]
            self._prefix = self._prefix[idx + 1:]
            return data
        data = self._prefix
        self._prefix = b""
        remaining = -1 if limit < 0 else max(limit - len(data), 0)
        if remaining:
            data += self._fileobj.readline(remaining)
        return data


def read_image(path, strict=False):
    # type: (str, bool) -> ImageGrid
    """ Read an image from a TFR1 or binary PGM file """
    with open(path, 'rb') as fh:
        return read_raster(fh, name=str(path), strict=strict)


def read_mask(path, strict=False):
    # type: (str, bool) -> BinaryMask
    """ Read a mask; any non-zero sample is a set bit """
    return BinaryMask(read_image(path, strict=strict).data != 0)


def write_raster(img, fileobj):
    # type: (Union[ImageGrid, np.ndarray], BinaryIO) -> None
    """ Write an image in TFR1 format to an open binary file object """
    grid = img if isinstance(img, ImageGrid) else ImageGrid(img)
    fileobj.write(b"%s %d %d\n" % (TFR_MAGIC, grid.width, grid.height))
    fileobj.write(np.ascontiguousarray(grid.data, dtype=TFR_DTYPE).tobytes())


def write_image(img, path):
    # type: (Union[ImageGrid, np.ndarray], str) -> None
    """ Write an image in the native TFR1 float format """
    with open(path, 'wb') as fh:
        write_raster(img, fh)


def write_pgm(img, path):
    # type: (Union[ImageGrid, BinaryMask], str) -> None
    """ Write a mask as 8-bit P5 {0, 255} or an image as 16-bit P5.

    Image values are clipped to [0, 1] and scaled to 0..65535.
    """
    if isinstance(img, BinaryMask):
        maxval = 255
        samples = np.where(img.bits, 255, 0).astype('u1')
    else:
        grid = img if isinstance(img, ImageGrid) else ImageGrid(img)
        maxval = 65535
        clipped = np.clip(grid.data, 0.0, 1.0)
        if not np.array_equal(clipped, grid.data):
            logger.warning('%s: clipping image values to [0, 1] for PGM',
                           path)
        samples = np.rint(clipped * maxval).astype('>u2')
    height, width = samples.shape
    with open(path, 'wb') as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (width, height, maxval))
        fh.write(samples.tobytes())
