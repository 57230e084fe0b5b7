""" Dataset manifests

A manifest lists the images of a dataset, one paragraph per image (see
:mod:`thermoface.control` for the syntax)::

    Subject: s03
    Yaw: 45
    Image: images/s03_yaw045.tfr
    Landmarks: landmarks/s03_yaw045.pts
    Session: morning

``Subject``, ``Yaw`` and ``Image`` are mandatory.  ``Landmarks`` (a file
of mesh vertex positions, see :mod:`thermoface.geometry`) marks an entry
usable for training, ``Session`` is a free-form tag.  Relative paths are
resolved against the directory holding the manifest.
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
import os

try:
    # pylint: disable=unused-import
    from typing import (
        Dict,
        Iterable,
        List,
        Optional,
        TextIO,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import DataError, complain
from thermoface.control import Paragraph, dump_paragraphs, read_paragraphs
from thermoface.geometry import ShapeInstance, read_landmarks
from thermoface.imgcore import ImageGrid
from thermoface.rasterfile import read_image


logger = logging.getLogger(__name__)


MIN_YAW = 0.0
MAX_YAW = 90.0


class AnnotationError(DataError):
    """ An image annotation (yaw, subject, landmark file) is invalid """


def check_yaw(yaw):
    # type: (float) -> float
    """ Validate a yaw angle in degrees, 0 frontal to 90 profile """
    try:
        yaw = float(yaw)
    except (TypeError, ValueError):
        raise AnnotationError('yaw must be a number, got %r' % (yaw,))
    if math.isnan(yaw) or not MIN_YAW <= yaw <= MAX_YAW:
        raise AnnotationError('yaw %r outside [%g, %g]'
                              % (yaw, MIN_YAW, MAX_YAW))
    return yaw


class ManifestEntry(collections.namedtuple(
        'ManifestEntry', ['subject', 'yaw', 'image', 'landmarks',
                          'session'])):
    """ One image of a dataset; paths are absolute or relative to the
    manifest's directory """

    __slots__ = ()

    def __new__(cls, subject, yaw, image, landmarks=None, session=None):
        # type: (str, float, str, Optional[str], Optional[str]) -> ManifestEntry
        if not subject:
            raise AnnotationError('entry without a subject')
        return super(ManifestEntry, cls).__new__(
            cls, str(subject), check_yaw(yaw), image, landmarks, session)


class DatasetManifest(object):
    """ The entries of a dataset plus the directory their paths are
    relative to """

    def __init__(self, entries, base_dir='.'):
        # type: (Iterable[ManifestEntry], str) -> None
        self.entries = list(entries)
        self.base_dir = base_dir

    def resolve(self, path):
        # type: (str) -> str
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)

    def subjects(self):
        # type: () -> List[str]
        """ Subject ids in order of first appearance """
        seen = collections.OrderedDict()  # type: Dict[str, None]
        for entry in self.entries:
            seen.setdefault(entry.subject, None)
        return list(seen)

    def entries_for(self, subject):
        # type: (str) -> List[ManifestEntry]
        return [e for e in self.entries if e.subject == subject]

    def load_image(self, entry):
        # type: (ManifestEntry) -> ImageGrid
        return read_image(self.resolve(entry.image))

    def load_landmarks(self, entry):
        # type: (ManifestEntry) -> Optional[ShapeInstance]
        if entry.landmarks is None:
            return None
        return read_landmarks(self.resolve(entry.landmarks))

    def check_paths(self):
        # type: () -> None
        """ Raise :class:`AnnotationError` for any missing file """
        for entry in self.entries:
            for path in (entry.image, entry.landmarks):
                if path is not None and not os.path.exists(self.resolve(path)):
                    raise AnnotationError('%s: missing file %s'
                                          % (entry.subject, path))

    def __len__(self):
        # type: () -> int
        return len(self.entries)

    def __iter__(self):
        # type: () -> Iterable[ManifestEntry]
        return iter(self.entries)

    @classmethod
    def from_paragraphs(cls, paragraphs, base_dir='.', name='<manifest>',
                        strict=False):
        # type: (Iterable[Paragraph], str, str, bool) -> DatasetManifest
        entries = []
        for n, para in enumerate(paragraphs, 1):
            missing = [f for f in ('Subject', 'Yaw', 'Image') if f not in para]
            if missing:
                complain('%s: paragraph %d lacks %s; skipped'
                         % (name, n, ', '.join(missing)), strict,
                         AnnotationError)
                continue
            try:
                entries.append(ManifestEntry(
                    para['Subject'], para['Yaw'], para['Image'],
                    para.get('Landmarks'), para.get('Session')))
            except AnnotationError as e:
                raise AnnotationError('%s: paragraph %d: %s' % (name, n, e))
        if not entries:
            raise AnnotationError('%s: no entries' % name)
        return cls(entries, base_dir)

    @classmethod
    def load(cls, path, strict=False, check_paths=True):
        # type: (str, bool, bool) -> DatasetManifest
        """ Read a manifest file and validate its entries """
        manifest = cls.from_paragraphs(
            read_paragraphs(path, strict=strict),
            os.path.dirname(os.path.abspath(path)), str(path), strict)
        if check_paths:
            manifest.check_paths()
        return manifest

    def to_paragraphs(self):
        # type: () -> List[Paragraph]
        paragraphs = []
        for entry in self.entries:
            para = Paragraph()
            para['Subject'] = entry.subject
            para['Yaw'] = str(entry.yaw)
            para['Image'] = entry.image
            if entry.landmarks is not None:
                para['Landmarks'] = entry.landmarks
            if entry.session is not None:
                para['Session'] = entry.session
            paragraphs.append(para)
        return paragraphs

    def dump(self, fileobj):
        # type: (TextIO) -> None
        dump_paragraphs(self.to_paragraphs(), fileobj)
