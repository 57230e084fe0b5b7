#! /usr/bin/python

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

"""Tests for thermoface.manifest."""

import io
import os
import shutil
import tempfile
import unittest

import numpy as np

from thermoface.control import parse_paragraphs
from thermoface.geometry import ShapeInstance, write_landmarks
from thermoface.imgcore import ImageGrid
from thermoface.manifest import (
    AnnotationError,
    DatasetManifest,
    ManifestEntry,
    check_yaw,
)
from thermoface.rasterfile import write_image


MANIFEST = """Subject: s01
Yaw: 0
Image: images/a.tfr
Landmarks: landmarks/a.pts

Subject: s02
Yaw: 45
Image: images/b.tfr
Session: 2

Subject: s01
Yaw: 90
Image: images/c.tfr
"""


class YawTests(unittest.TestCase):

    def test_range(self):
        # type: () -> None
        self.assertEqual(0.0, check_yaw('0'))
        self.assertEqual(90.0, check_yaw(90))
        self.assertEqual(22.5, check_yaw(22.5))
        for bad in (-0.5, 90.5, float('nan'), 'left', None):
            self.assertRaises(AnnotationError, check_yaw, bad)

    def test_entry(self):
        # type: () -> None
        entry = ManifestEntry('s01', '22.5', 'a.tfr')
        self.assertEqual(22.5, entry.yaw)
        self.assertIsNone(entry.landmarks)
        self.assertRaises(AnnotationError, ManifestEntry, '', 0, 'a.tfr')
        self.assertRaises(AnnotationError, ManifestEntry, 's01', 95, 'a.tfr')


class ManifestTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        shutil.rmtree(self.tmpdir)

    def write_dataset(self):
        # type: () -> str
        os.mkdir(os.path.join(self.tmpdir, 'images'))
        os.mkdir(os.path.join(self.tmpdir, 'landmarks'))
        for name in 'abc':
            write_image(ImageGrid(np.full((4, 5), 0.25)),
                        os.path.join(self.tmpdir, 'images', name + '.tfr'))
        write_landmarks(ShapeInstance([[1, 2], [3, 4], [5, 1]]),
                        os.path.join(self.tmpdir, 'landmarks', 'a.pts'))
        path = os.path.join(self.tmpdir, 'manifest')
        with open(path, 'w') as fh:
            fh.write(MANIFEST)
        return path

    def test_from_paragraphs(self):
        # type: () -> None
        manifest = DatasetManifest.from_paragraphs(parse_paragraphs(MANIFEST))
        self.assertEqual(3, len(manifest))
        self.assertEqual(['s01', 's02'], manifest.subjects())
        self.assertEqual([0.0, 90.0],
                         [e.yaw for e in manifest.entries_for('s01')])
        self.assertEqual('2', manifest.entries[1].session)
        self.assertEqual(os.path.join('.', 'images/a.tfr'),
                         manifest.resolve('images/a.tfr'))
        self.assertEqual('/abs/x.tfr', manifest.resolve('/abs/x.tfr'))

    def test_incomplete_paragraph(self):
        # type: () -> None
        text = MANIFEST + '\nSubject: s03\nYaw: 10\n'
        with self.assertLogs('thermoface', 'WARNING'):
            manifest = DatasetManifest.from_paragraphs(
                parse_paragraphs(text))
        self.assertEqual(3, len(manifest))
        self.assertRaises(AnnotationError, DatasetManifest.from_paragraphs,
                          parse_paragraphs(text), strict=True)

    def test_bad_yaw(self):
        # type: () -> None
        text = 'Subject: s01\nYaw: 120\nImage: a.tfr\n'
        with self.assertRaises(AnnotationError) as cm:
            DatasetManifest.from_paragraphs(parse_paragraphs(text))
        self.assertIn('paragraph 1', str(cm.exception))

    def test_empty(self):
        # type: () -> None
        self.assertRaises(AnnotationError, DatasetManifest.from_paragraphs,
                          [])

    def test_load(self):
        # type: () -> None
        path = self.write_dataset()
        manifest = DatasetManifest.load(path)
        self.assertEqual(os.path.abspath(self.tmpdir), manifest.base_dir)
        first = manifest.entries[0]
        self.assertEqual((4, 5), manifest.load_image(first).shape)
        self.assertEqual(3, len(manifest.load_landmarks(first)))
        self.assertIsNone(manifest.load_landmarks(manifest.entries[1]))

    def test_missing_file(self):
        # type: () -> None
        path = self.write_dataset()
        os.unlink(os.path.join(self.tmpdir, 'images', 'c.tfr'))
        self.assertRaises(AnnotationError, DatasetManifest.load, path)
        self.assertEqual(3, len(DatasetManifest.load(path,
                                                     check_paths=False)))

    def test_dump(self):
        # type: () -> None
        manifest = DatasetManifest.from_paragraphs(parse_paragraphs(MANIFEST))
        out = io.StringIO()
        manifest.dump(out)
        again = DatasetManifest.from_paragraphs(
            parse_paragraphs(out.getvalue()))
        self.assertEqual(manifest.entries, again.entries)


if __name__ == '__main__':
    unittest.main()
