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

"""Tests for thermoface.synthetic."""

import csv
import io
import os
import shutil
import tempfile
import unittest

import numpy as np

from thermoface._util import ParameterError
from thermoface.geometry import default_mesh, raster_mask, rasterize
from thermoface.manifest import AnnotationError, DatasetManifest
from thermoface.matching import match_one_to_gallery
from thermoface.synthetic import (
    BACKGROUND_LEVEL,
    TRUTH_FIELDS,
    SynthSpec,
    frontal_geometry,
    generate_synthetic_dataset,
    image_name,
    pose_shape,
    render_face,
    subject_id,
)
from thermoface.vesselness import VesselnessParams, vesselness_multiscale


class SpecTests(unittest.TestCase):

    def test_validation(self):
        # type: () -> None
        self.assertRaises(ParameterError, SynthSpec, subjects=0)
        self.assertRaises(ParameterError, SynthSpec, yaws=())
        self.assertRaises(AnnotationError, SynthSpec, yaws=(0, 100))
        self.assertRaises(ParameterError, SynthSpec, noise=-1)
        self.assertRaises(ParameterError, SynthSpec, image_size=16)
        self.assertRaises(ParameterError, SynthSpec, face_scale=0.99)
        self.assertEqual(SynthSpec(), SynthSpec(yaws=[0, 22.5, 45, 67.5, 90]))

    def test_names(self):
        # type: () -> None
        self.assertEqual('s01', subject_id(0))
        self.assertEqual('s01_yaw22p5', image_name(0, 22.5))
        self.assertEqual('s10_yaw90p0_1', image_name(9, 90, 1))


class RenderTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.spec = SynthSpec(subjects=3, noise=0.0, image_size=64)

    def test_deterministic(self):
        # type: () -> None
        a, shape_a = render_face(self.spec, 1, 45)
        b, shape_b = render_face(self.spec, 1, 45)
        self.assertEqual(a, b)
        self.assertEqual(shape_a, shape_b)
        c, _ = render_face(SynthSpec(subjects=3, noise=0.0, image_size=64,
                                     seed=5), 1, 45)
        self.assertNotEqual(a, c)

    def test_sessions(self):
        # type: () -> None
        a, _ = render_face(self.spec, 0, 0, session=0)
        b, _ = render_face(self.spec, 0, 0, session=1)
        self.assertEqual(a, b)
        noisy = SynthSpec(subjects=3, noise=0.01, image_size=64)
        a, _ = render_face(noisy, 0, 0, session=0)
        b, _ = render_face(noisy, 0, 0, session=1)
        self.assertNotEqual(a, b)

    def test_subjects_differ(self):
        # type: () -> None
        a, _ = render_face(self.spec, 0, 0)
        b, _ = render_face(self.spec, 1, 0)
        self.assertNotEqual(a, b)

    def test_pose(self):
        # type: () -> None
        geometry = frontal_geometry(self.spec)
        frontal = pose_shape(geometry, 0)
        np.testing.assert_allclose(geometry.shape.points, frontal.points)
        width = []
        for yaw in (0, 45, 90):
            pts = pose_shape(geometry, yaw).points
            width.append(np.ptp(pts[:, 0]))
            np.testing.assert_allclose(geometry.shape.points[:, 1],
                                       pts[:, 1])
        self.assertGreater(width[0], width[1])
        self.assertGreater(width[1], width[2])

    def test_background(self):
        # type: () -> None
        img, shape = render_face(self.spec, 2, 67.5)
        inside = raster_mask(rasterize(default_mesh(), shape,
                                       (64, 64))).bits
        self.assertTrue(np.all(img.data[~inside] == BACKGROUND_LEVEL))
        self.assertGreater(img.data[inside].mean(), 0.5)


class DatasetTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        shutil.rmtree(self.tmpdir)

    def test_generate(self):
        # type: () -> None
        spec = SynthSpec(subjects=2, yaws=(0, 45), image_size=48,
                         sessions=2)
        manifest = generate_synthetic_dataset(spec, self.tmpdir)
        self.assertEqual(8, len(manifest))
        self.assertEqual(['s01', 's02'], manifest.subjects())
        loaded = DatasetManifest.load(os.path.join(self.tmpdir, 'manifest'))
        self.assertEqual(manifest.entries, loaded.entries)
        first = loaded.entries[0]
        self.assertEqual((48, 48), loaded.load_image(first).shape)
        self.assertEqual(58, len(loaded.load_landmarks(first)))
        with io.open(os.path.join(self.tmpdir, 'truth.csv'),
                     encoding='utf-8') as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(list(TRUTH_FIELDS), rows[0])
        self.assertEqual(9, len(rows))
        self.assertEqual(['images/s01_yaw00p0.tfr', 's01', '0', '0.0', '0'],
                         rows[1])


class IdentityTests(unittest.TestCase):

    def test_nearest_neighbour_at_equal_yaw(self):
        # type: () -> None
        spec = SynthSpec(subjects=10, noise=0.005, sessions=2)
        params = VesselnessParams(c=0.05)
        for yaw in spec.yaws:
            gallery = {}
            probes = {}
            for subject in range(spec.subjects):
                for session, target in ((0, gallery), (1, probes)):
                    img, _ = render_face(spec, subject, yaw, session)
                    target[subject] = vesselness_multiscale(img, params)
            for subject, probe in probes.items():
                ranked = match_one_to_gallery(probe, gallery)
                self.assertEqual(subject, ranked[0].gallery_id)


if __name__ == '__main__':
    unittest.main()
