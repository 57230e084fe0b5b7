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

"""Tests for thermoface.config."""

import io
import math
import os
import shutil
import tempfile
import unittest

from thermoface.config import (
    ConfigError,
    PipelineConfig,
    ProtocolConfig,
    SECTIONS,
    parse_sections,
)
from thermoface.ensemble import PosePartition


EXAMPLE = """# thresholds from a calibrated camera
[segment]
t_low = 0.35
t_high = inf

[enhance]
k = 10
conductance = perona_malik
conductance-update = per_step

[vesselness]
scales = 2 3 4
c = 0.2

[ensemble]
ranges = 0-50 40-90
clusters = 2

[protocol]
self_match = yes

[pipeline]
jobs = 4

[synth]
subjects = 4
yaws = 0 45 90
"""


class ParseTests(unittest.TestCase):

    def test_example(self):
        # type: () -> None
        config = PipelineConfig.loads(EXAMPLE)
        self.assertEqual(0.35, config.segmentation.t_low)
        self.assertTrue(math.isinf(config.segmentation.t_high))
        self.assertEqual(10.0, config.diffusion.k)
        self.assertEqual('perona_malik', config.diffusion.conductance)
        self.assertEqual('per_step', config.diffusion.conductance_update)
        self.assertEqual(20, config.diffusion.iterations)
        self.assertEqual((2.0, 3.0, 4.0), config.vesselness.scales)
        self.assertEqual(0.2, config.vesselness.c)
        self.assertEqual(PosePartition([(0, 50), (40, 90)]),
                         config.ensemble.partition)
        self.assertEqual(2, config.ensemble.clusters_per_range)
        self.assertEqual(ProtocolConfig(0, True), config.protocol)
        self.assertEqual(4, config.jobs)
        self.assertEqual(4, config.synth.subjects)
        self.assertEqual((0.0, 45.0, 90.0), config.synth.yaws)

    def test_defaults(self):
        # type: () -> None
        config = PipelineConfig.loads('')
        self.assertEqual(PipelineConfig(), config)
        self.assertIsNone(config.segmentation.t_low)
        self.assertIsNone(config.vesselness.c)
        self.assertEqual(6, config.ensemble.clusters_per_range)
        self.assertEqual(1, config.jobs)

    def test_conductance_names(self):
        # type: () -> None
        self.assertEqual('paper', PipelineConfig().diffusion.conductance)
        for name in ('paper', 'perona_malik'):
            config = PipelineConfig.loads('[enhance]\nconductance = %s\n'
                                          % name)
            self.assertEqual(name, config.diffusion.conductance)
        self.assertRaises(ConfigError, PipelineConfig.loads,
                          '[enhance]\nconductance = exponential\n')

    def test_sentinels(self):
        # type: () -> None
        config = PipelineConfig.loads('[segment]\nt_low = OTSU\n'
                                      '[vesselness]\nc = auto\n')
        self.assertIsNone(config.segmentation.t_low)
        self.assertIsNone(config.vesselness.c)

    def test_round_trip(self):
        # type: () -> None
        config = PipelineConfig.loads(EXAMPLE)
        text = config.dump()
        self.assertEqual(config, PipelineConfig.loads(text, strict=True))
        out = io.StringIO()
        self.assertIsNone(config.dump(out))
        self.assertEqual(text, out.getvalue())

    def test_every_key_dumped(self):
        # type: () -> None
        sections = PipelineConfig().sections()
        self.assertEqual(list(SECTIONS), list(sections))
        for name, keys in SECTIONS.items():
            self.assertEqual(list(keys), list(sections[name]))


class ErrorTests(unittest.TestCase):

    def test_unknown_names(self):
        # type: () -> None
        for text in ('[colour]\nhue = 3\n', '[segment]\nhue = 3\n',
                     'jobs = 2\n', '[segment]\nnot an assignment\n',
                     '[fit]\ntol = 1e-5\ntol = 1e-4\n'):
            with self.assertLogs('thermoface', 'WARNING'):
                PipelineConfig.loads(text)
            self.assertRaises(ConfigError, PipelineConfig.loads, text,
                              strict=True)

    def test_duplicate_last_wins(self):
        # type: () -> None
        with self.assertLogs('thermoface', 'WARNING'):
            config = PipelineConfig.loads('[fit]\ntol = 1e-5\ntol = 1e-4\n')
        self.assertEqual(1e-4, config.fit.tol)

    def test_bad_values(self):
        # type: () -> None
        for text in ('[enhance]\niterations = many\n',
                     '[protocol]\nself_match = perhaps\n',
                     '[ensemble]\nranges = 0:90\n',
                     '[enhance]\nstep = 0.5\n',
                     '[enhance]\nconductance = linear\n',
                     '[segment]\nt_low = 0.8\nt_high = 0.2\n',
                     '[ensemble]\nranges = 0-40 50-90\n',
                     '[pipeline]\njobs = 0\n',
                     '[synth]\nimage_size = 8\n'):
            with self.assertRaises(ConfigError) as cm:
                PipelineConfig.loads(text, name='bad.conf')
            self.assertTrue(str(cm.exception).startswith('bad.conf'))

    def test_parse_sections(self):
        # type: () -> None
        parsed = parse_sections(['[Fit]', 'MAX-ITER = 7'])
        self.assertEqual({'fit': {'max_iter': 7}}, parsed)


class FileTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        shutil.rmtree(self.tmpdir)

    def test_load(self):
        # type: () -> None
        path = os.path.join(self.tmpdir, 'pipeline.conf')
        with open(path, 'w') as fh:
            fh.write(EXAMPLE)
        self.assertEqual(PipelineConfig.loads(EXAMPLE),
                         PipelineConfig.load(path))


if __name__ == '__main__':
    unittest.main()
