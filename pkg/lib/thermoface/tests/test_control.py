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

"""Tests for thermoface.control."""

import io
import os
import shutil
import tempfile
import unittest

from thermoface._util import DataError
from thermoface.control import (
    Paragraph,
    ParseError,
    decode_text,
    dump_paragraphs,
    iter_paragraphs,
    parse_paragraphs,
    read_paragraphs,
    require_field,
)


EXAMPLE = """# dataset of two images
Subject: s01
Yaw: 0
Image: images/s01_yaw00p0.tfr

subject: s02
YAW: 22.5
Image: images/s02_yaw22p5.tfr
Notes:
 first line
 .
 third line
"""


class ParagraphTests(unittest.TestCase):

    def test_case_insensitive(self):
        # type: () -> None
        para = Paragraph([('Subject', 's01'), ('Yaw', 10)])
        self.assertEqual('s01', para['subject'])
        self.assertEqual('10', para['YAW'])
        self.assertIn('SUBJECT', para)
        self.assertNotIn(3, para)
        para['SUBJECT'] = 's02'
        self.assertEqual(['Subject', 'Yaw'], list(para))
        del para['yaw']
        self.assertEqual(1, len(para))

    def test_dump(self):
        # type: () -> None
        para = Paragraph([('Subject', 's01'), ('Notes', 'a\n\nb'),
                          ('Empty', '')])
        self.assertEqual('Subject: s01\nNotes: a\n .\n b\nEmpty:\n',
                         para.dump())
        out = io.StringIO()
        self.assertIsNone(para.dump(out))
        self.assertEqual(para.dump(), out.getvalue())


class ParseTests(unittest.TestCase):

    def test_example(self):
        # type: () -> None
        paras = parse_paragraphs(EXAMPLE)
        self.assertEqual(2, len(paras))
        self.assertEqual('s01', paras[0]['Subject'])
        self.assertEqual('22.5', paras[1]['Yaw'])
        self.assertEqual(['subject', 'YAW', 'Image', 'Notes'],
                         list(paras[1]))
        self.assertEqual('first line\n\nthird line', paras[1]['Notes'])

    def test_bytes_and_lines(self):
        # type: () -> None
        from_bytes = parse_paragraphs(EXAMPLE.encode('utf-8'))
        from_lines = parse_paragraphs(io.StringIO(EXAMPLE))
        self.assertEqual([dict(p) for p in from_bytes],
                         [dict(p) for p in from_lines])

    def test_round_trip(self):
        # type: () -> None
        paras = parse_paragraphs(EXAMPLE)
        out = io.StringIO()
        dump_paragraphs(paras, out)
        again = parse_paragraphs(out.getvalue())
        self.assertEqual([dict(p) for p in paras], [dict(p) for p in again])

    def test_malformed_lines(self):
        # type: () -> None
        text = 'Subject: s01\ngarbage line\n'
        with self.assertLogs('thermoface', 'WARNING'):
            paras = parse_paragraphs(text)
        self.assertEqual([{'Subject': 's01'}], [dict(p) for p in paras])
        with self.assertRaises(ParseError) as cm:
            parse_paragraphs(text, name='m', strict=True)
        self.assertEqual(2, cm.exception.lineno)
        self.assertEqual("m:2: cannot parse line 'garbage line'",
                         str(cm.exception))
        self.assertRaises(ParseError, parse_paragraphs, ' orphan\n',
                          strict=True)

    def test_duplicate_field(self):
        # type: () -> None
        text = 'Yaw: 0\nYaw: 10\n'
        with self.assertLogs('thermoface', 'WARNING'):
            paras = parse_paragraphs(text)
        self.assertEqual('10', paras[0]['Yaw'])
        self.assertRaises(ParseError, parse_paragraphs, text, strict=True)

    def test_blank_lines(self):
        # type: () -> None
        self.assertEqual([], list(iter_paragraphs('\n\n  \n')))
        paras = parse_paragraphs('\n\nA: 1\n\n\n\nB: 2\n\n')
        self.assertEqual(2, len(paras))


class EncodingTests(unittest.TestCase):

    def test_utf8(self):
        # type: () -> None
        self.assertEqual(u'caf\xe9', decode_text(u'caf\xe9'.encode('utf-8')))
        self.assertEqual('abc', decode_text('abc'))

    def test_fallback(self):
        # type: () -> None
        text = (u"Notes: Temp\xe9rature mesur\xe9e \xe0 l'entr\xe9e du "
                u"b\xe2timent principal, r\xe9f\xe9rence de la cam\xe9ra "
                u"thermique \xe9talonn\xe9e le matin\n")
        with self.assertLogs('thermoface', 'WARNING'):
            paras = parse_paragraphs(text.encode('latin-1'))
        self.assertIn(u'\xe9talonn\xe9e', paras[0]['Notes'])


class FileTests(unittest.TestCase):

    def setUp(self):
        # type: () -> None
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        # type: () -> None
        shutil.rmtree(self.tmpdir)

    def test_read(self):
        # type: () -> None
        path = os.path.join(self.tmpdir, 'manifest')
        with open(path, 'w') as fh:
            fh.write(EXAMPLE)
        self.assertEqual(2, len(read_paragraphs(path)))

    def test_require_field(self):
        # type: () -> None
        para = Paragraph([('Yaw', '22.5'), ('Bad', 'x')])
        self.assertEqual(22.5, require_field(para, 'yaw', conv=float))
        self.assertEqual('x', require_field(para, 'Bad'))
        self.assertRaises(DataError, require_field, para, 'Image')
        self.assertRaises(DataError, require_field, para, 'Bad', conv=float)


if __name__ == '__main__':
    unittest.main()
