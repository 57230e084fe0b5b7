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

"""Tests for thermoface.segment."""

import math
import unittest

import numpy as np

from thermoface._util import ParameterError
from thermoface.imgcore import BinaryMask, ImageGrid
from thermoface.segment import (
    SegmentationError,
    SegmentationParams,
    circular_structuring_element,
    dilate,
    erode,
    moment_ellipse,
    morph_close,
    morph_open,
    otsu_threshold,
    segment_face,
    threshold_band,
)


def ellipse_image(width=120, height=100, a=40.0, b=30.0, face=0.8,
                  background=0.1):
    # type: (int, int, float, float, float, float) -> np.ndarray
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    inside = ((xs - width / 2.0) / a) ** 2 + ((ys - height / 2.0) / b) ** 2 <= 1
    return np.where(inside, face, background)


def brute_erode(m, e):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """ Erosion by definition; pixels outside the grid count as set """
    h, w = m.shape
    r = e.shape[0] // 2
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            keep = True
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if not e[dy + r, dx + r]:
                        continue
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and not m[yy, xx]:
                        keep = False
            out[y, x] = keep
    return out


def brute_dilate(m, e):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """ Dilation by definition; pixels outside the grid count as unset """
    h, w = m.shape
    r = e.shape[0] // 2
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            hit = False
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if not e[dy + r, dx + r]:
                        continue
                    yy, xx = y - dy, x - dx
                    if 0 <= yy < h and 0 <= xx < w and m[yy, xx]:
                        hit = True
            out[y, x] = hit
    return out


class ThresholdTests(unittest.TestCase):

    def test_band_examples(self):
        # type: () -> None
        img = ImageGrid([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.7, 0.8, 0.9]])
        mask = threshold_band(img, SegmentationParams(0.3, 0.6))
        self.assertEqual(4, mask.count())
        self.assertEqual(9, threshold_band(
            img, SegmentationParams(0.0, 1.0)).count())
        self.assertEqual(0, threshold_band(
            img, SegmentationParams(0.95, 2.0)).count())

    def test_otsu_default(self):
        # type: () -> None
        img = ellipse_image()
        t = otsu_threshold(img)
        self.assertTrue(0.1 <= t < 0.8)
        self.assertEqual(0.5, otsu_threshold(np.full((4, 4), 0.5)))
        mask = threshold_band(ImageGrid(img), SegmentationParams())
        self.assertEqual(int(np.count_nonzero(img == 0.8)), mask.count())

    def test_params_validation(self):
        # type: () -> None
        self.assertRaises(ParameterError, SegmentationParams, 0.6, 0.3)
        self.assertRaises(ParameterError, SegmentationParams, 0.1, 0.5, 0.0)
        self.assertRaises(ParameterError, SegmentationParams, 0.1, 0.5, 1.5)
        self.assertEqual(SegmentationParams(), SegmentationParams())


class EllipseTests(unittest.TestCase):

    def test_filled_ellipse(self):
        # type: () -> None
        mask = BinaryMask(ellipse_image(a=40.0, b=25.0) > 0.5)
        e = moment_ellipse(mask)
        self.assertAlmostEqual(60.0, e.cx, delta=0.01)
        self.assertAlmostEqual(50.0, e.cy, delta=0.01)
        self.assertAlmostEqual(40.0, e.semi_major, delta=0.5)
        self.assertAlmostEqual(25.0, e.semi_minor, delta=0.5)
        self.assertAlmostEqual(0.0, math.sin(e.angle), delta=0.01)
        self.assertAlmostEqual(mask.count(), e.area, delta=0.02 * e.area)

    def test_empty(self):
        # type: () -> None
        self.assertRaises(SegmentationError, moment_ellipse,
                          BinaryMask(np.zeros((4, 4))))


class MorphologyTests(unittest.TestCase):

    def test_elements(self):
        # type: () -> None
        plus = circular_structuring_element(1)
        self.assertEqual(5, plus.count())
        self.assertEqual((3, 3), plus.shape)
        self.assertFalse(plus.bits[0, 0])
        big = circular_structuring_element(20)
        self.assertAlmostEqual(1.0, big.count() / (math.pi * 400), delta=0.01)
        for r in (1, 1.5, 2.7, 6):
            bits = circular_structuring_element(r).bits
            self.assertTrue(np.array_equal(bits, np.rot90(bits)))
        self.assertRaises(ParameterError, circular_structuring_element, 0.5)

    def test_speckle_and_hole(self):
        # type: () -> None
        elem = circular_structuring_element(1)
        speck = np.zeros((9, 9), dtype=bool)
        speck[4, 4] = True
        self.assertEqual(0, morph_open(BinaryMask(speck), elem).count())
        hole = ~speck
        self.assertEqual(81, morph_close(BinaryMask(hole), elem).count())

    def test_element_too_large(self):
        # type: () -> None
        self.assertRaises(ParameterError, erode, BinaryMask(np.ones((3, 3))),
                          circular_structuring_element(2))

    def test_against_definition(self):
        # type: () -> None
        rng = np.random.default_rng(7)
        for trial in range(200):
            elem = circular_structuring_element(1 + trial % 2)
            e = elem.bits
            m = rng.random((12, 12)) < 0.55
            mask = BinaryMask(m)
            opened = morph_open(mask, elem).bits
            closed = morph_close(mask, elem).bits
            self.assertTrue(np.array_equal(
                erode(mask, elem).bits, brute_erode(m, e)))
            self.assertTrue(np.array_equal(
                dilate(mask, elem).bits, brute_dilate(m, e)))
            self.assertTrue(np.array_equal(
                opened, brute_dilate(brute_erode(m, e), e)))
            self.assertTrue(np.array_equal(
                closed, brute_erode(brute_dilate(m, e), e)))
            self.assertFalse(np.any(opened & ~m))
            self.assertFalse(np.any(m & ~closed))

    def test_idempotence(self):
        # type: () -> None
        rng = np.random.default_rng(11)
        for trial in range(200):
            r = 1 + trial % 2
            elem = circular_structuring_element(r)
            margin = 2 * r + 1
            m = np.zeros((16 + 2 * margin, 16 + 2 * margin), dtype=bool)
            m[margin:-margin, margin:-margin] = rng.random((16, 16)) < 0.6
            opened = morph_open(BinaryMask(m), elem)
            closed = morph_close(BinaryMask(m), elem)
            self.assertEqual(opened, morph_open(opened, elem))
            self.assertEqual(closed, morph_close(closed, elem))


class SegmentFaceTests(unittest.TestCase):

    def test_ellipse(self):
        # type: () -> None
        img = ellipse_image()
        mask, segmented = segment_face(ImageGrid(img),
                                       SegmentationParams(0.5, 1.0))
        truth = img > 0.5
        agreement = np.mean(mask.bits == truth)
        self.assertGreaterEqual(agreement, 0.99)
        self.assertTrue(np.all(segmented.data[~mask.bits] == 0.0))
        self.assertTrue(np.all(segmented.data[mask.bits] == img[mask.bits]))

    def test_speckles_removed(self):
        # type: () -> None
        img = ellipse_image()
        specks = [(5, 5), (90, 10), (8, 110), (95, 115)]
        for y, x in specks:
            img[y, x] = 0.8
        mask, _ = segment_face(ImageGrid(img), SegmentationParams(0.5, 1.0))
        for y, x in specks:
            self.assertFalse(mask.bits[y, x])

    def test_default_params(self):
        # type: () -> None
        mask, _ = segment_face(ImageGrid(ellipse_image()))
        self.assertGreaterEqual(np.mean(mask.bits == (ellipse_image() > 0.5)),
                                0.99)

    def test_failure(self):
        # type: () -> None
        self.assertRaises(SegmentationError, segment_face,
                          ImageGrid.filled(30, 30, 0.1),
                          SegmentationParams(0.5, 1.0))


if __name__ == '__main__':
    unittest.main()
