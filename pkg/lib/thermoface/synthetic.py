""" Synthetic thermal face datasets

Real thermal face collections cannot be redistributed, so the test suite
and the ``thermoface synth`` command render phantoms instead.  A phantom is
built in a canonical frontal frame and then warped onto the bundled face
mesh posed at the requested yaw:

* a skin level shared by everyone, with broad warm and cool patches
  inherited from the subject's appearance family and a few weaker patches
  of the subject's own,
* facial features shared by all subjects (cool nose tip, mouth and brows,
  warm inner eye corners),
* a network of narrow warm ridges unique to the subject, the stand-in for
  the superficial blood vessels,
* a flat cool background and optional additive Gaussian noise.

Yaw is modelled as a horizontal compression of the mesh with a bulge of
the mid-line towards the turned side, so landmarks move consistently with
the image.  Every random choice is drawn from generators seeded by the
dataset seed and the subject (and, for noise, the image), which makes a
dataset reproducible bit for bit.
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
import io
import logging
import math
import os

import numpy as np
from scipy.spatial import cKDTree

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Dict,
        List,
        Optional,
        Sequence,
        Tuple,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import require, require_positive
from thermoface.geometry import (
    Mesh,
    ShapeInstance,
    build_warp,
    default_mesh,
    rasterize,
    warp_image,
    write_landmarks,
)
from thermoface.imgcore import ImageGrid
from thermoface.manifest import DatasetManifest, ManifestEntry, check_yaw
from thermoface.rasterfile import write_image


logger = logging.getLogger(__name__)


DEFAULT_YAWS = (0.0, 22.5, 45.0, 67.5, 90.0)

BACKGROUND_LEVEL = 0.1
SKIN_LEVEL = 0.7

FAMILY_PATCHES = 4
FAMILY_AMPLITUDE = 0.08
SUBJECT_PATCHES = 3
SUBJECT_AMPLITUDE = 0.02

RIDGES_PER_SUBJECT = 5
RIDGE_AMPLITUDE = (0.06, 0.1)
RIDGE_WIDTH = (3.0, 5.0)
RIDGE_LENGTH = (0.35, 0.6)
RIDGE_SPACING = 0.25

# Horizontal compression and mid-line bulge at full profile.
YAW_COMPRESSION = 0.45
YAW_BULGE = 0.2

# Shared features in units of the mesh half-width/half-height around the
# face centre: (x, y, amplitude, sigma as a fraction of the half-width).
FACIAL_FEATURES = (
    (0.0, 0.15, -0.06, 0.12),    # nose tip
    (0.0, 0.5, -0.04, 0.18),     # mouth
    (-0.4, -0.5, -0.03, 0.15),   # brows
    (0.4, -0.5, -0.03, 0.15),
    (-0.18, -0.28, 0.04, 0.07),  # inner eye corners
    (0.18, -0.28, 0.04, 0.07),
)

TRUTH_FIELDS = ('image', 'subject', 'family', 'yaw', 'session')


class SynthSpec(object):
    """ Size and randomness of a synthetic dataset.

    :ivar subjects: number of people
    :ivar yaws: yaw angles rendered for every person and session
    :ivar noise: standard deviation of the additive noise
    :ivar seed: master seed
    :ivar families: number of appearance families people are drawn from
    :ivar image_size: side of the square images
    :ivar face_scale: face height as a fraction of the image side
    :ivar sessions: renders per (person, yaw), differing only in noise
    """

    __slots__ = ('subjects', 'yaws', 'noise', 'seed', 'families',
                 'image_size', 'face_scale', 'sessions')

    def __init__(self,
                 subjects=10,         # type: int
                 yaws=DEFAULT_YAWS,   # type: Sequence[float]
                 noise=0.005,         # type: float
                 seed=0,              # type: int
                 families=3,          # type: int
                 image_size=112,      # type: int
                 face_scale=0.8,      # type: float
                 sessions=1,          # type: int
                 ):
        # type: (...) -> None
        for name, value in (('subjects', subjects), ('families', families),
                            ('sessions', sessions)):
            require(int(value) == value and value >= 1,
                    '%s must be a positive integer, got %r', name, value)
        self.subjects = int(subjects)
        self.families = int(families)
        self.sessions = int(sessions)
        yaws = tuple(float(check_yaw(y)) for y in yaws)
        require(len(yaws) >= 1, 'at least one yaw is required')
        self.yaws = yaws
        self.noise = float(noise)
        require(self.noise >= 0.0 and math.isfinite(self.noise),
                'noise must be non-negative, got %r', noise)
        require(int(seed) == seed, 'seed must be an integer, got %r', seed)
        self.seed = int(seed)
        require(int(image_size) == image_size and image_size >= 32,
                'image_size must be an integer of at least 32, got %r',
                image_size)
        self.image_size = int(image_size)
        self.face_scale = require_positive(face_scale, 'face_scale')
        require(self.face_scale <= 0.95,
                'face_scale must not exceed 0.95, got %r', face_scale)

    def _key(self):
        # type: () -> Tuple
        return (self.subjects, self.yaws, self.noise, self.seed,
                self.families, self.image_size, self.face_scale,
                self.sessions)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, SynthSpec):
            return NotImplemented
        return self._key() == other._key()

    def __repr__(self):
        # type: () -> str
        return 'SynthSpec(subjects=%r, yaws=%r, noise=%r, seed=%r, ' \
            'families=%r, image_size=%r, face_scale=%r, sessions=%r)' \
            % self._key()


Geometry = collections.namedtuple('Geometry',
                                  ['shape', 'centre', 'half_size'])


def subject_id(index):
    # type: (int) -> str
    return 's%02d' % (index + 1)


def family_of(spec, index):
    # type: (SynthSpec, int) -> int
    return index % spec.families


def frontal_geometry(spec, mesh=None):
    # type: (SynthSpec, Optional[Mesh]) -> Geometry
    """ The mesh scaled and centred in the canonical frontal image """
    if mesh is None:
        mesh = default_mesh()
    vertices = mesh.vertices
    low = vertices.min(axis=0)
    high = vertices.max(axis=0)
    centre = 0.5 * (low + high)
    scale = spec.face_scale * spec.image_size / (high[1] - low[1])
    image_centre = np.array([spec.image_size, spec.image_size]) / 2.0
    points = (vertices - centre) * scale + image_centre
    half_size = 0.5 * (high - low) * scale
    return Geometry(ShapeInstance(points), image_centre, half_size)


def pose_shape(geometry, yaw):
    # type: (Geometry, float) -> ShapeInstance
    """ Frontal landmarks seen at ``yaw`` degrees """
    s = math.sin(math.radians(check_yaw(yaw)))
    width = geometry.half_size[0]
    rel = geometry.shape.points - geometry.centre
    u = np.clip(rel[:, 0] / width, -1.0, 1.0)
    x = rel[:, 0] * (1.0 - YAW_COMPRESSION * s) \
        + YAW_BULGE * s * (1.0 - u * u) * width
    return ShapeInstance(np.column_stack((x, rel[:, 1])) + geometry.centre)


def _rng(spec, *keys):
    # type: (SynthSpec, int) -> np.random.Generator
    return np.random.default_rng([spec.seed] + [int(k) for k in keys])


def _add_patches(canvas, grid, rng, count, amplitude, geometry):
    # type: (np.ndarray, Tuple[np.ndarray, np.ndarray], np.random.Generator, int, float, Geometry) -> None
    xs, ys = grid
    hw, hh = geometry.half_size
    for _ in range(count):
        cx = geometry.centre[0] + rng.uniform(-0.7, 0.7) * hw
        cy = geometry.centre[1] + rng.uniform(-0.7, 0.7) * hh
        sigma = rng.uniform(12.0, 20.0) * hw / 35.0
        amp = amplitude * rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.0)
        canvas += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2)
                               / (2.0 * sigma * sigma))


def _ridge_curve(rng, geometry):
    # type: (np.random.Generator, Geometry) -> np.ndarray
    """ Densely sampled gently bent segment inside the face """
    hw, hh = geometry.half_size
    start = geometry.centre + rng.uniform(-0.55, 0.55, 2) * (hw, hh)
    angle = rng.uniform(0.0, math.pi)
    direction = np.array([math.cos(angle), math.sin(angle)])
    normal = np.array([-direction[1], direction[0]])
    length = rng.uniform(*RIDGE_LENGTH) * 2.0 * hw
    bend = rng.uniform(-0.3, 0.3) / length
    t = np.arange(0.0, length, RIDGE_SPACING) - 0.5 * length
    return start + np.outer(t, direction) + np.outer(bend * t * t, normal)


def ridge_network(spec, subject, geometry):
    # type: (SynthSpec, int, Geometry) -> List[Tuple[np.ndarray, float, float]]
    """ ``(points, amplitude, width)`` of every ridge of a subject """
    rng = _rng(spec, 2, subject)
    ridges = []
    for _ in range(RIDGES_PER_SUBJECT):
        curve = _ridge_curve(rng, geometry)
        ridges.append((curve, rng.uniform(*RIDGE_AMPLITUDE),
                       rng.uniform(*RIDGE_WIDTH)))
    return ridges


def subject_texture(spec, subject, geometry=None):
    # type: (SynthSpec, int, Optional[Geometry]) -> np.ndarray
    """ Canonical frontal temperature map of one subject (no noise) """
    if geometry is None:
        geometry = frontal_geometry(spec)
    n = spec.image_size
    ys, xs = np.mgrid[0:n, 0:n].astype(np.float64)
    canvas = np.full((n, n), SKIN_LEVEL)
    _add_patches(canvas, (xs, ys), _rng(spec, 1, family_of(spec, subject)),
                 FAMILY_PATCHES, FAMILY_AMPLITUDE, geometry)
    _add_patches(canvas, (xs, ys), _rng(spec, 3, subject), SUBJECT_PATCHES,
                 SUBJECT_AMPLITUDE, geometry)
    hw, hh = geometry.half_size
    for fx, fy, amp, sigma in FACIAL_FEATURES:
        cx = geometry.centre[0] + fx * hw
        cy = geometry.centre[1] + fy * hh
        sigma *= hw
        canvas += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2)
                               / (2.0 * sigma * sigma))
    pixels = np.column_stack((xs.ravel(), ys.ravel()))
    for curve, amp, width in ridge_network(spec, subject, geometry):
        # A profile of this width peaks at vesselness scale ``width``.
        sigma = width / math.sqrt(2.0)
        dist, _ = cKDTree(curve).query(pixels, distance_upper_bound=4 * width)
        profile = np.exp(-np.square(dist) / (2.0 * sigma * sigma))
        canvas += amp * profile.reshape(n, n)
    return canvas


def render_face(spec, subject, yaw, session=0, mesh=None, texture=None):
    # type: (SynthSpec, int, float, int, Optional[Mesh], Optional[np.ndarray]) -> Tuple[ImageGrid, ShapeInstance]
    """ One phantom image and its landmarks """
    if mesh is None:
        mesh = default_mesh()
    geometry = frontal_geometry(spec, mesh)
    if texture is None:
        texture = subject_texture(spec, subject, geometry)
    posed = pose_shape(geometry, yaw)
    size = (spec.image_size, spec.image_size)
    face = warp_image(ImageGrid(texture),
                      build_warp(mesh, posed, geometry.shape), size).data
    inside = rasterize(mesh, posed, size).triangle >= 0
    img = np.where(inside, face, BACKGROUND_LEVEL)
    if spec.noise > 0:
        rng = _rng(spec, 4, subject, int(round(yaw * 100)), session)
        img = img + rng.normal(0.0, spec.noise, img.shape)
    return ImageGrid(img), posed


def image_name(subject, yaw, session=0):
    # type: (int, float, int) -> str
    base = '%s_yaw%04.1f' % (subject_id(subject), yaw)
    if session:
        base += '_%d' % session
    return base.replace('.', 'p')


def generate_synthetic_dataset(spec, directory, mesh=None):
    # type: (SynthSpec, str, Optional[Mesh]) -> DatasetManifest
    """ Render a dataset into ``directory``.

    Writes ``images/*.tfr``, ``landmarks/*.pts``, a ``manifest`` listing
    every image with its landmarks, and ``truth.csv`` with the identity,
    appearance family and yaw of each image.
    """
    if mesh is None:
        mesh = default_mesh()
    for sub in ('images', 'landmarks'):
        path = os.path.join(directory, sub)
        if not os.path.isdir(path):
            os.makedirs(path)
    geometry = frontal_geometry(spec, mesh)
    entries = []
    truth = []
    for subject in range(spec.subjects):
        texture = subject_texture(spec, subject, geometry)
        for session in range(spec.sessions):
            for yaw in spec.yaws:
                img, shape = render_face(spec, subject, yaw, session, mesh,
                                         texture)
                name = image_name(subject, yaw, session)
                image_path = 'images/%s.tfr' % name
                landmark_path = 'landmarks/%s.pts' % name
                write_image(img, os.path.join(directory, image_path))
                write_landmarks(shape, os.path.join(directory,
                                                    landmark_path))
                entries.append(ManifestEntry(
                    subject_id(subject), yaw, image_path, landmark_path,
                    'session%d' % session))
                truth.append((image_path, subject_id(subject),
                              family_of(spec, subject), yaw, session))
        logger.debug('rendered subject %s', subject_id(subject))
    manifest = DatasetManifest(entries, os.path.abspath(directory))
    with io.open(os.path.join(directory, 'manifest'), 'w',
                 encoding='utf-8') as fh:
        manifest.dump(fh)
    with io.open(os.path.join(directory, 'truth.csv'), 'w',
                 encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(TRUTH_FIELDS)
        for row in truth:
            writer.writerow(row)
    logger.info('wrote %d synthetic images of %d subjects to %s',
                len(entries), spec.subjects, directory)
    return manifest
