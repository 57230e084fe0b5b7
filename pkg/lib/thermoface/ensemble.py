""" Pose and appearance specialized ensembles of AAMs

Training samples are split by yaw into overlapping pose ranges.  Within
each range, the people are clustered by the appearance of their faces, and
one AAM is trained per (range, cluster) cell.  An image is matched against
the ensemble by fitting every member and keeping the one with the lowest
fitting error.

Two faces seen in different poses are compared in an intermediate pose.
The target range is the one whose centre is nearest to the mean of the
centres of the two chosen ranges.  Both vesselness signatures are warped
into that range's reference frame, the Procrustes mean of every training
shape in the range.

Ensembles are stored as a directory holding ``ensemble.manifest`` (see
:mod:`thermoface.control`), one AAM1 file per member and one landmark file
per range reference shape.
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
import io
import logging
import os

import numpy as np
from sklearn.cluster import KMeans

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Dict,
        Iterable,
        List,
        Optional,
        Sequence,
        Tuple,
    )
    Cell = Tuple[int, int]
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import (
    DataError,
    ParameterError,
    PipelineError,
    parallel_map,
    require,
)
from thermoface.aam import (
    AamModel,
    FitDivergedError,
    FitOptions,
    FitResult,
    fit_icaam,
    frame_size_for,
    read_model,
    seed_from_mask,
    train_aam,
    train_shape_model,
    warp_to_frame,
    write_model,
)
from thermoface.control import (
    Paragraph,
    dump_paragraphs,
    read_paragraphs,
    require_field,
)
from thermoface.enhance import DiffusionParams, PreparedImage, prepare_image
from thermoface.geometry import (
    Mesh,
    ShapeInstance,
    WarpDegenerateError,
    default_mesh,
    rasterize,
    read_landmarks,
    write_landmarks,
)
from thermoface.imgcore import BinaryMask, ImageGrid, as_array
from thermoface.manifest import AnnotationError, check_yaw
from thermoface.segment import SegmentationParams
from thermoface.vesselness import (
    VesselnessMap,
    VesselnessParams,
    extract_signature,
)


logger = logging.getLogger(__name__)


DEFAULT_RANGES = ((0.0, 45.0), (22.5, 67.5), (45.0, 90.0))

ENSEMBLE_MANIFEST = 'ensemble.manifest'
ENSEMBLE_FORMAT = 'thermoface-ensemble 1'


class TrainingError(PipelineError):
    """ The training data cannot populate every ensemble cell """


class SelectionError(PipelineError):
    """ No ensemble member could be fitted to an image """


class PoseRange(collections.namedtuple('PoseRange', ['yaw_min', 'yaw_max'])):
    """ Closed yaw interval in degrees """

    __slots__ = ()

    @property
    def centre(self):
        # type: () -> float
        return 0.5 * (self.yaw_min + self.yaw_max)

    def __contains__(self, yaw):
        # type: (object) -> bool
        return self.yaw_min <= yaw <= self.yaw_max  # type: ignore

    def __str__(self):
        # type: () -> str
        return '%g-%g' % (self.yaw_min, self.yaw_max)


class PosePartition(object):
    """ Overlapping yaw ranges covering 0 to 90 degrees """

    __slots__ = ('ranges',)

    def __init__(self, ranges=DEFAULT_RANGES):
        # type: (Iterable[Tuple[float, float]]) -> None
        ranges = tuple(PoseRange(float(lo), float(hi)) for lo, hi in ranges)
        require(len(ranges) >= 1, 'at least one pose range is required')
        for r in ranges:
            require(r.yaw_min < r.yaw_max, 'empty pose range %s', r)
        ordered = sorted(ranges)
        covered = 0.0
        require(ordered[0].yaw_min <= 0.0, 'pose ranges must start at 0')
        for r in ordered:
            require(r.yaw_min <= covered,
                    'pose ranges leave a gap between %g and %g',
                    covered, r.yaw_min)
            covered = max(covered, r.yaw_max)
        require(covered >= 90.0, 'pose ranges must reach 90, end at %g',
                covered)
        self.ranges = ranges

    def __len__(self):
        # type: () -> int
        return len(self.ranges)

    def __getitem__(self, index):
        # type: (int) -> PoseRange
        return self.ranges[index]

    def ranges_for(self, yaw):
        # type: (float) -> List[int]
        """ Indices of every range containing the yaw, boundaries included """
        return [i for i, r in enumerate(self.ranges) if yaw in r]

    def nearest_range(self, yaw):
        # type: (float) -> int
        """ Index of the range whose centre is closest (ties: lowest) """
        distances = [abs(r.centre - yaw) for r in self.ranges]
        return int(np.argmin(distances))

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, PosePartition):
            return NotImplemented
        return self.ranges == other.ranges

    def __str__(self):
        # type: () -> str
        return ' '.join(str(r) for r in self.ranges)

    def __repr__(self):
        # type: () -> str
        return 'PosePartition(%r)' % (self.ranges,)


class EnsembleConfig(object):
    """ Shape of an ensemble: pose ranges, clusters per range, PCA variance
    and clustering seed """

    __slots__ = ('partition', 'clusters_per_range', 'variance_keep', 'seed')

    def __init__(self,
                 partition=None,          # type: Optional[PosePartition]
                 clusters_per_range=6,    # type: int
                 variance_keep=0.95,      # type: float
                 seed=0,                  # type: int
                 ):
        # type: (...) -> None
        self.partition = partition if partition is not None \
            else PosePartition()
        require(int(clusters_per_range) == clusters_per_range
                and clusters_per_range >= 1,
                'clusters_per_range must be a positive integer, got %r',
                clusters_per_range)
        self.clusters_per_range = int(clusters_per_range)
        require(0.0 < variance_keep <= 1.0,
                'variance_keep must be in (0, 1], got %r', variance_keep)
        self.variance_keep = float(variance_keep)
        require(int(seed) == seed, 'seed must be an integer, got %r', seed)
        self.seed = int(seed)

    def _key(self):
        # type: () -> Tuple
        return (self.partition.ranges, self.clusters_per_range,
                self.variance_keep, self.seed)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, EnsembleConfig):
            return NotImplemented
        return self._key() == other._key()

    def __repr__(self):
        # type: () -> str
        return 'EnsembleConfig(partition=%r, clusters_per_range=%r, ' \
            'variance_keep=%r, seed=%r)' % (
                self.partition, self.clusters_per_range,
                self.variance_keep, self.seed)


class TrainingSample(collections.namedtuple(
        'TrainingSample', ['subject', 'yaw', 'image', 'landmarks', 'tag'])):
    """ A raw thermal image with its identity, yaw and mesh landmarks """

    __slots__ = ()

    def __new__(cls, subject, yaw, image, landmarks, tag=None):
        # type: (str, float, ImageGrid, ShapeInstance, Optional[str]) -> TrainingSample
        return super(TrainingSample, cls).__new__(
            cls, subject, check_yaw(yaw), image, landmarks, tag)


class RangeFrame(collections.namedtuple('RangeFrame', ['shape', 'size'])):
    """ Shared canonical frame of a pose range: reference shape and raster
    ``(width, height)`` """

    __slots__ = ()

    def mask(self, mesh):
        # type: (Mesh) -> BinaryMask
        return BinaryMask(rasterize(mesh, self.shape, self.size).triangle >= 0)


class Ensemble(object):
    """ Trained members keyed by ``(range index, cluster index)``.

    :ivar models: mapping of cells to :class:`~thermoface.aam.AamModel`
    :ivar config: the :class:`EnsembleConfig` used for training
    :ivar frames: one :class:`RangeFrame` per pose range
    """

    def __init__(self, models, config, frames, mesh=None):
        # type: (Dict[Cell, AamModel], EnsembleConfig, Sequence[RangeFrame], Optional[Mesh]) -> None
        require(len(models) >= 1, 'an ensemble needs at least one member')
        require(len(frames) == len(config.partition),
                '%d range frames for %d pose ranges', len(frames),
                len(config.partition))
        for i, j in models:
            require(0 <= i < len(config.partition),
                    'member (%d, %d) outside the pose partition', i, j)
        self.models = collections.OrderedDict(sorted(models.items()))
        self.config = config
        self.frames = list(frames)
        self.mesh = mesh if mesh is not None \
            else next(iter(self.models.values())).mesh

    @property
    def model_count(self):
        # type: () -> int
        return len(self.models)

    def members(self):
        # type: () -> List[Cell]
        return list(self.models)

    def range_sizes(self):
        # type: () -> List[int]
        """ Number of members per pose range """
        counts = [0] * len(self.config.partition)
        for i, _ in self.models:
            counts[i] += 1
        return counts

    def frame_mask(self, range_index):
        # type: (int) -> BinaryMask
        return self.frames[range_index].mask(self.mesh)

    def __repr__(self):
        # type: () -> str
        return 'Ensemble(%d members over %d pose ranges)' % (
            self.model_count, len(self.config.partition))


class SelectionResult(object):
    """ Fits of every ensemble member to one image.

    :ivar chosen: the member with the lowest error (ties: lowest cell)
    :ivar fit: that member's :class:`~thermoface.aam.FitResult`
    :ivar all_errors: final error of every successfully fitted member
    :ivar fits: fit of every successfully fitted member
    :ivar diverged: members whose fit failed
    """

    __slots__ = ('chosen', 'fit', 'all_errors', 'fits', 'diverged')

    def __init__(self, chosen, fit, all_errors, fits, diverged=()):
        # type: (Cell, FitResult, Dict[Cell, float], Dict[Cell, FitResult], Sequence[Cell]) -> None
        self.chosen = chosen
        self.fit = fit
        self.all_errors = all_errors
        self.fits = fits
        self.diverged = list(diverged)

    def __repr__(self):
        # type: () -> str
        return 'SelectionResult(chosen=%r, error=%.6g, %d diverged)' % (
            self.chosen, self.fit.final_error, len(self.diverged))


def partition_by_pose(samples, partition):
    # type: (Sequence[Any], PosePartition) -> List[List[Any]]
    """ Assign every sample to each pose range containing its yaw.

    :raise AnnotationError: for a yaw outside [0, 90]
    """
    buckets = [[] for _ in partition.ranges]  # type: List[List[Any]]
    for sample in samples:
        yaw = check_yaw(sample.yaw)
        for i in partition.ranges_for(yaw):
            buckets[i].append(sample)
    return buckets


def range_frame(shapes, mesh):
    # type: (Sequence[ShapeInstance], Mesh) -> RangeFrame
    """ Reference frame of a set of shapes: their Procrustes mean """
    mean = train_shape_model(shapes, 1.0, mesh).mean_shape
    return RangeFrame(mean, frame_size_for(mean))


def appearance_features(samples, frame, mesh):
    # type: (Sequence[TrainingSample], RangeFrame, Mesh) -> np.ndarray
    """ Raw appearance of every sample in a shared frame, each row
    normalized to zero mean and unit variance """
    bits = frame.mask(mesh).bits
    rows = []
    for sample in samples:
        warped = as_array(warp_to_frame(sample.image, sample.landmarks, mesh,
                                        frame.shape, frame.size))[bits]
        warped = warped - warped.mean()
        std = warped.std()
        rows.append(warped / std if std > 0 else warped)
    return np.array(rows)


def _canonical_labels(labels):
    # type: (Sequence[int]) -> List[int]
    """ Renumber labels in order of first appearance """
    mapping = {}  # type: Dict[int, int]
    for label in labels:
        mapping.setdefault(label, len(mapping))
    return [mapping[label] for label in labels]


def cluster_appearances(samples, k, seed=0, frame=None, mesh=None):
    # type: (Sequence[TrainingSample], int, int, Optional[RangeFrame], Optional[Mesh]) -> List[int]
    """ Cluster the people of one pose range by facial appearance.

    k-means (k-means++ seeding from ``seed``) runs on the appearance
    features of the samples.  Every person then joins the cluster most of
    their images fell into (ties: lowest label), so all of a person's
    images share one label.  Labels are numbered in order of first
    appearance.

    :raise ParameterError: if there are fewer samples than clusters
    """
    require(int(k) == k and k >= 1, 'k must be a positive integer, got %r', k)
    require(len(samples) >= k, 'cannot form %d clusters from %d samples',
            k, len(samples))
    if k == 1:
        return [0] * len(samples)
    if mesh is None:
        mesh = default_mesh()
    if frame is None:
        frame = range_frame([s.landmarks for s in samples], mesh)
    features = appearance_features(samples, frame, mesh)
    kmeans = KMeans(n_clusters=k, init='k-means++', n_init=1,
                    random_state=seed)
    raw = [int(label) for label in kmeans.fit_predict(features)]

    votes = collections.OrderedDict()  # type: Dict[str, List[int]]
    for sample, label in zip(samples, raw):
        votes.setdefault(sample.subject, []).append(label)
    person = {}
    for subject, labels in votes.items():
        counts = np.bincount(labels, minlength=k)
        person[subject] = int(np.argmax(counts))
    return _canonical_labels([person[s.subject] for s in samples])


def _prepare(samples, seg, diff, jobs):
    # type: (Sequence[TrainingSample], Optional[SegmentationParams], Optional[DiffusionParams], int) -> List[PreparedImage]
    return parallel_map(lambda s: prepare_image(s.image, seg, diff),
                        samples, jobs)


def train_ensemble(samples,       # type: Sequence[TrainingSample]
                   config=None,   # type: Optional[EnsembleConfig]
                   seg=None,      # type: Optional[SegmentationParams]
                   diff=None,     # type: Optional[DiffusionParams]
                   mesh=None,     # type: Optional[Mesh]
                   jobs=1,        # type: int
                   ):
    # type: (...) -> Ensemble
    """ Partition, cluster and train one AAM per (range, cluster) cell.

    Every sample is segmented and enhanced once; members are trained on the
    enhanced images and calibrate their segmentation seed on the masks.

    :raise TrainingError: if a cell has fewer than two samples or a model
        cannot be trained
    :raise AnnotationError: for a yaw outside [0, 90]
    """
    if config is None:
        config = EnsembleConfig()
    if mesh is None:
        mesh = default_mesh()
    samples = list(samples)
    partition = config.partition
    buckets = partition_by_pose(samples, partition)
    prepared = dict(zip((id(s) for s in samples),
                        _prepare(samples, seg, diff, jobs)))

    models = {}  # type: Dict[Cell, AamModel]
    frames = []
    k = config.clusters_per_range
    for i, bucket in enumerate(buckets):
        rng = partition[i]
        if len(bucket) < 2:
            raise TrainingError('pose range %d (%s) has %d sample(s)'
                                % (i, rng, len(bucket)))
        try:
            frame = range_frame([s.landmarks for s in bucket], mesh)
            labels = cluster_appearances(bucket, k, config.seed, frame, mesh)
        except (ParameterError, WarpDegenerateError) as e:
            raise TrainingError('pose range %d (%s): %s' % (i, rng, e))
        frames.append(frame)
        for j in range(k):
            cell = [s for s, label in zip(bucket, labels) if label == j]
            logger.debug('cell (%d, %d): %d samples', i, j, len(cell))
            if len(cell) < 2:
                raise TrainingError('pose range %d (%s), cluster %d has %d '
                                    'sample(s)' % (i, rng, j, len(cell)))
            preps = [prepared[id(s)] for s in cell]
            try:
                models[(i, j)] = train_aam(
                    [p.enhanced for p in preps], [s.landmarks for s in cell],
                    mesh, config.variance_keep, [p.mask for p in preps])
            except (ParameterError, WarpDegenerateError) as e:
                raise TrainingError('cell (%d, %d): %s' % (i, j, e))
    ensemble = Ensemble(models, config, frames, mesh)
    logger.info('trained %d AAMs over %d pose ranges from %d samples',
                ensemble.model_count, len(partition), len(samples))
    return ensemble


def _fit_member(model, img, mask, init, opts):
    # type: (AamModel, ImageGrid, BinaryMask, Optional[ShapeInstance], FitOptions) -> Optional[FitResult]
    try:
        if init is not None:
            seed = model.params_from_points(init)
        else:
            seed = seed_from_mask(model, mask)
        return fit_icaam(model, img, seed, opts)
    except (FitDivergedError, WarpDegenerateError, ParameterError) as e:
        logger.debug('member fit failed: %s', e)
        return None


def select_and_fit(ensemble,     # type: Ensemble
                   img,          # type: ImageGrid
                   mask=None,    # type: Optional[BinaryMask]
                   init=None,    # type: Optional[ShapeInstance]
                   opts=None,    # type: Optional[FitOptions]
                   jobs=1,       # type: int
                   ):
    # type: (...) -> SelectionResult
    """ Fit every member and keep the one with the lowest error.

    :param img: enhanced, segmented image
    :param mask: foreground mask seeding the fits; the non-zero pixels of
        ``img`` if None
    :param init: seed shape in image coordinates, overriding the mask seed
    :raise SelectionError: if every member's fit failed
    """
    if opts is None:
        opts = FitOptions()
    if mask is None:
        mask = BinaryMask(as_array(img) != 0)
    cells = ensemble.members()
    results = parallel_map(
        lambda cell: _fit_member(ensemble.models[cell], img, mask, init,
                                 opts),
        cells, jobs)
    fits = collections.OrderedDict()  # type: Dict[Cell, FitResult]
    diverged = []
    for cell, fit in zip(cells, results):
        if fit is None:
            diverged.append(cell)
        else:
            fits[cell] = fit
    if not fits:
        raise SelectionError('all %d ensemble fits failed' % len(cells))
    errors = collections.OrderedDict(
        (cell, fit.final_error) for cell, fit in fits.items())
    chosen = min(errors, key=lambda cell: (errors[cell], cell))
    if not fits[chosen].converged:
        logger.warning('selected member %r did not converge', chosen)
    return SelectionResult(chosen, fits[chosen], errors, fits, diverged)


def target_range(ensemble, chosen_a, chosen_b):
    # type: (Ensemble, Cell, Cell) -> int
    """ Range whose centre is nearest the mean of the two chosen ranges'
    centres """
    partition = ensemble.config.partition
    mean = 0.5 * (partition[chosen_a[0]].centre + partition[chosen_b[0]].centre)
    return partition.nearest_range(mean)


def _target_member(selection, target):
    # type: (SelectionResult, int) -> Cell
    """ Best fitted member of the target range: converged fits first, then
    lowest error, then lowest cell.

    Cluster indices are assigned per range, so the cluster of the chosen
    member carries no meaning in another range.
    """
    candidates = [cell for cell in selection.fits if cell[0] == target]
    if not candidates:
        raise SelectionError('no member of pose range %d could be fitted'
                             % target)
    return min(candidates,
               key=lambda c: (not selection.fits[c].converged,
                              selection.all_errors[c], c))


def normalize_prepared(ensemble,       # type: Ensemble
                       prep_a,         # type: PreparedImage
                       selection_a,    # type: SelectionResult
                       prep_b,         # type: PreparedImage
                       selection_b,    # type: SelectionResult
                       vessel=None,    # type: Optional[VesselnessParams]
                       ):
    # type: (...) -> Tuple[VesselnessMap, VesselnessMap]
    """ :func:`normalize_pair` on already prepared and fitted images """
    target = target_range(ensemble, selection_a.chosen, selection_b.chosen)
    frame = ensemble.frames[target]
    out = []
    for prep, selection in ((prep_a, selection_a), (prep_b, selection_b)):
        cell = _target_member(selection, target)
        out.append(extract_signature(
            prep.segmented, selection.fits[cell], ensemble.models[cell],
            vessel, mask=prep.mask, frame=(frame.shape, frame.size)))
    return out[0], out[1]


def normalize_pair(ensemble,    # type: Ensemble
                   img_a,       # type: ImageGrid
                   img_b,       # type: ImageGrid
                   seg=None,    # type: Optional[SegmentationParams]
                   diff=None,   # type: Optional[DiffusionParams]
                   vessel=None,  # type: Optional[VesselnessParams]
                   opts=None,   # type: Optional[FitOptions]
                   jobs=1,      # type: int
                   ):
    # type: (...) -> Tuple[VesselnessMap, VesselnessMap]
    """ Signatures of two raw images in a shared intermediate pose frame.

    Each image is segmented, enhanced and fitted by the whole ensemble.
    Each signature is extracted with the member of the target range that
    fits the image best.

    :raise thermoface.segment.SegmentationError: if segmentation fails
    :raise SelectionError: if an image cannot be fitted
    """
    preps = [prepare_image(img, seg, diff) for img in (img_a, img_b)]
    selections = [select_and_fit(ensemble, p.enhanced, p.mask, opts=opts,
                                 jobs=jobs) for p in preps]
    return normalize_prepared(ensemble, preps[0], selections[0], preps[1],
                              selections[1], vessel)


def _model_file(cell):
    # type: (Cell) -> str
    return 'aam-%d-%d.aam' % cell


def _reference_file(index):
    # type: (int) -> str
    return 'range-%d.pts' % index


def save_ensemble(ensemble, directory):
    # type: (Ensemble, str) -> None
    """ Write an ensemble directory (created if missing) """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    config = ensemble.config
    paragraphs = [Paragraph([
        ('Format', ENSEMBLE_FORMAT),
        ('Ranges', str(config.partition)),
        ('Clusters', str(config.clusters_per_range)),
        ('Variance-Keep', repr(config.variance_keep)),
        ('Seed', str(config.seed)),
    ])]
    for i, frame in enumerate(ensemble.frames):
        name = _reference_file(i)
        write_landmarks(frame.shape, os.path.join(directory, name))
        paragraphs.append(Paragraph([
            ('Range', str(i)),
            ('Reference', name),
            ('Frame', '%d %d' % frame.size),
        ]))
    for cell, model in ensemble.models.items():
        name = _model_file(cell)
        write_model(model, os.path.join(directory, name))
        rng = config.partition[cell[0]]
        paragraphs.append(Paragraph([
            ('Range', str(cell[0])),
            ('Cluster', str(cell[1])),
            ('Yaw-Min', repr(rng.yaw_min)),
            ('Yaw-Max', repr(rng.yaw_max)),
            ('Model', name),
        ]))
    with io.open(os.path.join(directory, ENSEMBLE_MANIFEST), 'w',
                 encoding='utf-8') as fh:
        dump_paragraphs(paragraphs, fh)


def _parse_ranges(text, name):
    # type: (str, str) -> List[Tuple[float, float]]
    ranges = []
    for item in text.split():
        lo, sep, hi = item.partition('-')
        try:
            ranges.append((float(lo), float(hi)))
        except ValueError:
            raise DataError('%s: bad pose range %r' % (name, item))
        if not sep:
            raise DataError('%s: bad pose range %r' % (name, item))
    return ranges


def load_ensemble(directory, strict=False):
    # type: (str, bool) -> Ensemble
    """ Read an ensemble directory written by :func:`save_ensemble`.

    :raise DataError: on a malformed manifest or model file
    """
    name = os.path.join(directory, ENSEMBLE_MANIFEST)
    paragraphs = read_paragraphs(name, strict=strict)
    if not paragraphs or paragraphs[0].get('Format') != ENSEMBLE_FORMAT:
        raise DataError('%s: not a thermoface ensemble manifest' % name)
    head = paragraphs[0]
    try:
        config = EnsembleConfig(
            PosePartition(_parse_ranges(require_field(head, 'Ranges', name),
                                        name)),
            require_field(head, 'Clusters', name, int),
            require_field(head, 'Variance-Keep', name, float),
            require_field(head, 'Seed', name, int))
    except ParameterError as e:
        raise DataError('%s: %s' % (name, e))
    frames = {}  # type: Dict[int, RangeFrame]
    models = {}  # type: Dict[Cell, AamModel]
    for para in paragraphs[1:]:
        i = require_field(para, 'Range', name, int)
        if 'Model' in para:
            j = require_field(para, 'Cluster', name, int)
            models[(i, j)] = read_model(os.path.join(directory,
                                                     para['Model']))
        elif 'Reference' in para:
            width, height = require_field(
                para, 'Frame', name, lambda v: [int(x) for x in v.split()])
            shape = read_landmarks(os.path.join(directory, para['Reference']))
            frames[i] = RangeFrame(shape, (width, height))
        else:
            raise DataError('%s: paragraph for range %d is neither a '
                            'member nor a reference' % (name, i))
    if sorted(frames) != list(range(len(config.partition))):
        raise DataError('%s: expected one reference per pose range' % name)
    try:
        return Ensemble(models, config, [frames[i] for i in sorted(frames)])
    except ParameterError as e:
        raise DataError('%s: %s' % (name, e))
