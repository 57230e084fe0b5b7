""" Identification protocol and its statistics

:func:`run_protocol` enrols a single image of every subject, chosen at
random from a seeded generator, and uses every other image as a probe.
Each probe is compared with every gallery image in the pose frame midway
between the two, and the gallery is ranked by correlation.
An ensemble trained on the fly never sees a probe image.

Images that fail anywhere in the pipeline (segmentation, fitting,
signature extraction) are not dropped silently: they are listed with the
stage and reason, and count against the identification rate, so the CMC at
the largest rank is one minus the failure fraction.
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
import os

import numpy as np

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Dict,
        Iterable,
        List,
        Optional,
        Sequence,
        Set,
        Tuple,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import Error, parallel_map, require
from thermoface.config import PipelineConfig
from thermoface.enhance import prepare_image
from thermoface.ensemble import (
    Ensemble,
    TrainingSample,
    normalize_prepared,
    select_and_fit,
    target_range,
    train_ensemble,
)
from thermoface.manifest import DatasetManifest, ManifestEntry
from thermoface.matching import ncc, rank_scores, write_scores


logger = logging.getLogger(__name__)


YAW_BANDS = ((0.0, 30.0), (30.0, 60.0), (60.0, 90.0))
MAX_BAND_DIFFERENCE = 30.0

# Rank 1/3/5 identification rates of three published approaches, printed
# in summaries for context.
REFERENCE_RATES = (
    ('ensemble of pose specific AAMs', (100.0, 100.0, 100.0)),
    ('vascular network alignment', (96.2, 98.3, 99.0)),
    ('vascular minutiae', (82.5, 92.2, 94.4)),
)


Failure = collections.namedtuple('Failure', ['image', 'subject', 'stage',
                                             'reason'])

ProbeResult = collections.namedtuple(
    'ProbeResult', ['image', 'subject', 'yaw', 'ranking'])


def cmc_curve(ranks, max_rank=None):
    # type: (Sequence[Optional[int]], Optional[int]) -> List[float]
    """ Cumulative match characteristic.

    :param ranks: 1-based rank of the true identity for every probe;
        ``None`` for a probe that could not be evaluated
    :param max_rank: length of the curve, the largest rank by default
    :return: entry ``N - 1`` is the fraction of probes identified at rank
        ``N`` or better
    :raise ParameterError: on an empty rank list
    """
    require(len(ranks) > 0, 'no probes to build a CMC curve from')
    valid = np.array([r for r in ranks if r is not None], dtype=np.int64)
    require(np.all(valid >= 1), 'ranks are 1-based')
    if max_rank is None:
        max_rank = int(valid.max()) if valid.size else 1
    require(max_rank >= 1, 'max_rank must be positive, got %r', max_rank)
    total = float(len(ranks))
    return [float(np.count_nonzero(valid <= n)) / total
            for n in range(1, max_rank + 1)]


def roc_curve(intra, inter):
    # type: (Sequence[float], Sequence[float]) -> List[Tuple[float, float]]
    """ ``(false accept rate, true accept rate)`` over every threshold.

    The curve starts at ``(0, 0)`` for a threshold above every score and
    then adds one point per distinct score, accepting scores at or above
    it, down to ``(1, 1)``.

    :raise ParameterError: if either list is empty
    """
    require(len(intra) > 0, 'no intra-class scores')
    require(len(inter) > 0, 'no inter-class scores')
    genuine = np.sort(np.asarray(intra, dtype=np.float64))
    impostor = np.sort(np.asarray(inter, dtype=np.float64))
    thresholds = np.unique(np.concatenate((genuine, impostor)))[::-1]
    points = [(0.0, 0.0)]
    for t in thresholds:
        far = (len(impostor) - np.searchsorted(impostor, t, 'left')) \
            / float(len(impostor))
        tar = (len(genuine) - np.searchsorted(genuine, t, 'left')) \
            / float(len(genuine))
        points.append((float(far), float(tar)))
    return points


class EvalReport(object):
    """ Outcome of :func:`run_protocol`.

    :ivar probes: one :class:`ProbeResult` per evaluated probe
    :ivar failures: one :class:`Failure` per image that failed
    :ivar gallery: ``{subject: (image, yaw)}`` of the enrolled images
    :ivar enroll_seed: seed used to choose the gallery
    """

    def __init__(self, probes, failures, gallery, enroll_seed=0,
                 probe_failures=None):
        # type: (Sequence[ProbeResult], Sequence[Failure], Dict[str, Tuple[str, float]], int, Optional[Sequence[Failure]]) -> None
        self.probes = list(probes)
        self.failures = list(failures)
        self.probe_failures = list(probe_failures or ())
        self.gallery = collections.OrderedDict(sorted(gallery.items()))
        self.enroll_seed = enroll_seed

    def rank_of(self, probe):
        # type: (ProbeResult) -> Optional[int]
        for n, pair in enumerate(probe.ranking, 1):
            if pair.gallery_id == probe.subject:
                return n
        return None

    @property
    def ranks(self):
        # type: () -> List[Optional[int]]
        """ Rank of every probe, ``None`` for failed probes """
        return [self.rank_of(p) for p in self.probes] + \
            [None] * len(self.probe_failures)

    @property
    def cmc(self):
        # type: () -> List[float]
        return cmc_curve(self.ranks, max(len(self.gallery), 1))

    def _pairs(self):
        # type: () -> Iterable[Tuple[ProbeResult, str, float, bool]]
        for probe in self.probes:
            for pair in probe.ranking:
                yield (probe, pair.gallery_id, pair.rho,
                       pair.gallery_id == probe.subject)

    @property
    def intra_scores(self):
        # type: () -> List[float]
        return [rho for _, _, rho, same in self._pairs() if same]

    @property
    def inter_scores(self):
        # type: () -> List[float]
        return [rho for _, _, rho, same in self._pairs() if not same]

    @property
    def roc(self):
        # type: () -> List[Tuple[float, float]]
        return roc_curve(self.intra_scores, self.inter_scores)

    def band_scores(self, band):
        # type: (Tuple[float, float]) -> Tuple[List[float], List[float]]
        """ Intra and inter scores of the pairs whose two yaws lie in the
        band and differ by at most 30 degrees """
        lo, hi = band
        intra = []
        inter = []
        for probe, gallery_id, rho, same in self._pairs():
            gallery_yaw = self.gallery[gallery_id][1]
            if not (lo <= probe.yaw <= hi and lo <= gallery_yaw <= hi):
                continue
            if abs(probe.yaw - gallery_yaw) > MAX_BAND_DIFFERENCE:
                continue
            (intra if same else inter).append(rho)
        return intra, inter

    def band_roc(self, band):
        # type: (Tuple[float, float]) -> Optional[List[Tuple[float, float]]]
        """ ROC of a yaw band; None if the band lacks either kind of pair """
        intra, inter = self.band_scores(band)
        if not intra or not inter:
            return None
        return roc_curve(intra, inter)

    def histograms(self, bins=20):
        # type: (int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]
        """ Unit-sum histograms of the intra and inter scores over [-1, 1].

        :return: ``(edges, intra, inter)``; a histogram of an empty score
            list is all zeros
        """
        require(int(bins) == bins and bins >= 1,
                'bins must be a positive integer, got %r', bins)
        edges = np.linspace(-1.0, 1.0, int(bins) + 1)
        out = []
        for scores in (self.intra_scores, self.inter_scores):
            counts, _ = np.histogram(scores, bins=edges)
            total = counts.sum()
            out.append(counts / float(total) if total else
                       counts.astype(np.float64))
        return edges, out[0], out[1]

    def summary(self):
        # type: () -> str
        """ Plain-text digest of the report """
        lines = []
        ranks = self.ranks
        cmc = self.cmc if ranks else []
        lines.append('gallery subjects: %d' % len(self.gallery))
        lines.append('probes: %d (%d failed)' % (len(ranks),
                                                 len(self.probe_failures)))
        lines.append('failures: %d' % len(self.failures))
        lines.append('enrolment seed: %d' % self.enroll_seed)
        for n in (1, 3, 5):
            if n <= len(cmc):
                lines.append('rank-%d: %.1f%%' % (n, 100.0 * cmc[n - 1]))
        intra = self.intra_scores
        inter = self.inter_scores
        if intra:
            lines.append('mean intra-class score: %.4f' % np.mean(intra))
        if inter:
            lines.append('mean inter-class score: %.4f' % np.mean(inter))
        lines.append('')
        lines.append('published rank-1/3/5 rates on real data, for '
                     'context:')
        for name, rates in REFERENCE_RATES:
            lines.append('  %s: %.1f / %.1f / %.1f' % ((name,) + rates))
        if self.failures:
            lines.append('')
            lines.append('failed images:')
            for f in self.failures:
                lines.append('  %s (%s) %s: %s' % (f.image, f.subject,
                                                   f.stage, f.reason))
        return '\n'.join(lines) + '\n'

    def write(self, directory):
        # type: (str) -> None
        """ Write the curves, scores and summary into ``directory`` """
        if not os.path.isdir(directory):
            os.makedirs(directory)

        def table(name, header, rows):
            # type: (str, Sequence[str], Iterable[Sequence[Any]]) -> None
            with io.open(os.path.join(directory, name), 'w',
                         encoding='utf-8', newline='') as fh:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerow(header)
                for row in rows:
                    writer.writerow(row)

        def fmt(value):
            # type: (float) -> str
            return '%.10f' % value

        if self.ranks:
            table('cmc.csv', ('rank', 'rate'),
                  ((n, fmt(r)) for n, r in enumerate(self.cmc, 1)))
        if self.intra_scores and self.inter_scores:
            table('roc.csv', ('far', 'tar'),
                  ((fmt(a), fmt(b)) for a, b in self.roc))
        for band in YAW_BANDS:
            roc = self.band_roc(band)
            if roc is not None:
                table('roc_%g-%g.csv' % band, ('far', 'tar'),
                      ((fmt(a), fmt(b)) for a, b in roc))
        edges, intra, inter = self.histograms()
        table('histogram.csv', ('low', 'high', 'intra', 'inter'),
              ((fmt(edges[i]), fmt(edges[i + 1]), fmt(intra[i]),
                fmt(inter[i])) for i in range(len(intra))))
        with io.open(os.path.join(directory, 'scores.csv'), 'w',
                     encoding='utf-8', newline='') as fh:
            write_scores(((p.image, pair.gallery_id, pair.rho)
                          for p in self.probes for pair in p.ranking), fh)
        with io.open(os.path.join(directory, 'summary.txt'), 'w',
                     encoding='utf-8') as fh:
            fh.write(self.summary())


def choose_gallery(manifest, seed, self_match=False):
    # type: (DatasetManifest, int, bool) -> Dict[str, ManifestEntry]
    """ One randomly chosen entry per subject, subjects in sorted order.

    :raise ParameterError: if a subject has a single image and probes
        exclude the gallery
    """
    rng = np.random.default_rng(seed)
    gallery = collections.OrderedDict()  # type: Dict[str, ManifestEntry]
    for subject in sorted(manifest.subjects()):
        entries = manifest.entries_for(subject)
        require(self_match or len(entries) >= 2,
                'subject %s has a single image; nothing to probe with',
                subject)
        gallery[subject] = entries[int(rng.integers(len(entries)))]
    return gallery


def _training_samples(manifest, excluded, images):
    # type: (DatasetManifest, Set[str], Dict[str, Any]) -> List[TrainingSample]
    """ Landmarked entries whose resolved image path is not in ``excluded`` """
    samples = []
    skipped = 0
    for entry in manifest:
        if entry.landmarks is None:
            continue
        if os.path.abspath(manifest.resolve(entry.image)) in excluded:
            skipped += 1
            continue
        img = images.get(entry.image)
        if img is None:
            img = manifest.load_image(entry)
        samples.append(TrainingSample(entry.subject, entry.yaw, img,
                                      manifest.load_landmarks(entry),
                                      entry.image))
    if skipped:
        logger.info('%d probe images left out of training', skipped)
    require(len(samples) > 0, 'no landmarked non-probe entries to train '
            'from; supply a trained ensemble or a training manifest')
    return samples


def run_protocol(manifest, config=None, ensemble=None, training=None):
    # type: (DatasetManifest, Optional[PipelineConfig], Optional[Ensemble], Optional[DatasetManifest]) -> EvalReport
    """ Single-image enrolment identification across pose.

    Probe images are never used for training. Without ``ensemble`` one is
    trained from the landmarked entries of ``training``, or of
    ``manifest`` when ``training`` is None, leaving out every probe.

    :param ensemble: trained ensemble
    :param training: manifest to train the ensemble from
    :raise ParameterError: if a subject cannot provide a probe, or if
        nothing is left to train from
    """
    if config is None:
        config = PipelineConfig()
    jobs = config.jobs
    gallery_entries = choose_gallery(manifest, config.protocol.enroll_seed,
                                     config.protocol.self_match)
    entries = list(manifest)
    gallery_images = set(e.image for e in gallery_entries.values())
    probes = [e for e in entries
              if config.protocol.self_match or e.image not in gallery_images]
    images = collections.OrderedDict(
        (entry.image, manifest.load_image(entry)) for entry in manifest)
    if ensemble is None:
        excluded = set(os.path.abspath(manifest.resolve(e.image))
                       for e in probes)
        if training is None:
            samples = _training_samples(manifest, excluded, images)
        else:
            samples = _training_samples(training, excluded, {})
        ensemble = train_ensemble(samples, config.ensemble,
                                  config.segmentation, config.diffusion,
                                  jobs=jobs)

    failures = []  # type: List[Failure]

    def process(entry):
        # type: (ManifestEntry) -> Any
        try:
            prep = prepare_image(images[entry.image], config.segmentation,
                                 config.diffusion)
        except Error as e:
            return Failure(entry.image, entry.subject, 'segment', str(e))
        try:
            selection = select_and_fit(ensemble, prep.enhanced, prep.mask,
                                       opts=config.fit)
        except Error as e:
            return Failure(entry.image, entry.subject, 'fit', str(e))
        return prep, selection

    processed = dict(zip((e.image for e in entries),
                         parallel_map(process, entries, jobs)))
    for entry in entries:
        if isinstance(processed[entry.image], Failure):
            failures.append(processed[entry.image])

    gallery = collections.OrderedDict()  # type: Dict[str, Tuple[str, float]]
    for subject, entry in gallery_entries.items():
        if isinstance(processed[entry.image], Failure):
            logger.warning('gallery image %s of %s failed; subject dropped',
                           entry.image, subject)
            failures.append(Failure(entry.image, subject, 'gallery',
                                    'gallery image could not be processed'))
        else:
            gallery[subject] = (entry.image, entry.yaw)

    def evaluate(entry):
        # type: (ManifestEntry) -> Any
        done = processed[entry.image]
        if isinstance(done, Failure):
            return done
        if entry.subject not in gallery:
            return Failure(entry.image, entry.subject, 'match',
                           'subject has no gallery image')
        prep, selection = done
        scores = []
        for subject, (image, _) in gallery.items():
            g_prep, g_selection = processed[image]
            try:
                sig_p, sig_g = normalize_prepared(
                    ensemble, prep, selection, g_prep, g_selection,
                    config.vesselness)
                target = target_range(ensemble, selection.chosen,
                                      g_selection.chosen)
                rho = ncc(sig_p, sig_g, ensemble.frame_mask(target))
            except (Error, ArithmeticError) as e:
                return Failure(entry.image, entry.subject, 'match',
                               'against %s: %s' % (subject, e))
            scores.append((subject, rho))
        return ProbeResult(entry.image, entry.subject, entry.yaw,
                           rank_scores(scores))

    results = []
    probe_failures = []
    for outcome in parallel_map(evaluate, probes, jobs):
        if isinstance(outcome, Failure):
            probe_failures.append(outcome)
            if outcome.stage == 'match':
                failures.append(outcome)
        else:
            results.append(outcome)

    report = EvalReport(results, failures, gallery,
                        config.protocol.enroll_seed, probe_failures)
    if report.ranks:
        logger.info('protocol: %d probes, %d failures, rank-1 %.1f%%',
                    len(report.ranks), len(failures),
                    100.0 * report.cmc[0])
    return report
