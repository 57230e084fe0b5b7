""" Command line interface

::

    thermoface train MANIFEST CONFIG -o ENSEMBLE_DIR
    thermoface fit ENSEMBLE_DIR IMAGE
    thermoface extract ENSEMBLE_DIR IMAGE -o SIGNATURE
    thermoface match ENSEMBLE_DIR PROBE GALLERY_DIR
    thermoface evaluate MANIFEST CONFIG -o REPORT_DIR [-t TRAINING_MANIFEST]
    thermoface synth SPEC -o DATASET_DIR

Exit status is 0 on success, 1 for usage and parameter errors, 2 for
unreadable or malformed input and 3 when the pipeline fails on an image.
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

import argparse
import logging
import os
import sys

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        List,
        Optional,
        Sequence,
        TextIO,
        Tuple,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

import thermoface
from thermoface._util import DataError, ParameterError, PipelineError
from thermoface.config import PipelineConfig
from thermoface.enhance import PreparedImage, prepare_image
from thermoface.ensemble import (
    Ensemble,
    SelectionResult,
    TrainingSample,
    load_ensemble,
    normalize_prepared,
    save_ensemble,
    select_and_fit,
    target_range,
    train_ensemble,
)
from thermoface.evaluation import run_protocol
from thermoface.geometry import write_landmarks
from thermoface.manifest import DatasetManifest
from thermoface.matching import (
    UndefinedScoreError,
    ncc,
    rank_scores,
    write_scores,
)
from thermoface.rasterfile import read_image, write_image
from thermoface.synthetic import generate_synthetic_dataset
from thermoface.vesselness import extract_signature


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PIPELINE = 3

IMAGE_SUFFIXES = ('.tfr', '.pgm')


class _ArgumentParser(argparse.ArgumentParser):
    """ argparse exits with status 2 on usage errors; ours is 1 """

    def error(self, message):
        # type: (str) -> Any
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _config(path):
    # type: (Optional[str]) -> PipelineConfig
    if path is None:
        return PipelineConfig()
    return PipelineConfig.load(path)


def _prepare_and_select(ensemble, path, config):
    # type: (Ensemble, str, PipelineConfig) -> Tuple[PreparedImage, SelectionResult]
    prep = prepare_image(read_image(path), config.segmentation,
                         config.diffusion)
    selection = select_and_fit(ensemble, prep.enhanced, prep.mask,
                               opts=config.fit, jobs=config.jobs)
    return prep, selection


def cmd_train(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    config = _config(args.config)
    manifest = DatasetManifest.load(args.manifest)
    samples = [TrainingSample(e.subject, e.yaw, manifest.load_image(e),
                              manifest.load_landmarks(e), e.image)
               for e in manifest if e.landmarks is not None]
    if not samples:
        raise ParameterError('%s has no landmarked entries' % args.manifest)
    ensemble = train_ensemble(samples, config.ensemble, config.segmentation,
                              config.diffusion, jobs=config.jobs)
    save_ensemble(ensemble, args.output)
    out.write('trained %d models into %s\n' % (ensemble.model_count,
                                               args.output))
    return EXIT_OK


def cmd_fit(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    config = _config(args.config)
    ensemble = load_ensemble(args.ensemble)
    _, selection = _prepare_and_select(ensemble, args.image, config)
    fit = selection.fit
    out.write('member: %d %d\n' % selection.chosen)
    out.write('error: %.10g\n' % fit.final_error)
    out.write('converged: %s\n' % ('yes' if fit.converged else 'no'))
    out.write('iterations: %d\n' % fit.iterations)
    if selection.diverged:
        out.write('diverged: %s\n' % ' '.join(
            '%d,%d' % cell for cell in selection.diverged))
    if args.landmarks:
        write_landmarks(fit.shape, args.landmarks)
    return EXIT_OK


def cmd_extract(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    config = _config(args.config)
    ensemble = load_ensemble(args.ensemble)
    prep, selection = _prepare_and_select(ensemble, args.image, config)
    frame = ensemble.frames[selection.chosen[0]]
    signature = extract_signature(
        prep.segmented, selection.fit, ensemble.models[selection.chosen],
        config.vesselness, mask=prep.mask, frame=(frame.shape, frame.size))
    write_image(signature.values, args.output)
    out.write('signature of %s (member %d %d) written to %s\n'
              % ((args.image,) + selection.chosen + (args.output,)))
    return EXIT_OK


def _gallery_images(directory):
    # type: (str) -> List[Tuple[str, str]]
    found = []
    for name in sorted(os.listdir(directory)):
        stem, suffix = os.path.splitext(name)
        if suffix.lower() in IMAGE_SUFFIXES:
            found.append((stem, os.path.join(directory, name)))
    if not found:
        raise DataError('%s holds no .tfr or .pgm images' % directory)
    return found


def cmd_match(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    config = _config(args.config)
    ensemble = load_ensemble(args.ensemble)
    probe, probe_sel = _prepare_and_select(ensemble, args.probe, config)
    scores = []
    for gallery_id, path in _gallery_images(args.gallery):
        prep, selection = _prepare_and_select(ensemble, path, config)
        sig_p, sig_g = normalize_prepared(ensemble, probe, probe_sel, prep,
                                          selection, config.vesselness)
        target = target_range(ensemble, probe_sel.chosen, selection.chosen)
        scores.append((gallery_id,
                       ncc(sig_p, sig_g, ensemble.frame_mask(target))))
    write_scores(((args.probe, pair.gallery_id, pair.rho)
                  for pair in rank_scores(scores)), out)
    return EXIT_OK


def cmd_evaluate(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    config = _config(args.config)
    manifest = DatasetManifest.load(args.manifest)
    ensemble = load_ensemble(args.ensemble) if args.ensemble else None
    training = DatasetManifest.load(args.training) if args.training else None
    report = run_protocol(manifest, config, ensemble, training)
    report.write(args.output)
    out.write(report.summary())
    return EXIT_OK


def cmd_synth(args, out):
    # type: (argparse.Namespace, TextIO) -> int
    spec = _config(args.spec).synth
    manifest = generate_synthetic_dataset(spec, args.output)
    out.write('wrote %d images of %d subjects to %s\n'
              % (len(manifest), spec.subjects, args.output))
    return EXIT_OK


def build_parser():
    # type: () -> argparse.ArgumentParser
    parser = _ArgumentParser(
        prog='thermoface',
        description='Pose invariant face matching in thermal infrared '
                    'images.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + thermoface.__version__)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging; repeat for debug output')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='only log errors')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('train', help='train an ensemble of AAMs')
    p.add_argument('manifest', help='dataset manifest with landmarks')
    p.add_argument('config', nargs='?', help='pipeline configuration file')
    p.add_argument('-o', '--output', required=True,
                   help='directory to write the ensemble to')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('fit', help='fit an ensemble to an image')
    p.add_argument('ensemble', help='ensemble directory')
    p.add_argument('image', help='raw thermal image (.tfr or .pgm)')
    p.add_argument('-c', '--config', help='pipeline configuration file')
    p.add_argument('-l', '--landmarks',
                   help='write the fitted landmarks to this file')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('extract',
                       help='extract the vesselness signature of an image')
    p.add_argument('ensemble', help='ensemble directory')
    p.add_argument('image', help='raw thermal image (.tfr or .pgm)')
    p.add_argument('-o', '--output', required=True,
                   help='signature file to write (TFR1)')
    p.add_argument('-c', '--config', help='pipeline configuration file')
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser('match', help='rank a gallery against a probe image')
    p.add_argument('ensemble', help='ensemble directory')
    p.add_argument('probe', help='probe image')
    p.add_argument('gallery', help='directory of gallery images, one per '
                                   'identity, named after the identity')
    p.add_argument('-c', '--config', help='pipeline configuration file')
    p.set_defaults(func=cmd_match)

    p = sub.add_parser('evaluate', help='run the identification protocol')
    p.add_argument('manifest', help='dataset manifest')
    p.add_argument('config', nargs='?', help='pipeline configuration file')
    p.add_argument('-o', '--output', required=True,
                   help='directory to write the report to')
    p.add_argument('-e', '--ensemble',
                   help='use this trained ensemble instead of training one')
    p.add_argument('-t', '--training',
                   help='manifest to train the ensemble from; probe images '
                   'are always left out')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('synth', help='render a synthetic dataset')
    p.add_argument('spec', nargs='?',
                   help='configuration file with a [synth] section')
    p.add_argument('-o', '--output', required=True,
                   help='directory to write the dataset to')
    p.set_defaults(func=cmd_synth)
    return parser


def _setup_logging(verbose, quiet):
    # type: (int, bool) -> None
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format='%(levelname)s %(name)s: %(message)s')


def main(argv=None, out=None):
    # type: (Optional[Sequence[str]], Optional[TextIO]) -> int
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.quiet)
    if out is None:
        out = sys.stdout
    try:
        return args.func(args, out)
    except ParameterError as e:
        logger.error('%s', e)
        return EXIT_USAGE
    except (DataError, OSError) as e:
        logger.error('%s', e)
        return EXIT_DATA
    except (PipelineError, UndefinedScoreError) as e:
        logger.error('%s', e)
        return EXIT_PIPELINE


if __name__ == '__main__':
    sys.exit(main())
