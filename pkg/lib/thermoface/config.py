""" Pipeline configuration files

A configuration file holds ``key = value`` lines grouped under
``[section]`` headers, one section per stage of the pipeline::

    # thermoface configuration
    [segment]
    t_low = otsu
    t_high = inf

    [enhance]
    k = 20
    iterations = 20

    [ensemble]
    ranges = 0-45 22.5-67.5 45-90
    clusters = 6

Blank lines and lines starting with ``#`` are ignored.  Every key is
optional; missing keys keep their defaults.  See ``docs/config.rst`` for
the full list of sections and keys.
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
import math
import re

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Callable,
        Dict,
        Iterable,
        List,
        Optional,
        TextIO,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import DataError, ParameterError, complain, require
from thermoface.aam import FitOptions
from thermoface.control import decode_text
from thermoface.enhance import DiffusionParams
from thermoface.ensemble import EnsembleConfig, PosePartition
from thermoface.segment import SegmentationParams
from thermoface.synthetic import SynthSpec
from thermoface.vesselness import VesselnessParams


logger = logging.getLogger(__name__)


class ConfigError(DataError):
    """ A configuration file is malformed or holds invalid values """


class ProtocolConfig(object):
    """ Enrolment settings of the evaluation protocol.

    :ivar enroll_seed: seed of the random choice of each subject's gallery
        image
    :ivar self_match: probe with every image, the gallery images included
    """

    __slots__ = ('enroll_seed', 'self_match')

    def __init__(self, enroll_seed=0, self_match=False):
        # type: (int, bool) -> None
        require(int(enroll_seed) == enroll_seed,
                'enroll_seed must be an integer, got %r', enroll_seed)
        self.enroll_seed = int(enroll_seed)
        self.self_match = bool(self_match)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, ProtocolConfig):
            return NotImplemented
        return (self.enroll_seed, self.self_match) == \
            (other.enroll_seed, other.self_match)

    def __repr__(self):
        # type: () -> str
        return 'ProtocolConfig(enroll_seed=%r, self_match=%r)' % (
            self.enroll_seed, self.self_match)


_TRUE = ('yes', 'true', 'on', '1')
_FALSE = ('no', 'false', 'off', '0')


def _bool(value):
    # type: (str) -> bool
    lowered = value.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError('not a boolean: %r' % value)


def _int(value):
    # type: (str) -> int
    return int(value, 10)


def _floats(value):
    # type: (str) -> List[float]
    return [float(v) for v in value.split()]


def _sentinel(word, conv):
    # type: (str, Callable[[str], Any]) -> Callable[[str], Any]
    def convert(value):
        # type: (str) -> Any
        if value.lower() == word:
            return None
        return conv(value)
    return convert


def _ranges(value):
    # type: (str) -> List[Tuple[float, float]]
    ranges = []
    for item in value.split():
        lo, sep, hi = item.partition('-')
        if not sep:
            raise ValueError('bad pose range %r' % item)
        ranges.append((float(lo), float(hi)))
    return ranges


def _format_float(value):
    # type: (float) -> str
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return repr(float(value))


def _format_floats(values):
    # type: (Iterable[float]) -> str
    return ' '.join(_format_float(v) for v in values)


def _format_bool(value):
    # type: (bool) -> str
    return 'yes' if value else 'no'


def _format_ranges(partition):
    # type: (PosePartition) -> str
    return ' '.join('%s-%s' % (_format_float(r.yaw_min),
                               _format_float(r.yaw_max))
                    for r in partition.ranges)


# section -> key -> converter
SECTIONS = collections.OrderedDict([
    ('segment', collections.OrderedDict([
        ('t_low', _sentinel('otsu', float)),
        ('t_high', float),
        ('struct_elem_area_fraction', float),
    ])),
    ('enhance', collections.OrderedDict([
        ('k', float),
        ('step', float),
        ('iterations', _int),
        ('conductance', str),
        ('conductance_update', str),
    ])),
    ('vesselness', collections.OrderedDict([
        ('scales', _floats),
        ('beta', float),
        ('c', _sentinel('auto', float)),
    ])),
    ('ensemble', collections.OrderedDict([
        ('ranges', _ranges),
        ('clusters', _int),
        ('variance_keep', float),
        ('seed', _int),
    ])),
    ('fit', collections.OrderedDict([
        ('tol', float),
        ('max_iter', _int),
    ])),
    ('protocol', collections.OrderedDict([
        ('enroll_seed', _int),
        ('self_match', _bool),
    ])),
    ('pipeline', collections.OrderedDict([
        ('jobs', _int),
    ])),
    ('synth', collections.OrderedDict([
        ('subjects', _int),
        ('yaws', _floats),
        ('noise', float),
        ('seed', _int),
        ('families', _int),
        ('image_size', _int),
        ('face_scale', float),
        ('sessions', _int),
    ])),
])

_section_re = re.compile(r'^\[\s*(?P<name>[A-Za-z_][\w-]*)\s*\]$')
_assign_re = re.compile(r'^(?P<key>[A-Za-z_][\w-]*)\s*=\s*(?P<value>.*?)$')


def parse_sections(lines, name='<config>', strict=False):
    # type: (Iterable[Union[str, bytes]], str, bool) -> Dict[str, Dict[str, Any]]
    """ Convert the lines of a configuration file into
    ``{section: {key: value}}`` with typed values.

    Unknown sections and keys, duplicate keys and unparseable lines are
    errors in strict mode and warnings otherwise.

    :raise ConfigError: for a value that cannot be converted
    """
    parsed = collections.OrderedDict()  # type: Dict[str, Dict[str, Any]]
    section = None  # type: Optional[str]
    for lineno, line in enumerate(lines, 1):
        line = decode_text(line, name=name).strip()
        if not line or line.startswith('#'):
            continue
        m = _section_re.match(line)
        if m:
            section = m.group('name').lower()
            if section not in SECTIONS:
                complain('%s:%d: unknown section [%s]' % (name, lineno,
                                                          section),
                         strict, ConfigError)
            parsed.setdefault(section, collections.OrderedDict())
            continue
        m = _assign_re.match(line)
        if not m:
            complain('%s:%d: cannot parse %r' % (name, lineno, line), strict,
                     ConfigError)
            continue
        if section is None:
            complain('%s:%d: %s outside any section' % (name, lineno,
                                                        m.group('key')),
                     strict, ConfigError)
            continue
        key = m.group('key').lower().replace('-', '_')
        keys = SECTIONS.get(section)
        if keys is None:
            continue
        if key not in keys:
            complain('%s:%d: unknown key %s in [%s]' % (name, lineno, key,
                                                        section),
                     strict, ConfigError)
            continue
        if key in parsed[section]:
            complain('%s:%d: duplicate key %s in [%s]' % (name, lineno, key,
                                                          section),
                     strict, ConfigError)
        value = m.group('value')
        try:
            parsed[section][key] = keys[key](value)
        except (TypeError, ValueError) as e:
            raise ConfigError('%s:%d: bad value for %s: %s'
                              % (name, lineno, key, e))
    return parsed


class PipelineConfig(object):
    """ Every tunable of the pipeline, one parameter object per stage.

    :ivar segmentation: :class:`~thermoface.segment.SegmentationParams`
    :ivar diffusion: :class:`~thermoface.enhance.DiffusionParams`
    :ivar vesselness: :class:`~thermoface.vesselness.VesselnessParams`
    :ivar ensemble: :class:`~thermoface.ensemble.EnsembleConfig`
    :ivar fit: :class:`~thermoface.aam.FitOptions`
    :ivar protocol: :class:`ProtocolConfig`
    :ivar jobs: parallel width for fitting and preprocessing
    :ivar synth: :class:`~thermoface.synthetic.SynthSpec`, only used by the
        ``synth`` command
    """

    def __init__(self,
                 segmentation=None,  # type: Optional[SegmentationParams]
                 diffusion=None,     # type: Optional[DiffusionParams]
                 vesselness=None,    # type: Optional[VesselnessParams]
                 ensemble=None,      # type: Optional[EnsembleConfig]
                 fit=None,           # type: Optional[FitOptions]
                 protocol=None,      # type: Optional[ProtocolConfig]
                 jobs=1,             # type: int
                 synth=None,         # type: Optional[SynthSpec]
                 ):
        # type: (...) -> None
        self.segmentation = segmentation or SegmentationParams()
        self.diffusion = diffusion or DiffusionParams()
        self.vesselness = vesselness or VesselnessParams()
        self.ensemble = ensemble or EnsembleConfig()
        self.fit = fit or FitOptions()
        self.protocol = protocol or ProtocolConfig()
        require(int(jobs) == jobs and jobs >= 1,
                'jobs must be a positive integer, got %r', jobs)
        self.jobs = int(jobs)
        self.synth = synth or SynthSpec()

    def _key(self):
        # type: () -> Tuple
        return (self.segmentation, self.diffusion, self.vesselness,
                self.ensemble, self.fit, self.protocol, self.jobs,
                self.synth)

    def __eq__(self, other):
        # type: (object) -> bool
        if not isinstance(other, PipelineConfig):
            return NotImplemented
        return self._key() == other._key()

    def __repr__(self):
        # type: () -> str
        return 'PipelineConfig(%s)' % ', '.join(repr(v) for v in self._key())

    @classmethod
    def from_sections(cls, sections):
        # type: (Dict[str, Dict[str, Any]]) -> PipelineConfig
        """ Build a config from :func:`parse_sections` output.

        :raise ParameterError: if a value violates a stage's constraints
        """
        def get(section):
            # type: (str) -> Dict[str, Any]
            return sections.get(section, {})

        seg = get('segment')
        enh = get('enhance')
        ves = get('vesselness')
        ens = get('ensemble')
        fit = get('fit')
        proto = get('protocol')
        synth = get('synth')

        seg_args = dict(seg)
        vessel_args = dict(ves)
        ens_args = {}  # type: Dict[str, Any]
        if 'ranges' in ens:
            ens_args['partition'] = PosePartition(ens['ranges'])
        if 'clusters' in ens:
            ens_args['clusters_per_range'] = ens['clusters']
        for key in ('variance_keep', 'seed'):
            if key in ens:
                ens_args[key] = ens[key]
        return cls(
            segmentation=SegmentationParams(**seg_args),
            diffusion=DiffusionParams(**enh),
            vesselness=VesselnessParams(**vessel_args),
            ensemble=EnsembleConfig(**ens_args),
            fit=FitOptions(**fit),
            protocol=ProtocolConfig(**proto),
            jobs=get('pipeline').get('jobs', 1),
            synth=SynthSpec(**synth),
        )

    @classmethod
    def from_lines(cls, lines, name='<config>', strict=False):
        # type: (Iterable[Union[str, bytes]], str, bool) -> PipelineConfig
        """ Parse the lines of a configuration file.

        :raise ConfigError: on syntax errors (in strict mode) and on
            invalid values
        """
        sections = parse_sections(lines, name, strict)
        try:
            return cls.from_sections(sections)
        except ParameterError as e:
            raise ConfigError('%s: %s' % (name, e))

    @classmethod
    def loads(cls, text, name='<config>', strict=False):
        # type: (Union[str, bytes], str, bool) -> PipelineConfig
        return cls.from_lines(decode_text(text, name=name).splitlines(),
                              name, strict)

    @classmethod
    def load(cls, path, strict=False):
        # type: (str, bool) -> PipelineConfig
        """ Read a configuration file; bytes are decoded as UTF-8, falling
        back to the detected encoding """
        with open(path, 'rb') as fh:
            return cls.loads(fh.read(), str(path), strict)

    def sections(self):
        # type: () -> Dict[str, Dict[str, str]]
        """ Every setting formatted as configuration text values """
        seg = self.segmentation
        diff = self.diffusion
        ves = self.vesselness
        ens = self.ensemble
        synth = self.synth
        return collections.OrderedDict([
            ('segment', collections.OrderedDict([
                ('t_low', 'otsu' if seg.t_low is None
                 else _format_float(seg.t_low)),
                ('t_high', _format_float(seg.t_high)),
                ('struct_elem_area_fraction',
                 _format_float(seg.struct_elem_area_fraction)),
            ])),
            ('enhance', collections.OrderedDict([
                ('k', _format_float(diff.k)),
                ('step', _format_float(diff.step)),
                ('iterations', str(diff.iterations)),
                ('conductance', diff.conductance),
                ('conductance_update', diff.conductance_update),
            ])),
            ('vesselness', collections.OrderedDict([
                ('scales', _format_floats(ves.scales)),
                ('beta', _format_float(ves.beta)),
                ('c', 'auto' if ves.c is None else _format_float(ves.c)),
            ])),
            ('ensemble', collections.OrderedDict([
                ('ranges', _format_ranges(ens.partition)),
                ('clusters', str(ens.clusters_per_range)),
                ('variance_keep', _format_float(ens.variance_keep)),
                ('seed', str(ens.seed)),
            ])),
            ('fit', collections.OrderedDict([
                ('tol', _format_float(self.fit.tol)),
                ('max_iter', str(self.fit.max_iter)),
            ])),
            ('protocol', collections.OrderedDict([
                ('enroll_seed', str(self.protocol.enroll_seed)),
                ('self_match', _format_bool(self.protocol.self_match)),
            ])),
            ('pipeline', collections.OrderedDict([
                ('jobs', str(self.jobs)),
            ])),
            ('synth', collections.OrderedDict([
                ('subjects', str(synth.subjects)),
                ('yaws', _format_floats(synth.yaws)),
                ('noise', _format_float(synth.noise)),
                ('seed', str(synth.seed)),
                ('families', str(synth.families)),
                ('image_size', str(synth.image_size)),
                ('face_scale', _format_float(synth.face_scale)),
                ('sessions', str(synth.sessions)),
            ])),
        ])

    def dump(self, fileobj=None):
        # type: (Optional[TextIO]) -> Optional[str]
        """ Write every setting; the output loads back to an equal config.

        If fileobj is None, the text is returned as a string.
        """
        out = io.StringIO() if fileobj is None else fileobj
        first = True
        for section, values in self.sections().items():
            if not first:
                out.write('\n')
            first = False
            out.write('[%s]\n' % section)
            for key, value in values.items():
                out.write('%s = %s\n' % (key, value))
        if fileobj is None:
            return out.getvalue()  # type: ignore
        return None
