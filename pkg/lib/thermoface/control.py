""" Reading and writing paragraph-structured text files

Dataset manifests and ensemble manifests are stored as RFC822-style
paragraphs, one record per paragraph::

    # comment lines start with '#'
    Subject: s01
    Yaw: 22.5
    Image: images/s01_022.tfr
    Notes: a value can continue
     on following lines indented by whitespace;
     .
     a lone '.' stands for an empty line

    Subject: s02
    ...

Paragraphs are separated by blank lines.  Field names are matched without
regard to case but keep their spelling for output.  Input given as bytes
is decoded as UTF-8 and, failing that, with the encoding chardet detects.
"""

# Copyright (C) 2005 Florian Weimer <fw@deneb.enyo.de>
# Copyright (C) 2006-2010 John Wright <jsw@debian.org>
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

import collections.abc
import logging
import re

import chardet

try:
    # pylint: disable=unused-import
    from typing import (
        Any,
        Dict,
        Iterable,
        Iterator,
        List,
        Optional,
        TextIO,
        Tuple,
        Union,
    )
except ImportError:
    # Missing types aren't important at runtime
    pass

from thermoface._util import DataError, complain


logger = logging.getLogger(__name__)


class ParseError(DataError):
    """An exception which is used to signal a parse failure.

    Attributes:

    filename - name of the file
    lineno - line number in the file
    msg - error message

    """

    def __init__(self,
                 filename,     # type: str
                 lineno,       # type: int
                 msg           # type: str
                 ):
        # type: (...) -> None
        assert isinstance(lineno, int)
        self.filename = filename
        self.lineno = lineno
        self.msg = msg
        super(ParseError, self).__init__(filename, lineno, msg)

    def __str__(self):
        # type: () -> str
        return '%s:%d: %s' % (self.filename, self.lineno, self.msg)

    def __repr__(self):
        # type: () -> str
        return "ParseError(%r, %d, %r)" % (self.filename, self.lineno,
                                           self.msg)


def decode_text(data, encoding='utf-8', name='<input>'):
    # type: (Union[bytes, str], str, str) -> str
    """ Decode bytes, falling back to chardet's guess of the encoding """
    if isinstance(data, str):
        return data
    try:
        return data.decode(encoding)
    except UnicodeDecodeError as e:
        guess = chardet.detect(data).get('encoding')
        logger.warning('%s: decoding from %s failed; detected %s',
                       name, encoding, guess)
        if not guess:
            raise DataError('%s: cannot determine text encoding' % name)
        try:
            return data.decode(guess)
        except (UnicodeDecodeError, LookupError):
            raise DataError('%s: %s' % (name, e))


class Paragraph(collections.abc.MutableMapping):
    """ An ordered mapping of field names to string values, where names
    compare case-insensitively """

    def __init__(self, fields=None):
        # type: (Optional[Iterable[Tuple[str, str]]]) -> None
        self._data = collections.OrderedDict()  # type: Dict[str, Tuple[str, str]]
        if fields is not None:
            items = fields.items() if hasattr(fields, 'items') else fields
            for key, value in items:  # type: ignore
                self[key] = value

    def __getitem__(self, key):
        # type: (str) -> str
        return self._data[key.lower()][1]

    def __setitem__(self, key, value):
        # type: (str, Any) -> None
        lower = key.lower()
        if lower in self._data:
            key = self._data[lower][0]
        self._data[lower] = (key, str(value))

    def __delitem__(self, key):
        # type: (str) -> None
        del self._data[key.lower()]

    def __iter__(self):
        # type: () -> Iterator[str]
        return (key for key, _ in self._data.values())

    def __len__(self):
        # type: () -> int
        return len(self._data)

    def __contains__(self, key):
        # type: (object) -> bool
        return isinstance(key, str) and key.lower() in self._data

    def __repr__(self):
        # type: () -> str
        return 'Paragraph(%r)' % list(self.items())

    def dump(self, fileobj=None):
        # type: (Optional[TextIO]) -> Optional[str]
        """ Write the paragraph (without the separating blank line) """
        lines = []
        for key, value in self.items():
            head, _, rest = value.partition('\n')
            lines.append('%s: %s' % (key, head) if head else '%s:' % key)
            if rest:
                for cont in rest.split('\n'):
                    lines.append(' ' + (cont if cont.strip() else '.'))
        text = '\n'.join(lines) + '\n'
        if fileobj is None:
            return text
        fileobj.write(text)
        return None


# The key is non-whitespace, non-colon characters before any colon.
_key_part = r"^(?P<key>[^: \t\n\r\f\v#]+)\s*:\s*"
_single = re.compile(_key_part + r"(?P<data>\S.*?)\s*$")
_multi = re.compile(_key_part + r"$")
_multidata = re.compile(r"^\s+(?P<data>\S.*?)\s*$")


def iter_paragraphs(sequence, name='<input>', strict=False):
    # type: (Union[str, bytes, Iterable[Union[str, bytes]]], str, bool) -> Iterator[Paragraph]
    """ Yield every paragraph of a text.

    :param sequence: text, bytes, or an iterable of lines
    :param name: file name used in messages
    :param strict: raise :class:`ParseError` on malformed lines instead of
        logging a warning and skipping them
    """
    if isinstance(sequence, bytes):
        sequence = decode_text(sequence, name=name)
    if isinstance(sequence, str):
        sequence = sequence.splitlines()

    para = Paragraph()
    curkey = None  # type: Optional[str]
    content = []  # type: List[str]

    def flush():
        # type: () -> None
        if curkey is not None:
            para[curkey] = '\n'.join(content)

    for lineno, line in enumerate(sequence, 1):
        line = decode_text(line, name=name).rstrip('\r\n')
        if line.startswith('#'):
            continue
        if not line.strip():
            flush()
            curkey = None
            if para:
                yield para
                para = Paragraph()
            continue

        m = _single.match(line) or _multi.match(line)
        if m:
            flush()
            curkey = m.group('key')
            data = m.groupdict().get('data')
            content = [data] if data else []
            if curkey in para:
                complain('duplicate field %s' % curkey, strict,
                         lambda msg, n=lineno: ParseError(name, n, msg))
            continue

        m = _multidata.match(line)
        if m and curkey is not None:
            data = m.group('data')
            content.append('' if data == '.' else data)
            continue

        complain('cannot parse line %r' % line, strict,
                 lambda msg, n=lineno: ParseError(name, n, msg))

    flush()
    if para:
        yield para


def parse_paragraphs(sequence, name='<input>', strict=False):
    # type: (Union[str, bytes, Iterable[Union[str, bytes]]], str, bool) -> List[Paragraph]
    return list(iter_paragraphs(sequence, name=name, strict=strict))


def read_paragraphs(path, strict=False):
    # type: (str, bool) -> List[Paragraph]
    with open(path, 'rb') as fh:
        return parse_paragraphs(fh.read(), name=str(path), strict=strict)


def dump_paragraphs(paragraphs, fileobj):
    # type: (Iterable[Paragraph], TextIO) -> None
    """ Write paragraphs separated by blank lines """
    first = True
    for para in paragraphs:
        if not first:
            fileobj.write('\n')
        para.dump(fileobj)
        first = False


def require_field(para, key, name='<input>', conv=str):
    # type: (Paragraph, str, str, Any) -> Any
    """ Fetch a mandatory field, converting it with ``conv`` """
    if key not in para:
        raise DataError('%s: paragraph is missing the %s field' % (name, key))
    value = para[key]
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise DataError('%s: bad %s value %r' % (name, key, value))
