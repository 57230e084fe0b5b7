#!/usr/bin/python

# Copyright (C) 2006 James Westby <jw+debian@jameswestby.net>
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

from setuptools import setup
import sys

sys.path.insert(0, 'lib')
import thermoface

description = """\
This package matches faces in thermal infrared images across changes of
head pose. It provides:

  * Segmentation of the warm face from the background (thermoface.segment)
  * Anisotropic diffusion based detail enhancement (thermoface.enhance)
  * Piecewise affine mesh warps and Active Appearance Models fitted by
    inverse compositional Gauss-Newton (thermoface.geometry, thermoface.aam)
  * An ensemble of pose and appearance specific AAMs that normalizes two
    faces to a shared intermediate pose (thermoface.ensemble)
  * Multi-scale vesselness signatures of the superficial vasculature and
    their correlation (thermoface.vesselness, thermoface.matching)
  * Synthetic datasets, an identification protocol with CMC and ROC
    statistics, and a command line tool (thermoface.synthetic,
    thermoface.evaluation, thermoface.cli)
"""

setup(
    name='thermoface',
    version=thermoface.__version__,
    description='Pose invariant face matching in thermal infrared images',
    long_description=description,
    license='GPL-2+',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v2 or later (GPLv2+)',
        'Operating System :: POSIX',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Image Recognition',
    ],
    platforms=['any'],
    package_dir={'': 'lib'},
    packages=[
        'thermoface',
    ],
    package_data={'thermoface': ['data/*.mesh']},
    python_requires='>=3.8',
    install_requires=[
        'chardet',
        'joblib',
        'numpy',
        'scikit-image',
        'scikit-learn',
        'scipy',
    ],
    entry_points={
        'console_scripts': ['thermoface = thermoface.cli:main'],
    },
    test_suite='thermoface.tests',
)
