#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging

from . import energy, errors, evaluate, features, mesh, rgbd, solver, synth, track
from .config import RunConfig

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "unknown"

logging.getLogger(__name__).addHandler(logging.NullHandler())
