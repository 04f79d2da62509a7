#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Exceptions raised by drape."""

import numpy as np


class DrapeError(Exception):
    """Base class for all drape errors."""


class EmptyMask(DrapeError, ValueError):
    """The foreground mask contains no pixels."""


class DegenerateMesh(DrapeError, ValueError):
    """Too few triangles survived clipping to form a mesh."""


class OutsideMesh(DrapeError, ValueError):
    """A point does not lie in any triangle of the canonical mesh."""


class SingularTriangle(DrapeError, ValueError):
    """A triangle has (numerically) zero projected area."""


class OutOfBounds(DrapeError, IndexError):
    """An image coordinate lies outside the image."""


class NoForeground(DrapeError, ValueError):
    """Segmentation produced no foreground (or no usable boundary)."""


class UnknownKind(DrapeError, KeyError):
    """Unrecognised deformation kind or scenario name."""


class NotPositiveDefinite(DrapeError, np.linalg.LinAlgError):
    """The smoothness system matrix is not symmetric positive definite."""


class Diverged(DrapeError, ArithmeticError):
    """The solver produced non-finite vertex coordinates."""


class CountMismatch(DrapeError, ValueError):
    """Estimated and ground-truth sequences differ in frame or vertex count."""


class ConfigError(DrapeError, ValueError):
    """Malformed or inconsistent run configuration."""


class FrameFormatError(DrapeError, ValueError):
    """A PGM/PPM frame file could not be parsed."""
