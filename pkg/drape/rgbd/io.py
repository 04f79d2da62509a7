#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Reading and writing RGBD sequences (PPM/PGM frames plus a manifest)."""

import logging
from pathlib import Path

import cv2
import numpy as np

from ..errors import FrameFormatError
from .frame import RgbdFrame

logger = logging.getLogger(__name__)

__all__ = [
    "MANIFEST_NAME",
    "read_pnm",
    "write_pgm",
    "write_ppm",
    "read_key_value",
    "write_key_value",
    "read_manifest",
    "write_manifest",
    "frame_paths",
    "load_frame",
    "save_frame",
    "count_frames",
]

MANIFEST_NAME = "manifest.txt"
COLOR_TEMPLATE = "frame_%05d.ppm"
DEPTH_TEMPLATE = "frame_%05d.pgm"


def read_pnm(fname):
    """Read a PGM or PPM image.

    Parameters
    ----------
    fname : str or Path
        Image file.

    Returns
    -------
    image : ndarray
        (H, W) for PGM or (H, W, 3) RGB for PPM; uint16 when the file's
        maxval exceeds 255, otherwise uint8.
    """
    fname = Path(fname)
    if not fname.exists():
        raise FileNotFoundError(f"No such image: {fname}")
    try:
        image = cv2.imread(str(fname), cv2.IMREAD_UNCHANGED)
    except cv2.error as e:
        raise FrameFormatError(f"{fname}: {e}")
    if image is None or image.size == 0:
        raise FrameFormatError(f"{fname}: not a readable PGM/PPM image.")
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
    return image


def _write_image(fname, image):
    if not cv2.imwrite(str(fname), image):
        raise OSError(f"Could not write {fname}.")


def write_pgm(fname, image, maxval=65535):
    """Write a single-channel image as binary PGM (16 bit unless maxval < 256)."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images must be two-dimensional.")
    dtype = np.uint8 if maxval < 256 else np.uint16
    _write_image(fname, np.clip(np.rint(image), 0, maxval).astype(dtype))


def write_ppm(fname, image):
    """Write an (H, W, 3) RGB uint8 image as binary PPM."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("PPM images must have shape (H, W, 3).")
    _write_image(fname, cv2.cvtColor(np.ascontiguousarray(image), cv2.COLOR_RGB2BGR))


def _parse_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_key_value(fname, parse=True):
    """Read a `key=value` text file; blank lines and `#` comments are skipped.

    Parameters
    ----------
    fname : str or Path
    parse : bool
        Convert numeric values to int/float. (default: True)

    Returns
    -------
    dict
    """
    values = {}
    with open(fname, "r") as fin:
        for lineno, line in enumerate(fin, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{fname}:{lineno}: expected key=value, got {line!r}.")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = _parse_value(value) if parse else value
    return values


def write_key_value(fname, values):
    with open(fname, "w") as fout:
        for key, value in values.items():
            fout.write(f"{key}={value}\n")


def read_manifest(seq_dir):
    return read_key_value(Path(seq_dir) / MANIFEST_NAME)


def write_manifest(seq_dir, values):
    write_key_value(Path(seq_dir) / MANIFEST_NAME, values)


def frame_paths(seq_dir, index):
    """(color, depth) file paths of frame `index` in a sequence directory."""
    seq_dir = Path(seq_dir)
    return seq_dir / (COLOR_TEMPLATE % index), seq_dir / (DEPTH_TEMPLATE % index)


def load_frame(seq_dir, index):
    color_path, depth_path = frame_paths(seq_dir, index)
    color = read_pnm(color_path)
    depth = read_pnm(depth_path)
    if color.ndim != 3 or depth.ndim != 2:
        raise FrameFormatError(f"Frame {index}: expected a PPM color and a PGM depth image.")
    return RgbdFrame(color, depth.astype(float))


def save_frame(seq_dir, index, frame):
    color_path, depth_path = frame_paths(seq_dir, index)
    write_ppm(color_path, frame.color)
    write_pgm(depth_path, frame.depth)


def count_frames(seq_dir):
    """Number of frames in a sequence, from the manifest if present."""
    seq_dir = Path(seq_dir)
    if (seq_dir / MANIFEST_NAME).exists():
        manifest = read_manifest(seq_dir)
        if "frames" in manifest:
            return int(manifest["frames"])
    n = 0
    while all(p.exists() for p in frame_paths(seq_dir, n)):
        n += 1
    return n
