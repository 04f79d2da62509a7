#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""RGBD frames and depth sampling."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from ..errors import OutOfBounds

logger = logging.getLogger(__name__)

__all__ = ["RgbdFrame", "bilinear_sample", "sample_depth", "sample_depth_many", "estimate_depth_noise", "to_gray"]

MAD_TO_SIGMA = 1.4826


def to_gray(color):
    """Luma of an RGB uint8 image, scaled to [0, 1]."""
    color = np.asarray(color, dtype=float)
    return (0.299 * color[..., 0] + 0.587 * color[..., 1] + 0.114 * color[..., 2]) / 255.0


@dataclass(frozen=True, eq=False)
class RgbdFrame:
    """A registered color and depth image pair.

    Parameters
    ----------
    color : ndarray
        (H, W, 3) uint8 image.
    depth : ndarray
        (H, W) depth in sensor units; zero or non-finite means no reading.
    validity : ndarray, optional
        Explicit (H, W) validity mask, combined with the depth test.
    """

    color: np.ndarray
    depth: np.ndarray
    validity: Optional[np.ndarray] = None

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=float)
        color = np.asarray(self.color)
        if color.ndim == 2:
            color = np.repeat(color[..., None], 3, axis=2)
        color = color.astype(np.uint8, copy=False)
        if color.shape[:2] != depth.shape:
            raise ValueError(f"Color shape {color.shape[:2]} does not match depth shape {depth.shape}.")
        valid = np.isfinite(depth) & (depth > 0)
        if self.validity is not None:
            valid &= np.asarray(self.validity, dtype=bool)
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "depth", np.where(valid, depth, 0.0))
        object.__setattr__(self, "validity", valid)

    @property
    def shape(self):
        return self.depth.shape

    @property
    def height(self):
        return self.depth.shape[0]

    @property
    def width(self):
        return self.depth.shape[1]

    def gray(self):
        return to_gray(self.color)

    def contains(self, x, y):
        return (0 <= x <= self.width - 1) and (0 <= y <= self.height - 1)


def bilinear_sample(depth, valid, xs, ys):
    """Bilinearly interpolate a depth image, ignoring invalid neighbours.

    Weights of the four surrounding pixels are renormalised over those
    holding valid depth. Queries outside [0, W-1] x [0, H-1], or whose
    weighted neighbours are all invalid, give NaN.

    Parameters
    ----------
    depth : ndarray
        (H, W) depth image.
    valid : ndarray
        (H, W) boolean validity.
    xs, ys : array_like
        Column and row coordinates (broadcastable).

    Returns
    -------
    ndarray
        Interpolated depth with the broadcast shape of xs and ys.
    """
    xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    H, W = depth.shape
    out = np.full(xs.shape, np.nan)
    inside = np.isfinite(xs) & np.isfinite(ys) & (xs >= 0) & (xs <= W - 1) & (ys >= 0) & (ys <= H - 1)
    if not inside.any():
        return out
    x, y = xs[inside], ys[inside]

    c0 = np.clip(np.floor(x).astype(np.intp), 0, W - 1)
    r0 = np.clip(np.floor(y).astype(np.intp), 0, H - 1)
    c1 = np.minimum(c0 + 1, W - 1)
    r1 = np.minimum(r0 + 1, H - 1)
    fx = x - c0
    fy = y - r0

    num = np.zeros(x.shape)
    den = np.zeros(x.shape)
    for rr, cc, w in (
        (r0, c0, (1 - fx) * (1 - fy)),
        (r0, c1, fx * (1 - fy)),
        (r1, c0, (1 - fx) * fy),
        (r1, c1, fx * fy),
    ):
        w = np.where(valid[rr, cc], w, 0.0)
        num += w * np.where(valid[rr, cc], depth[rr, cc], 0.0)
        den += w

    with np.errstate(invalid="ignore", divide="ignore"):
        out[inside] = np.where(den > 0, num / den, np.nan)
    return out


def sample_depth(frame, x, y):
    """Depth of `frame` at sub-pixel position (x, y), NaN when no valid reading.

    Raises
    ------
    OutOfBounds
        If (x, y) lies outside the image.
    """
    if not frame.contains(x, y):
        raise OutOfBounds(f"({x}, {y}) is outside the {frame.width}x{frame.height} image.")
    return float(bilinear_sample(frame.depth, frame.validity, x, y))


def sample_depth_many(frame, xs, ys, mask=None):
    """Vectorised sample_depth; out-of-image queries give NaN instead of raising.

    If `mask` is given only pixels inside it count as valid.
    """
    valid = frame.validity if mask is None else frame.validity & mask
    return bilinear_sample(frame.depth, valid, xs, ys)


def estimate_depth_noise(frame, mask=None):
    """Robust estimate of the per-pixel depth noise.

    Uses the median absolute deviation of the residual between depth and its
    3x3 median, restricted to pixels whose whole neighbourhood is valid.

    Parameters
    ----------
    frame : RgbdFrame
    mask : ndarray, optional
        Restrict the estimate to these pixels (e.g. the foreground).

    Returns
    -------
    float
        Noise standard deviation in depth units (0 if nothing can be measured).
    """
    usable = ndimage.binary_erosion(frame.validity, structure=np.ones((3, 3), dtype=bool))
    if mask is not None:
        usable &= mask
    if not usable.any():
        return 0.0
    resid = frame.depth[usable] - ndimage.median_filter(frame.depth, size=3)[usable]
    return float(MAD_TO_SIGMA * np.median(np.abs(resid - np.median(resid))))
