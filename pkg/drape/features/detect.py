#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Keypoint detection and description."""

import abc
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

__all__ = ["Keypoint", "Detector", "HessianBlobDetector", "detect", "keypoint_positions"]


@dataclass(frozen=True, eq=False)
class Keypoint:
    """An interest point with its descriptor.

    Attributes
    ----------
    x, y : float
        Position in pixels (column, row).
    scale : float
        Detection scale (Gaussian sigma) in pixels.
    response : float
        Detector strength; larger is stronger.
    descriptor : ndarray
        Fixed-length real descriptor.
    """

    x: float
    y: float
    scale: float
    response: float
    descriptor: np.ndarray = field(repr=False)

    @property
    def position(self):
        return (self.x, self.y)


def keypoint_positions(keypoints: Sequence[Keypoint]):
    """(k, 2) array of keypoint positions."""
    return np.array([kp.position for kp in keypoints], dtype=float).reshape(-1, 2)


class Detector(abc.ABC):
    """Grayscale image (and optional mask) in, keypoints with descriptors out."""

    @abc.abstractmethod
    def detect(self, gray, mask=None) -> List[Keypoint]:
        ...


class HessianBlobDetector(Detector):
    """Scale-normalised determinant-of-Hessian blob detector.

    Blobs are local maxima over position and scale of
    sigma^4 (Lxx Lyy - Lxy^2). Each is described by sums of gradients and of
    absolute gradients over a 4x4 grid of cells around it, giving a 64-D
    L2-normalised vector.

    Parameters
    ----------
    sigmas : sequence of float
        Increasing scale ladder in pixels.
    threshold : float
        Minimum response, for intensities in [0, 1].
    grid : int
        Descriptor cells per side. (default: 4)
    """

    def __init__(self, sigmas=(1.5, 2.0, 2.8, 4.0), threshold=1e-3, grid=4):
        self.sigmas = tuple(float(s) for s in sigmas)
        if len(self.sigmas) < 1 or any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive.")
        self.threshold = float(threshold)
        self.grid = int(grid)

    @property
    def descriptor_size(self):
        return 4 * self.grid * self.grid

    def responses(self, gray):
        """(S, H, W) stack of scale-normalised Hessian determinants."""
        gray = np.asarray(gray, dtype=float)
        stack = np.empty((len(self.sigmas),) + gray.shape)
        for i, s in enumerate(self.sigmas):
            lxx = ndimage.gaussian_filter(gray, s, order=(0, 2))
            lyy = ndimage.gaussian_filter(gray, s, order=(2, 0))
            lxy = ndimage.gaussian_filter(gray, s, order=(1, 1))
            stack[i] = s ** 4 * (lxx * lyy - lxy ** 2)
        return stack

    def _cell_size(self, sigma):
        return max(2, int(round(1.25 * sigma)))

    def detect(self, gray, mask=None):
        gray = np.asarray(gray, dtype=float)
        stack = self.responses(gray)
        peaks = (stack == ndimage.maximum_filter(stack, size=(3, 3, 3), mode="nearest")) & (stack > self.threshold)
        scale_idx, rows, cols = np.nonzero(peaks)
        if mask is not None:
            keep = np.asarray(mask, dtype=bool)[rows, cols]
            scale_idx, rows, cols = scale_idx[keep], rows[keep], cols[keep]
        if rows.size == 0:
            return []

        response = stack[scale_idx, rows, cols]
        order = np.lexsort((cols, rows, -response))

        smooth = ndimage.gaussian_filter(gray, 1.0)
        gx = ndimage.sobel(smooth, axis=1) / 8.0
        gy = ndimage.sobel(smooth, axis=0) / 8.0
        pad = 2 * self._cell_size(max(self.sigmas)) + 1
        gx = np.pad(gx, pad, mode="edge")
        gy = np.pad(gy, pad, mode="edge")

        keypoints = []
        for o in order:
            sigma = self.sigmas[scale_idx[o]]
            desc = self._describe(gx, gy, rows[o] + pad, cols[o] + pad, sigma)
            keypoints.append(Keypoint(float(cols[o]), float(rows[o]), sigma, float(response[o]), desc))
        return keypoints

    def _describe(self, gx, gy, row, col, sigma):
        cell = self._cell_size(sigma)
        half = self.grid * cell // 2
        window = (slice(row - half, row - half + self.grid * cell), slice(col - half, col - half + self.grid * cell))
        dx, dy = gx[window], gy[window]
        shape = (self.grid, cell, self.grid, cell)
        parts = [
            dx.reshape(shape).sum(axis=(1, 3)),
            dy.reshape(shape).sum(axis=(1, 3)),
            np.abs(dx).reshape(shape).sum(axis=(1, 3)),
            np.abs(dy).reshape(shape).sum(axis=(1, 3)),
        ]
        desc = np.stack(parts, axis=-1).ravel()
        norm = np.linalg.norm(desc)
        return desc / norm if norm > 0 else desc


def detect(frame, seg, detector=None):
    """Detect keypoints on a frame, keeping only those on the foreground.

    Parameters
    ----------
    frame : RgbdFrame
    seg : Segmentation
        Foreground of `frame`; keypoints whose pixel is background are dropped.
    detector : Detector, optional
        Defaults to HessianBlobDetector().

    Returns
    -------
    list of Keypoint
        Ordered by decreasing response, then row, then column.
    """
    detector = detector or HessianBlobDetector()
    keypoints = detector.detect(frame.gray())
    H, W = seg.shape
    kept = []
    for kp in keypoints:
        col, row = int(np.floor(kp.x + 0.5)), int(np.floor(kp.y + 0.5))
        if 0 <= col < W and 0 <= row < H and seg.foreground[row, col]:
            kept.append(kp)
    logger.debug(f"Detected {len(keypoints)} keypoints, {len(kept)} on the foreground.")
    return kept
