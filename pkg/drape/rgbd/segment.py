#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Depth-band foreground segmentation and nearest-boundary lookup."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import NoForeground, OutOfBounds

logger = logging.getLogger(__name__)

__all__ = [
    "Segmentation",
    "segment_foreground",
    "segmentation_from_mask",
    "boundary_mask",
    "nearest_boundary_point3d",
    "nearest_boundary_points",
]


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Foreground mask of a frame plus precomputed boundary lookups.

    Attributes
    ----------
    foreground : ndarray
        (H, W) boolean mask.
    boundary_pixels : ndarray
        (nb, 2) integer (col, row) of boundary pixels in raster order.
    nearest_boundary : ndarray
        (H, W) index into `boundary_pixels` of the closest boundary pixel.
    boundary_distance : ndarray
        (H, W) Euclidean distance to that pixel.
    boundary_depth : ndarray
        (nb,) depth at each boundary pixel, NaN where the reading is invalid.
    nearest_valid_boundary : ndarray
        (H, W) index of the closest boundary pixel with valid depth, -1 if none.
    """

    foreground: np.ndarray
    boundary_pixels: np.ndarray
    nearest_boundary: np.ndarray
    boundary_distance: np.ndarray
    boundary_depth: np.ndarray
    nearest_valid_boundary: np.ndarray

    @property
    def shape(self):
        return self.foreground.shape


def boundary_mask(foreground):
    """Foreground pixels with a 4-neighbour in the background (or off-image)."""
    fg = np.asarray(foreground, dtype=bool)
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    interior = (
        padded[1:-1, 1:-1] & padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return fg & ~interior


def segmentation_from_mask(foreground, frame):
    """Build a Segmentation from an explicit foreground mask."""
    foreground = np.asarray(foreground, dtype=bool)
    if foreground.shape != frame.shape:
        raise ValueError(f"Mask shape {foreground.shape} does not match frame shape {frame.shape}.")
    if not foreground.any():
        raise NoForeground("The foreground mask is empty.")

    edge = boundary_mask(foreground)
    rows, cols = np.nonzero(edge)
    index = np.full(foreground.shape, -1, dtype=np.intp)
    index[rows, cols] = np.arange(rows.size)

    distance, (ir, ic) = ndimage.distance_transform_edt(~edge, return_indices=True)
    nearest = index[ir, ic]

    valid = frame.validity[rows, cols]
    depth = np.where(valid, frame.depth[rows, cols], np.nan)

    valid_edge = edge & frame.validity
    if valid_edge.any():
        _, (vr, vc) = ndimage.distance_transform_edt(~valid_edge, return_indices=True)
        nearest_valid = index[vr, vc]
    else:
        logger.warning("No boundary pixel carries a valid depth reading.")
        nearest_valid = np.full(foreground.shape, -1, dtype=np.intp)

    return Segmentation(
        foreground=foreground,
        boundary_pixels=np.column_stack((cols, rows)),
        nearest_boundary=nearest,
        boundary_distance=distance,
        boundary_depth=depth,
        nearest_valid_boundary=nearest_valid,
    )


def segment_foreground(frame, z_near, z_far, fill_holes=True):
    """Segment the object as the largest connected region inside a depth band.

    Parameters
    ----------
    frame : RgbdFrame
    z_near, z_far : float
        Inclusive depth band.
    fill_holes : bool
        Close enclosed background holes (dropout) in the selected region.

    Returns
    -------
    Segmentation
    """
    if not z_near < z_far:
        raise ValueError(f"Depth band is empty: z_near={z_near}, z_far={z_far}.")
    band = frame.validity & (frame.depth >= z_near) & (frame.depth <= z_far)
    labels, count = ndimage.label(band)
    if count == 0:
        raise NoForeground(f"No valid depth in [{z_near}, {z_far}].")

    sizes = np.bincount(labels.ravel())[1:]
    # argmax picks the lowest label on ties
    foreground = labels == (int(np.argmax(sizes)) + 1)
    if fill_holes:
        foreground = ndimage.binary_fill_holes(foreground)
    logger.debug(f"Kept the largest of {count} components ({foreground.sum()} pixels).")
    return segmentation_from_mask(foreground, frame)


def nearest_boundary_points(seg, xs, ys):
    """Vectorised nearest boundary point lookup.

    Positions are rounded to the nearest pixel. When the closest boundary
    pixel has no valid depth the closest one that does is used instead.

    Returns
    -------
    ndarray
        (k, 3) points (col, row, depth); rows are NaN for queries outside
        the image or when no boundary pixel has valid depth.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    H, W = seg.shape
    out = np.full((xs.size, 3), np.nan)
    with np.errstate(invalid="ignore"):
        col = np.floor(xs + 0.5)
        row = np.floor(ys + 0.5)
    inside = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < W) & (row >= 0) & (row < H)
    if not inside.any():
        return out
    col = col[inside].astype(np.intp)
    row = row[inside].astype(np.intp)

    k = seg.nearest_boundary[row, col]
    missing = np.isnan(seg.boundary_depth[k])
    k[missing] = seg.nearest_valid_boundary[row[missing], col[missing]]
    found = k >= 0

    pts = np.full((k.size, 3), np.nan)
    pts[found, :2] = seg.boundary_pixels[k[found]]
    pts[found, 2] = seg.boundary_depth[k[found]]
    out[inside] = pts
    return out


def nearest_boundary_point3d(seg, frame, v):
    """Closest foreground boundary pixel to a vertex, lifted to 3D.

    Parameters
    ----------
    seg : Segmentation
        Segmentation of `frame`.
    frame : RgbdFrame
        Supplies the depth of the boundary pixel.
    v : array_like
        Vertex (x, y[, z]); only x and y are used.

    Returns
    -------
    ndarray
        (col, row, depth) of the boundary pixel.
    """
    x, y = float(v[0]), float(v[1])
    H, W = seg.shape
    col, row = int(np.floor(x + 0.5)), int(np.floor(y + 0.5))
    if not (0 <= col < W and 0 <= row < H):
        raise OutOfBounds(f"({x}, {y}) is outside the {W}x{H} image.")
    k = seg.nearest_boundary[row, col]
    bc, br = seg.boundary_pixels[k]
    if not frame.validity[br, bc]:
        k = seg.nearest_valid_boundary[row, col]
        if k < 0:
            raise NoForeground("No boundary pixel carries a valid depth reading.")
        bc, br = seg.boundary_pixels[k]
    return np.array([bc, br, frame.depth[br, bc]], dtype=float)
