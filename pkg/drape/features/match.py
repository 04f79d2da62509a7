#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Putative descriptor matching between canonical and current keypoints."""

import logging
from collections.abc import Mapping
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .detect import keypoint_positions

logger = logging.getLogger(__name__)

__all__ = ["Match", "putative_match", "KEEP_FRACTION"]

KEEP_FRACTION = 0.5


class Match(NamedTuple):
    canonical: int
    current: int
    distance: float


def _previous_array(canonical, previous_positions):
    positions = keypoint_positions(canonical)
    if previous_positions is None:
        return positions
    if isinstance(previous_positions, Mapping):
        for i, xy in previous_positions.items():
            positions[i] = xy
        return positions
    previous = np.asarray(previous_positions, dtype=float).reshape(-1, 2)
    if previous.shape[0] != len(canonical):
        raise ValueError(f"Expected {len(canonical)} previous positions, got {previous.shape[0]}.")
    return previous


def putative_match(canonical, current, previous_positions=None, gate=np.inf):
    """Match canonical keypoints to the current frame's keypoints.

    Every canonical keypoint takes the current keypoint with the smallest
    Euclidean descriptor distance among those within `gate` pixels of the
    feature's previous-frame position. The candidates are ordered by
    (distance, canonical index, current index), made one-to-one greedily, and
    only the best half (rounded up) is kept.

    Parameters
    ----------
    canonical, current : list of Keypoint
    previous_positions : array_like or mapping, optional
        (len(canonical), 2) positions, or {canonical index: (x, y)}; missing
        entries default to the canonical keypoint position.
    gate : float
        Search radius in pixels (> 0, may be inf).

    Returns
    -------
    list of Match
    """
    if not gate > 0:
        raise ValueError(f"Match gate must be positive (got {gate}).")
    if len(canonical) == 0 or len(current) == 0:
        return []

    dist = cdist(
        np.stack([kp.descriptor for kp in canonical]), np.stack([kp.descriptor for kp in current]), "euclidean"
    )
    if np.isfinite(gate):
        previous = _previous_array(canonical, previous_positions)
        near = cdist(previous, keypoint_positions(current)) <= gate
        dist = np.where(near, dist, np.inf)

    best = np.argmin(dist, axis=1)
    best_dist = dist[np.arange(len(canonical)), best]
    candidates = sorted((float(best_dist[i]), i, int(best[i])) for i in np.flatnonzero(np.isfinite(best_dist)))

    taken = set()
    unique = []
    for d, i, j in candidates:
        if j in taken:
            continue
        taken.add(j)
        unique.append(Match(int(i), j, d))

    n_keep = int(np.ceil(KEEP_FRACTION * len(unique)))
    logger.debug(f"Putative matches: {len(candidates)} candidates, {len(unique)} one-to-one, {n_keep} kept.")
    return unique[:n_keep]
