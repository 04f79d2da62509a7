#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Semi-implicit minimisation of the tracking energy.

Each iteration solves (K + alpha I) V_t = alpha V_{t-1} + F(V_{t-1}) where the
smoothness term is implicit and the data forces F are evaluated at the
previous iterate. K and alpha are fixed for a sequence, so the system is
factorised once.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .energy import (
    EnergyParams,
    data_targets,
    grad_boundary,
    grad_correspondence,
    grad_depth,
    psi_total,
)
from .errors import Diverged, NotPositiveDefinite
from .mesh.mesh import MeshState

logger = logging.getLogger(__name__)

__all__ = ["SolverConfig", "FactoredSystem", "DataForces", "prefactor", "data_forces", "iterate", "solve_frame"]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls of solve_frame.

    Attributes
    ----------
    params : EnergyParams
    max_iterations : int
    convergence_tol : float
        Stop when no vertex moves farther than this in one iteration.
    refresh_every : int
        Iterations between re-evaluations of the depth and boundary targets.
    """

    params: EnergyParams = field(default_factory=EnergyParams)
    max_iterations: int = 100
    convergence_tol: float = 0.01
    refresh_every: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1.")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive.")
        if self.refresh_every < 1:
            raise ValueError("refresh_every must be at least 1.")


class FactoredSystem:
    """A factorisation of K + alpha I, reusable across right-hand sides."""

    def __init__(self, matrix, lu, alpha):
        self.matrix = matrix
        self.alpha = float(alpha)
        self._lu = lu

    @property
    def n(self):
        return self.matrix.shape[0]

    def solve(self, rhs):
        """Solve for an (n,) or (n, k) right-hand side."""
        rhs = np.ascontiguousarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ValueError(f"Right-hand side has {rhs.shape[0]} rows, system has {self.n}.")
        if self.n == 0:
            return rhs.copy()
        return self._lu.solve(rhs)


def prefactor(K, alpha):
    """Factorise K + alpha I.

    Parameters
    ----------
    K : sparse matrix
        Symmetric positive semidefinite smoothness matrix.
    alpha : float
        Adaptation rate (> 0).

    Returns
    -------
    FactoredSystem
    """
    if not alpha > 0:
        raise NotPositiveDefinite(f"alpha must be positive (got {alpha}).")
    n = K.shape[0]
    A = (sps.csc_matrix(K, dtype=float) + alpha * sps.identity(n, format="csc")).tocsc()
    if n == 0:
        return FactoredSystem(A, None, alpha)
    if abs(A - A.T).max() > 0:
        raise NotPositiveDefinite("K is not symmetric.")

    lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
    pivots = lu.U.diagonal()
    if not np.all(pivots > 0):
        raise NotPositiveDefinite("Non-positive pivot in the factorisation of K + alpha I.")
    logger.debug(f"Factorised {n}x{n} system with {lu.L.nnz + lu.U.nnz} non-zeros in L+U.")
    return FactoredSystem(A, lu, alpha)


class DataForces(NamedTuple):
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    def stacked(self):
        return np.column_stack((self.fx, self.fy, self.fz))


def data_forces(state, mesh, inputs, params, targets=None):
    """Explicit right-hand-side contributions: -lambda times each data gradient.

    Correspondence and boundary forces act on all three axes, depth on Z only.
    """
    if targets is None:
        targets = data_targets(state, mesh, inputs, params)
    cx, cy, cz = grad_correspondence(state, inputs.correspondences)
    fx = -params.lambda_c * cx
    fy = -params.lambda_c * cy
    fz = -params.lambda_c * cz
    if targets.depth is not None:
        fz = fz - params.lambda_d * grad_depth(state, inputs.frame, targets=targets.depth)
    if targets.boundary is not None:
        bx, by, bz = grad_boundary(state, mesh, inputs.segmentation, targets=targets.boundary)
        fx = fx - params.lambda_b * bx
        fy = fy - params.lambda_b * by
        fz = fz - params.lambda_b * bz
    return DataForces(fx, fy, fz)


def iterate(state_prev, system, forces):
    """One semi-implicit step: solve (K + alpha I) V = alpha V_prev + F."""
    rhs = system.alpha * state_prev.vertices + forces.stacked()
    return MeshState.from_vertices(system.solve(rhs))


def solve_frame(state_init, mesh, inputs, config, system=None):
    """Minimise the energy for one frame starting from `state_init`.

    Parameters
    ----------
    state_init : MeshState
        Previous frame's solution (the canonical state for frame 1).
    mesh : CanonicalMesh
    inputs : FrameInputs
    config : SolverConfig
    system : FactoredSystem, optional
        Factorisation of K + alpha I; built here when omitted.

    Returns
    -------
    state : MeshState
    trace : list of EnergyBreakdown
        One entry per iteration, at the iterate the forces were computed
        from, plus a final entry at the returned state.
    """
    params = config.params
    if system is None:
        system = prefactor(mesh.K, params.alpha)
    elif system.alpha != params.alpha:
        raise ValueError(f"System was factorised with alpha={system.alpha}, params use {params.alpha}.")

    state = state_init.copy()
    trace: List = []
    targets = None
    converged = False
    for it in range(config.max_iterations):
        if targets is None or it % config.refresh_every == 0:
            targets = data_targets(state, mesh, inputs, params)
        trace.append(psi_total(state, mesh, inputs, params, targets))
        new = iterate(state, system, data_forces(state, mesh, inputs, params, targets))
        if not new.is_finite():
            raise Diverged(f"Non-finite vertex coordinates at iteration {it}.")
        step = new.max_displacement(state)
        state = new
        logger.debug(f"iteration {it}: total {trace[-1].total:.6g}, step {step:.4g}")
        if step < config.convergence_tol:
            converged = True
            break

    trace.append(psi_total(state, mesh, inputs, params))
    if not converged:
        logger.warning(f"No convergence after {config.max_iterations} iterations (last step {step:.4g}).")
    return state, trace
