#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Run configuration for tracking: embedded defaults, key=value files and overrides."""

import dataclasses
import logging
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .energy import EnergyParams
from .errors import ConfigError
from .rgbd.io import read_key_value
from .solver import SolverConfig

logger = logging.getLogger(__name__)

__all__ = ["RunConfig", "CORRESPONDENCE_SOURCES"]

CORRESPONDENCE_SOURCES = ("csv", "detector", "none")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name, kind, value):
    if isinstance(value, str):
        text = value.strip()
        if typing.get_origin(kind) is typing.Union:
            if text.lower() in ("", "none", "auto"):
                return None
            kind = next(a for a in typing.get_args(kind) if a is not type(None))
        if kind is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ConfigError(f"{name}: expected a boolean, got {value!r}.")
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"{name}: cannot read {value!r} as {kind.__name__}.")
    return value


@dataclass
class RunConfig:
    """Every tunable of a tracking run.

    `z_near` and `z_far` default to the values in the sequence manifest;
    `output` defaults to `<sequence>/track`. The ablation flags zero the
    corresponding weight when the energy parameters are built.
    """

    sequence: str = "."
    output: Optional[str] = None
    spacing: float = 10.0
    z_near: Optional[float] = None
    z_far: Optional[float] = None
    fill_holes: bool = True
    lambda_c: float = 1.3
    lambda_d: float = 0.6
    lambda_b: float = 0.8
    alpha: float = 10.0
    occlusion_threshold: Optional[float] = None
    boundary_gate: float = 3.0
    max_iterations: int = 100
    convergence_tol: float = 0.01
    refresh_every: int = 1
    correspondences: str = "csv"
    match_gate: float = 3.0
    disable_depth: bool = False
    disable_boundary: bool = False

    def __post_init__(self):
        hints = typing.get_type_hints(type(self))
        for f in dataclasses.fields(self):
            setattr(self, f.name, _coerce(f.name, hints[f.name], getattr(self, f.name)))
        self.validate()

    def validate(self):
        if self.correspondences not in CORRESPONDENCE_SOURCES:
            raise ConfigError(f"correspondences must be one of {CORRESPONDENCE_SOURCES}, got {self.correspondences!r}.")
        if self.spacing < 2:
            raise ConfigError(f"spacing must be at least 2 pixels (got {self.spacing}).")
        if self.z_near is not None and self.z_far is not None and not self.z_near < self.z_far:
            raise ConfigError(f"z_near ({self.z_near}) must be below z_far ({self.z_far}).")
        if not self.match_gate > 0:
            raise ConfigError("match_gate must be positive.")
        try:
            self.solver_config()
        except ValueError as e:
            raise ConfigError(str(e))

    @classmethod
    def from_mapping(cls, values):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}.")
        return cls(**values)

    @classmethod
    def load(cls, fname=None, **overrides):
        """Defaults, then the key=value file (if any), then keyword overrides."""
        values = {}
        if fname is not None:
            try:
                values.update(read_key_value(fname, parse=False))
            except ValueError as e:
                raise ConfigError(str(e))
            logger.info(f"Read configuration from {fname}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    def dump(self):
        """The configuration as key=value lines, readable by `load`."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name}={'none' if value is None else value}")
        return "\n".join(lines) + "\n"

    @property
    def output_dir(self):
        return Path(self.output) if self.output is not None else Path(self.sequence) / "track"

    def energy_params(self):
        return EnergyParams(
            lambda_c=self.lambda_c,
            lambda_d=0.0 if self.disable_depth else self.lambda_d,
            lambda_b=0.0 if self.disable_boundary else self.lambda_b,
            alpha=self.alpha,
            occlusion_threshold=self.occlusion_threshold,
            boundary_gate=self.boundary_gate,
        )

    def solver_config(self):
        return SolverConfig(
            params=self.energy_params(),
            max_iterations=self.max_iterations,
            convergence_tol=self.convergence_tol,
            refresh_every=self.refresh_every,
        )
