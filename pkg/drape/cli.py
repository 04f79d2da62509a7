#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Command-line interface: ``drape synth | track | eval | export-cloud | plot``."""

import logging
import os
import sys
from pathlib import Path

import click
import coloredlogs

from .config import CORRESPONDENCE_SOURCES, RunConfig
from .errors import ConfigError, CountMismatch, Diverged, DrapeError, FrameFormatError, NotPositiveDefinite

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _fail(code, message):
    logger.error(message)
    sys.exit(code)


@click.group()
def main():
    """Track non-rigid surfaces through RGBD sequences."""
    coloredlogs.install(level=os.getenv("LOG_LEVEL", "INFO"), logger=logging.getLogger("drape"))


@main.command()
@click.argument("scenario")
@click.option("--seed", type=click.INT, default=0, show_default=True)
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), required=True)
@click.option("--frames", type=click.INT, help="Override the scenario's frame count.")
@click.option("--density", type=click.FLOAT, help="Texture features per 100x100 px.")
@click.option("--noise", type=click.FLOAT, default=2.0, show_default=True, help="Depth noise sigma.")
@click.option("--dropout", type=click.FLOAT, default=0.01, show_default=True, help="Invalid-pixel fraction.")
def synth(scenario, seed, out_dir, frames, density, noise, dropout):
    """Render a synthetic SCENARIO with ground truth into OUT_DIR."""
    from .synth import SCENARIOS, generate_sequence, write_sequence

    if scenario not in SCENARIOS:
        _fail(EXIT_CONFIG, f"Unknown scenario {scenario!r}; choose from {', '.join(sorted(SCENARIOS))}.")
    try:
        seq = generate_sequence(scenario, seed=seed, frames=frames, density=density, noise_sigma=noise, dropout=dropout)
        write_sequence(seq, out_dir)
    except OSError as e:
        _fail(EXIT_IO, str(e))


@main.command()
@click.argument("sequence", type=click.Path(file_okay=False))
@click.option("--config", "config_file", type=click.Path(dir_okay=False), help="key=value configuration file.")
@click.option("--output", "-o", type=click.Path(file_okay=False), help="Output directory. [default: SEQUENCE/track]")
@click.option("--spacing", type=click.FLOAT)
@click.option("--z-near", type=click.FLOAT)
@click.option("--z-far", type=click.FLOAT)
@click.option("--lambda-c", type=click.FLOAT)
@click.option("--lambda-d", type=click.FLOAT)
@click.option("--lambda-b", type=click.FLOAT)
@click.option("--alpha", type=click.FLOAT)
@click.option("--occlusion-threshold", type=click.FLOAT)
@click.option("--max-iterations", type=click.INT)
@click.option("--tol", "convergence_tol", type=click.FLOAT)
@click.option("--refresh-every", type=click.INT)
@click.option("--correspondences", type=click.Choice(CORRESPONDENCE_SOURCES))
@click.option("--match-gate", type=click.FLOAT, help="Match search radius in mesh spacings.")
@click.option("--disable-depth", is_flag=True, help="Ablate the depth term.")
@click.option("--disable-boundary", is_flag=True, help="Ablate the boundary term.")
@click.option("--dump-config", is_flag=True, help="Print the effective configuration and exit.")
def track(sequence, config_file, dump_config, disable_depth, disable_boundary, **overrides):
    """Track the surface through SEQUENCE."""
    from .track import track_sequence

    if disable_depth:
        overrides["disable_depth"] = True
    if disable_boundary:
        overrides["disable_boundary"] = True
    try:
        config = RunConfig.load(config_file, sequence=sequence, **overrides)
    except (ConfigError, OSError) as e:
        _fail(EXIT_CONFIG, str(e))

    if dump_config:
        click.echo(config.dump(), nl=False)
        return

    try:
        track_sequence(config)
    except (Diverged, NotPositiveDefinite) as e:
        _fail(EXIT_DIVERGED, f"Solver failed: {e}")
    except (OSError, FrameFormatError, CountMismatch) as e:
        _fail(EXIT_IO, str(e))
    except (DrapeError, ValueError) as e:
        # no usable mesh or foreground under these settings
        _fail(EXIT_CONFIG, str(e))


@main.command("eval")
@click.argument("est_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("truth_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--sequence", type=click.Path(exists=True, file_okay=False), help="Enables visible-vertex RMSE.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="[default: EST_DIR/metrics.csv]")
def evaluate(est_dir, truth_dir, sequence, output):
    """Compare EST_DIR meshes against TRUTH_DIR meshes."""
    from .evaluate import evaluate_sequence, write_metrics

    output = Path(output) if output else Path(est_dir) / "metrics.csv"
    try:
        metrics = evaluate_sequence(est_dir, truth_dir, sequence=sequence)
        write_metrics(metrics, output)
    except (CountMismatch, OSError, FrameFormatError, ValueError) as e:
        _fail(EXIT_IO, str(e))
    click.echo(metrics.to_string(index=False))


@main.command("export-cloud")
@click.argument("obj_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("ply_file", type=click.Path(dir_okay=False))
@click.option("--fx", type=click.FLOAT, default=None, help="Focal length in pixels; omit to export raw (x, y, depth).")
@click.option("--fy", type=click.FLOAT, default=None)
@click.option("--cx", type=click.FLOAT, default=None)
@click.option("--cy", type=click.FLOAT, default=None)
@click.option("--depth-scale", type=click.FLOAT, default=1.0, show_default=True)
def export_cloud(obj_file, ply_file, fx, fy, cx, cy, depth_scale):
    """Convert OBJ_FILE vertices to a PLY point cloud."""
    from .mesh.io import read_obj, unproject_pinhole, write_ply_points

    try:
        vertices, _ = read_obj(obj_file)
        if fx is not None:
            points = unproject_pinhole(
                vertices, fx, fy if fy is not None else fx, cx or 0.0, cy or 0.0, depth_scale=depth_scale
            )
        else:
            points = vertices
        write_ply_points(ply_file, points)
    except (OSError, ValueError) as e:
        _fail(EXIT_IO, str(e))


@main.command()
@click.argument("track_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--metrics", type=click.Path(exists=True, dir_okay=False), help="metrics.csv from `drape eval`.")
@click.option("--output-dir", "-o", type=click.Path(file_okay=False))
def plot(track_dir, metrics, output_dir):
    """Plot the energy trace (and errors) of a tracking run."""
    import matplotlib

    matplotlib.use("Agg")
    import seaborn as sns

    from .plotutils import save_track_plots

    sns.set("talk", "ticks", font_scale=1.0, rc={"lines.linewidth": 2, "figure.figsize": (10, 5)})
    save_track_plots(track_dir, metrics, output_dir)


if __name__ == "__main__":
    main()
