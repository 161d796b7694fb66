"""Command line front end: run a manifest, synthesize fixtures, inspect files."""

import os
import sys

import click
import numpy as np

from . import imageio, pipeline, synth
from .config import save_config, PipelineConfig


@click.group()
def main():
    """Day-to-night simulation pipeline."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Job manifest (INI).")
@click.option("--seed", type=int, default=None, help="Override the manifest seed.")
@click.option("--stages", default=None,
              help="Last stage to run: filter, refine, mesh, postprocess, relight or all.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override the output directory.")
def run(config_path, seed, stages, out_dir):
    """Execute the pipeline described by a job manifest."""
    try:
        manifest = pipeline.read_manifest(config_path)
        if seed is not None:
            manifest.seed = seed
            if manifest.activation_seeds == (manifest.config.rng_seed,):
                manifest.activation_seeds = (seed,)
        if stages is not None:
            manifest.stages = stages
            manifest.__post_init__()
        if out_dir is not None:
            manifest.out_dir = out_dir
    except pipeline.ManifestError as exc:
        click.echo(f"manifest error: {exc}", err=True)
        sys.exit(2)
    try:
        artifacts = pipeline.run_pipeline(manifest)
    except pipeline.StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(pipeline.STAGE_EXIT_CODES.get(exc.stage, 1))
    for name, path in sorted(artifacts.items()):
        click.echo(f"{name}: {path}")


@main.command("synth")
@click.option("--kind", type=click.Choice(synth.KINDS), default="car-on-road")
@click.option("--size", type=int, default=64)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--manifest/--no-manifest", default=True,
              help="Also write a ready-to-run job manifest.")
def synth_cmd(kind, size, seed, out_dir, manifest):
    """Generate a synthetic input bundle (and optionally a manifest)."""
    bundle = synth.synth_scene(kind, size=size, seed=seed)
    paths = synth.save_bundle(bundle, out_dir)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")
    if manifest:
        mpath = os.path.join(out_dir, "job.ini")
        lines = ["[inputs]"]
        lines += [f"{k} = {os.path.basename(v)}" for k, v in sorted(paths.items())]
        lines += ["", "[run]", "out = out", "stages = all", f"seed = {seed}",
                  f"activation_seeds = {seed}", "profile = default", ""]
        with open(mpath, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines))
        click.echo(f"manifest: {mpath}")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def inspect(path):
    """Print a summary of a PFM, PNG or config/manifest file."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pfm":
        g = imageio.read_pfm(path)
        d = g.data
        click.echo(f"PFM {g.width}x{g.height} channels={g.channels} "
                   f"min={d.min():.6g} max={d.max():.6g} mean={d.mean():.6g}")
    elif ext == ".png":
        try:
            g = imageio.read_png(path)
            bits = 8
        except imageio.ImageIOError:
            g = imageio.read_png16(path)
            bits = 16
        d = g.data
        uniq = np.unique(d)
        extra = f" values={uniq[:8].tolist()}" if uniq.size <= 8 else ""
        click.echo(f"PNG {g.width}x{g.height} channels={g.channels} {bits}-bit "
                   f"min={d.min():g} max={d.max():g}{extra}")
    elif ext == ".ini":
        with open(path, "r", encoding="utf-8") as fh:
            click.echo(fh.read().rstrip())
    else:
        click.echo(f"don't know how to inspect {ext!r} files", err=True)
        sys.exit(2)


@main.command("write-config")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def write_config(out_path):
    """Write a config file populated with the default parameter values."""
    save_config(PipelineConfig(), out_path)
    click.echo(out_path)


if __name__ == "__main__":
    main()
