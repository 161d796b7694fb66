"""Job orchestration: manifest parsing, ingestion, and the full day-to-night run.

A job manifest is an INI file with [inputs] (file paths), [run] (output
directory, stage selection, seeds, profile) and optional config sections
that override the chosen profile.  The run report written next to the
artifacts uses the same format with every value resolved, so re-feeding the
report as a manifest reproduces the run byte for byte; wall-clock stage
timings go to a separate timings file to keep the report deterministic.

Stages run in order filter -> refine -> mesh -> postprocess -> relight and
the selection must be a prefix (e.g. stages=mesh stops after mesh
construction).  Any stage failure halts the run with the stage name;
artifacts from completed stages remain on disk.
"""

import configparser
import io
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import filters, imageio, lights as lights_mod, meshio, postprocess, refine, relight
from .camera import CameraModel
from .config import PipelineConfig, _SECTIONS, _format_value, _parse_value, config_from_profile
from .grids import PixelGrid
from .mesh import (build_mesh, complete_background, complete_foreground,
                   delete_uncertain_faces, expand_uncertain_region, to_scene_mesh)
from .render import RenderSettings, render
from .validate import validate_inputs

STAGES = ("filter", "refine", "mesh", "postprocess", "relight")

#: CLI exit codes: 0 success, per-stage codes on failure.
STAGE_EXIT_CODES = {"ingest": 9, "filter": 10, "refine": 11, "mesh": 12,
                    "postprocess": 13, "relight": 14}


class ManifestError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class JobManifest:
    inputs: dict                  # name -> path
    out_dir: str
    stages: str = "all"           # last stage to run, or "all"
    seed: int = 0
    activation_seeds: tuple = ()
    profile: str = "default"
    fov_deg: float = 90.0
    width: int = 0                # 0 = native resolution
    height: int = 0
    config: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.stages != "all" and self.stages not in STAGES:
            raise ManifestError(f"unknown stage {self.stages!r}; choices: "
                                f"{('all',) + STAGES}")
        if not self.activation_seeds:
            self.activation_seeds = (self.seed,)

    def selected_stages(self):
        if self.stages == "all":
            return STAGES
        return STAGES[:STAGES.index(self.stages) + 1]


def read_manifest(path) -> JobManifest:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    if not parser.has_section("inputs") or not parser.has_section("run"):
        raise ManifestError(f"{path}: manifest needs [inputs] and [run] sections")
    base = os.path.dirname(os.path.abspath(path))

    inputs = {}
    for key, raw in parser.items("inputs"):
        p = raw if os.path.isabs(raw) else os.path.join(base, raw)
        if not os.path.exists(p):
            raise ManifestError(f"input file for {key!r} does not exist: {p}")
        inputs[key] = p
    for required in ("rgb", "depth", "normal", "semantic"):
        if required not in inputs:
            raise ManifestError(f"{path}: missing required input {required!r}")

    run = dict(parser.items("run"))
    profile = run.get("profile", "default")
    # [run] mixes run-control keys with the rng_seed/depth_scale config keys
    run_keys = {"out", "stages", "seed", "activation_seeds", "profile",
                "fov_deg", "width", "height"}
    params = {}
    for section, names in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if section == "run" and key in run_keys:
                continue
            if key not in names:
                raise ManifestError(f"unknown config key {key!r} in [{section}]")
            params[key] = _parse_value(key, raw)
    cfg = config_from_profile(profile, **params)

    seeds = tuple(int(t) for t in run.get("activation_seeds", "").split(",") if t.strip())
    out_dir = run.get("out", "")
    if not out_dir:
        raise ManifestError(f"{path}: [run] out is required")
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base, out_dir)
    return JobManifest(
        inputs=inputs, out_dir=out_dir,
        stages=run.get("stages", "all"),
        seed=int(run.get("seed", cfg.rng_seed)),
        activation_seeds=seeds,
        profile=profile,
        fov_deg=float(run.get("fov_deg", 90.0)),
        width=int(run.get("width", 0)), height=int(run.get("height", 0)),
        config=cfg)


def _resample(grid: PixelGrid, width, height, nearest) -> PixelGrid:
    if (grid.width, grid.height) == (width, height):
        return grid
    data = grid.data.astype(np.float64)
    rows = (np.arange(height) + 0.5) * grid.height / height - 0.5
    cols = (np.arange(width) + 0.5) * grid.width / width - 0.5
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    order = 0 if nearest else 1
    out = np.stack([
        ndimage.map_coordinates(data[:, :, c], [rr, cc], order=order, mode="nearest")
        for c in range(grid.channels)], axis=-1)
    return PixelGrid(out)


def ingest(manifest: JobManifest):
    """Read, resample and validate the input bundle named by the manifest."""
    try:
        rgb = imageio.read_png(manifest.inputs["rgb"])
        depth = imageio.read_pfm(manifest.inputs["depth"])
        normal = imageio.read_pfm(manifest.inputs["normal"])
        semantic = imageio.read_png(manifest.inputs["semantic"])
        lamps = []
        if "light_sidecar" in manifest.inputs:
            masks = {}
            if "light_mask" in manifest.inputs:
                id_map = imageio.read_png16(manifest.inputs["light_mask"])
                masks = lights_mod.masks_from_id_map(id_map)
            lamps = lights_mod.read_sidecar(manifest.inputs["light_sidecar"], masks)
    except (imageio.ImageIOError, lights_mod.LightError) as exc:
        raise StageError("ingest", exc) from exc

    w = manifest.width or rgb.width
    h = manifest.height or rgb.height
    rgb = _resample(PixelGrid(rgb.data.astype(np.float64) / 255.0), w, h, nearest=False)
    depth = _resample(depth, w, h, nearest=False)
    normal = _resample(normal, w, h, nearest=False)
    semantic = _resample(semantic, w, h, nearest=True)
    if manifest.config.depth_scale != 1.0:
        depth = PixelGrid(depth.plane() * manifest.config.depth_scale)
    # renormalize normals after interpolation
    n = normal.data
    normal = PixelGrid(n / np.linalg.norm(n, axis=2, keepdims=True))
    semantic = PixelGrid(np.round(semantic.plane()))

    cam = CameraModel.from_fov(np.deg2rad(manifest.fov_deg), w, h)
    try:
        bundle = validate_inputs(PixelGrid(np.clip(rgb.data, 0, 1)), depth,
                                 normal, semantic, cam)
    except ValueError as exc:
        raise StageError("ingest", exc) from exc
    return bundle, lamps


def _write_report(manifest: JobManifest, artifacts, path):
    parser = configparser.ConfigParser()
    parser["inputs"] = {k: os.path.abspath(v) for k, v in manifest.inputs.items()}
    parser["run"] = {
        "out": os.path.abspath(manifest.out_dir),
        "stages": manifest.stages,
        "seed": str(manifest.seed),
        "activation_seeds": ",".join(str(s) for s in manifest.activation_seeds),
        "profile": manifest.profile,
        "fov_deg": repr(manifest.fov_deg),
        "width": str(manifest.width),
        "height": str(manifest.height),
    }
    for section, names in _SECTIONS.items():
        values = {n: _format_value(n, getattr(manifest.config, n)) for n in names}
        if section == "run":  # shares the section with the run-control keys
            parser["run"].update(values)
        else:
            parser[section] = values
    parser["artifacts"] = {k: os.path.abspath(v) for k, v in artifacts.items()}
    buf = io.StringIO()
    parser.write(buf)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def run_pipeline(manifest: JobManifest):
    """Execute the selected stage prefix; returns {artifact name: path}."""
    cfg = manifest.config
    os.makedirs(manifest.out_dir, exist_ok=True)
    out = lambda name: os.path.join(manifest.out_dir, name)
    artifacts = {}
    timings = []
    stages = manifest.selected_stages()

    bundle, lamps = ingest(manifest)

    depth = bundle.depth
    uncertain = PixelGrid(np.zeros((depth.height, depth.width)))
    sheet = None
    scene = None

    for stage in stages:
        t0 = time.perf_counter()
        try:
            if stage == "filter":
                from .color import rgb_to_cielab
                lab = rgb_to_cielab(bundle.rgb)
                depth = filters.cross_bilateral_filter(depth, lab, bundle.semantic, cfg)
                uncertain = filters.flag_uncertain_regions(depth, bundle.semantic, cfg)
                imageio.write_png(uncertain, out("uncertain.png"))
                artifacts["uncertain"] = out("uncertain.png")
            elif stage == "refine":
                depth, trace = refine.refine_depth(
                    depth, bundle.cam, bundle.normal, bundle.depth, uncertain, cfg)
                imageio.write_pfm(depth, out("refined_depth.pfm"))
                refine.write_loss_trace(trace, out("loss_trace.txt"))
                artifacts["refined_depth"] = out("refined_depth.pfm")
                artifacts["loss_trace"] = out("loss_trace.txt")
            elif stage == "mesh":
                sheet = build_mesh(depth, bundle.cam, cfg, rgb=bundle.rgb)
            elif stage == "postprocess":
                sheet = delete_uncertain_faces(sheet, uncertain)
                regions = expand_uncertain_region(uncertain, bundle.semantic, cfg)
                sheet = complete_background(sheet, regions)
                for region in regions:
                    if region.kind == "foreground":
                        sheet = complete_foreground(sheet, region, bundle.semantic)
                scene = to_scene_mesh(sheet)
                meshio.write_obj(scene, out("mesh.obj"),
                                 lattice_shape=(sheet.rows, sheet.cols))
                meshio.write_ply(scene, out("mesh.ply"))
                artifacts["mesh_obj"] = out("mesh.obj")
                artifacts["mesh_ply"] = out("mesh.ply")
            elif stage == "relight":
                if scene is None:
                    scene = to_scene_mesh(sheet)
                settings = RenderSettings(
                    samples_per_pixel=cfg.samples_per_pixel,
                    max_bounces=cfg.max_bounces,
                    ambient_radiance=cfg.ambient_radiance,
                    exposure=cfg.exposure, seed=manifest.seed)
                for aseed in manifest.activation_seeds:
                    draw = relight.draw_activations(lamps, aseed)
                    lit = relight.assign_emitters(scene, lamps, draw, bundle.cam)
                    img = render(lit, bundle.cam, settings)
                    noisy = postprocess.add_sensor_noise(
                        PixelGrid(np.clip(img.data * cfg.exposure, 0.0, 1.0)),
                        cfg.noise_beta1, cfg.noise_beta2, seed=aseed)
                    night = postprocess.tone_map(noisy, exposure=1.0)
                    name = f"night_{aseed}.png"
                    imageio.write_png(night, out(name))
                    artifacts[f"night_{aseed}"] = out(name)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        timings.append((stage, time.perf_counter() - t0))

    _write_report(manifest, artifacts, out("run_report.ini"))
    artifacts["report"] = out("run_report.ini")
    with open(out("timings.txt"), "w", encoding="utf-8") as fh:
        for stage, dt in timings:
            fh.write(f"{stage} {dt:.6f}\n")
    return artifacts
