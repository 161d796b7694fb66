"""Day-to-night simulation: depth filtering, normal-guided refinement,
grid-sheet mesh reconstruction and repair, and physically based relighting.
"""

from .camera import CameraModel
from .config import (PipelineConfig, PROFILES, config_from_ini, config_from_profile,
                     config_to_ini, load_config, save_config)
from .filters import cross_bilateral_filter, flag_uncertain_regions
from .grids import GridError, PixelGrid, depth_grid, label_grid, normal_grid
from .lights import LIGHT_CLASSES, LightInstance, read_sidecar, write_sidecar
from .mesh import (CompletionRegion, MeshSheet, SceneMesh, build_mesh,
                   complete_background, complete_foreground,
                   delete_uncertain_faces, expand_uncertain_region,
                   to_scene_mesh, watertight_audit)
from .pipeline import JobManifest, StageError, ingest, read_manifest, run_pipeline
from .postprocess import add_sensor_noise, tone_map
from .refine import (continuity_loss, depth_loss, loss_gradient, normal_from_depth,
                     normal_loss, refine_depth, total_loss)
from .relight import assign_emitters, draw_activations
from .render import RenderSettings, render
from .synth import save_bundle, synth_scene
from .validate import InputBundle, validate_inputs

__version__ = "1.0.0"

__all__ = [
    "CameraModel", "PipelineConfig", "PROFILES", "config_from_ini",
    "config_from_profile", "config_to_ini", "load_config", "save_config",
    "cross_bilateral_filter", "flag_uncertain_regions",
    "GridError", "PixelGrid", "depth_grid", "label_grid", "normal_grid",
    "LIGHT_CLASSES", "LightInstance", "read_sidecar", "write_sidecar",
    "CompletionRegion", "MeshSheet", "SceneMesh", "build_mesh",
    "complete_background", "complete_foreground", "delete_uncertain_faces",
    "expand_uncertain_region", "to_scene_mesh", "watertight_audit",
    "JobManifest", "StageError", "ingest", "read_manifest", "run_pipeline",
    "add_sensor_noise", "tone_map",
    "continuity_loss", "depth_loss", "loss_gradient", "normal_from_depth",
    "normal_loss", "refine_depth", "total_loss",
    "assign_emitters", "draw_activations",
    "RenderSettings", "render",
    "save_bundle", "synth_scene",
    "InputBundle", "validate_inputs",
]
