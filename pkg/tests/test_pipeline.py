import os

import numpy as np
import pytest

from nightsim import imageio
from nightsim.config import PipelineConfig
from nightsim.pipeline import (JobManifest, ManifestError, StageError,
                               STAGE_EXIT_CODES, STAGES, ingest, read_manifest,
                               run_pipeline)
from nightsim.synth import save_bundle, synth_scene


def _fast_cfg(**kw):
    params = dict(opt_steps=5, samples_per_pixel=4)
    params.update(kw)
    return PipelineConfig(**params)


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("bundle")
    save_bundle(synth_scene("car-on-road", size=32, seed=1), d)
    return d


def _manifest(bundle_dir, out_dir, **kw):
    inputs = {
        "rgb": str(bundle_dir / "rgb.png"),
        "depth": str(bundle_dir / "depth.pfm"),
        "normal": str(bundle_dir / "normal.pfm"),
        "semantic": str(bundle_dir / "semantic.png"),
        "light_mask": str(bundle_dir / "lights.png"),
        "light_sidecar": str(bundle_dir / "lights.txt"),
    }
    params = dict(inputs=inputs, out_dir=str(out_dir), config=_fast_cfg())
    params.update(kw)
    return JobManifest(**params)


def test_ingest_loads_and_validates(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path)
    bundle, lamps = ingest(m)
    assert (bundle.rgb.height, bundle.rgb.width) == (32, 32)
    assert len(lamps) == 3
    assert lamps[0].mask is not None


def test_ingest_resamples(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path, width=16, height=16)
    bundle, _ = ingest(m)
    assert (bundle.rgb.height, bundle.rgb.width) == (16, 16)
    # labels stay integral under nearest-neighbor resampling
    sem = bundle.semantic.plane()
    assert np.array_equal(sem, np.round(sem))


def test_ingest_format_mismatch_names_file(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path)
    m.inputs = dict(m.inputs, depth=m.inputs["semantic"])  # PNG where PFM expected
    with pytest.raises(StageError, match="not a PFM") as e:
        ingest(m)
    assert e.value.stage == "ingest"


def test_stage_prefix_selection(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path, stages="refine")
    assert m.selected_stages() == ("filter", "refine")
    arts = run_pipeline(m)
    assert "refined_depth" in arts and "uncertain" in arts
    assert "mesh_obj" not in arts
    assert not any(k.startswith("night") for k in arts)


def test_invalid_stage_rejected(bundle_dir, tmp_path):
    with pytest.raises(ManifestError, match="unknown stage"):
        _manifest(bundle_dir, tmp_path, stages="render")


def test_full_run_produces_artifacts(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path, activation_seeds=(0, 1))
    arts = run_pipeline(m)
    for key in ("uncertain", "refined_depth", "loss_trace", "mesh_obj",
                "mesh_ply", "night_0", "night_1", "report"):
        assert key in arts and os.path.exists(arts[key]), key
    assert os.path.exists(os.path.join(str(tmp_path), "timings.txt"))


def test_reruns_byte_identical(bundle_dir, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_pipeline(_manifest(bundle_dir, out1))
    run_pipeline(_manifest(bundle_dir, out2))
    for name in ("uncertain.png", "refined_depth.pfm", "loss_trace.txt",
                 "mesh.obj", "mesh.ply", "night_0.png"):
        a = (out1 / name).read_bytes()
        b = (out2 / name).read_bytes()
        assert a == b, name


def test_report_refeeds_as_manifest(bundle_dir, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    arts = run_pipeline(_manifest(bundle_dir, out1))
    m2 = read_manifest(arts["report"])
    m2.out_dir = str(out2)
    run_pipeline(m2)
    assert (out1 / "night_0.png").read_bytes() == (out2 / "night_0.png").read_bytes()
    assert (out1 / "mesh.ply").read_bytes() == (out2 / "mesh.ply").read_bytes()


def test_distinct_activation_seeds_distinct_nights(bundle_dir, tmp_path):
    from nightsim.relight import draw_activations
    from nightsim.lights import read_sidecar
    lamps = read_sidecar(str(bundle_dir / "lights.txt"))
    # pick three seeds with pairwise different activation patterns
    seen, seeds = set(), []
    for s in range(100):
        pat = tuple(sorted(draw_activations(lamps, s).instance_active.items()))
        if pat not in seen:
            seen.add(pat)
            seeds.append(s)
        if len(seeds) == 3:
            break
    assert len(seeds) == 3
    arts = run_pipeline(_manifest(bundle_dir, tmp_path,
                                  activation_seeds=tuple(seeds)))
    imgs = [open(arts[f"night_{s}"], "rb").read() for s in seeds]
    assert imgs[0] != imgs[1] and imgs[1] != imgs[2] and imgs[0] != imgs[2]


def test_stage_error_carries_stage_name(bundle_dir, tmp_path):
    m = _manifest(bundle_dir, tmp_path)
    m.config = _fast_cfg(grid_downsample=32)  # lattice collapses below 2x2
    with pytest.raises(StageError, match="mesh") as e:
        run_pipeline(m)
    assert e.value.stage == "mesh"
    # earlier artifacts survive the halt
    assert os.path.exists(tmp_path / "uncertain.png")


def test_manifest_file_round_trip(bundle_dir, tmp_path):
    mpath = tmp_path / "job.ini"
    mpath.write_text(
        "[inputs]\n"
        f"rgb = {bundle_dir / 'rgb.png'}\n"
        f"depth = {bundle_dir / 'depth.pfm'}\n"
        f"normal = {bundle_dir / 'normal.pfm'}\n"
        f"semantic = {bundle_dir / 'semantic.png'}\n"
        "\n[run]\n"
        f"out = {tmp_path / 'out'}\n"
        "stages = filter\nseed = 9\nactivation_seeds = 2,4\n"
        "profile = continuity_heavy\n"
        "\n[refine]\nopt_steps = 3\n")
    m = read_manifest(mpath)
    assert m.stages == "filter"
    assert m.seed == 9
    assert m.activation_seeds == (2, 4)
    assert m.config.lambda2 == 5.0  # continuity_heavy profile
    assert m.config.opt_steps == 3


def test_manifest_missing_input_rejected(bundle_dir, tmp_path):
    mpath = tmp_path / "job.ini"
    mpath.write_text(
        "[inputs]\n"
        f"rgb = {bundle_dir / 'rgb.png'}\n"
        "\n[run]\nout = out\n")
    with pytest.raises(ManifestError, match="depth"):
        read_manifest(mpath)


def test_manifest_nonexistent_file_rejected(tmp_path):
    mpath = tmp_path / "job.ini"
    mpath.write_text("[inputs]\nrgb = missing.png\n\n[run]\nout = out\n")
    with pytest.raises(ManifestError, match="does not exist"):
        read_manifest(mpath)


def test_exit_codes_cover_all_stages():
    assert set(STAGE_EXIT_CODES) == set(STAGES) | {"ingest"}
    assert len(set(STAGE_EXIT_CODES.values())) == len(STAGE_EXIT_CODES)
