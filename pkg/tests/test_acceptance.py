"""Acceptance gate: the eight shipping criteria, one test each.

Each test prints a single PASS/FAIL line on the live terminal (bypassing
pytest capture) so the gate can be read off directly from the run log.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from nightsim.camera import CameraModel
from nightsim.config import PipelineConfig
from nightsim.filters import cross_bilateral_filter, flag_uncertain_regions
from nightsim.grids import PixelGrid
from nightsim.lights import read_sidecar
from nightsim.mesh import (CompletionRegion, build_mesh, complete_background,
                           complete_foreground, delete_uncertain_faces,
                           expand_uncertain_region, watertight_audit)
from nightsim.pipeline import JobManifest, run_pipeline
from nightsim.postprocess import add_sensor_noise
from nightsim.refine import (loss_gradient, normal_from_depth, refine_depth,
                             total_loss)
from nightsim.relight import draw_activations
from nightsim.render import RenderSettings, render
from nightsim.synth import save_bundle, synth_scene

from oracles import (brute_bilateral, brute_variance_map, disk_view_factor,
                     finite_difference_gradient)
from test_render import disk_receiver_scene


#: One line per criterion; echoed in the terminal summary by conftest.py.
RESULTS = []


def _report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, line


def test_criterion_1_gradient_oracle():
    cam = CameraModel.from_fov(math.pi / 2, 16, 16)
    cfg = PipelineConfig()
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d = rng.uniform(2.0, 6.0, (16, 16))
        n = rng.normal(size=(16, 16, 3))
        n[..., 2] = np.abs(n[..., 2]) + 0.5
        n /= np.linalg.norm(n, axis=2, keepdims=True)
        de = d + rng.normal(0.0, 0.1, (16, 16))
        u = (rng.uniform(size=(16, 16)) < 0.2).astype(np.float64)
        dp, np_, dep, up = (PixelGrid(d), PixelGrid(n), PixelGrid(de),
                            PixelGrid(u))
        g = loss_gradient(dp, cam, np_, dep, up, cfg).plane()
        fd = finite_difference_gradient(
            lambda x: total_loss(PixelGrid(x), cam, np_, dep, up, cfg).total,
            d, eps=1e-5)
        rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8)
        worst = max(worst, float(rel.max()))
    dt = time.perf_counter() - t0
    _report("criterion 1 (analytic gradient vs finite differences)",
            worst < 1e-4 and dt < 60.0,
            f"max rel err {worst:.2e} over 100 random 16x16 grids in {dt:.1f}s")


def test_criterion_2_filter_oracles():
    cfg = PipelineConfig(sigma_s=1.5, var_window=4)
    rng = np.random.default_rng(11)
    worst_rel = 0.0
    mismatches = 0
    t0 = time.perf_counter()
    for _ in range(1000):
        d = rng.uniform(1.0, 20.0, (32, 32))
        lab = rng.uniform(0.0, 100.0, (32, 32, 3))
        h = np.array([0.0, 5.0, 13.0])[rng.integers(0, 3, (32, 32))]
        got = cross_bilateral_filter(PixelGrid(d), PixelGrid(lab),
                                     PixelGrid(h), cfg).plane()
        want = brute_bilateral(d, lab, h.astype(np.int64), cfg.sigma_s,
                               cfg.sigma_c, cfg.mu_bilateral,
                               cfg.bilateral_radius)
        worst_rel = max(worst_rel,
                        float((np.abs(got - want) / np.abs(want)).max()))
        gotv = flag_uncertain_regions(PixelGrid(d), PixelGrid(h), cfg).plane()
        wantv = brute_variance_map(d, h.astype(np.int64), cfg.mu_var,
                                   cfg.var_window, cfg.foreground_classes)
        mismatches += int((gotv != wantv).sum())
    dt = time.perf_counter() - t0
    _report("criterion 2 (filters vs brute force, 1000 random 32x32 grids)",
            worst_rel < 1e-12 and mismatches == 0,
            f"bilateral max rel err {worst_rel:.2e}, "
            f"variance-map mismatches {mismatches}, {dt:.1f}s")


def test_criterion_3_normal_recovery():
    from nightsim.synth import _plane
    worst = 0.0
    for slope in (0.1, 0.5, 1.0):
        b = _plane(64, 0, slope=slope)
        n = normal_from_depth(b.depth, b.cam).data
        dots = np.clip((n * b.true_normal).sum(axis=2), -1.0, 1.0)
        worst = max(worst, float(np.degrees(np.arccos(dots))[1:-1, 1:-1].max()))

    b = _plane(32, 0, slope=0.5)
    rng = np.random.default_rng(12)
    noisy = PixelGrid(b.depth.plane() + rng.normal(0.0, 0.05, (32, 32)))
    nref = PixelGrid(np.broadcast_to(b.true_normal, (32, 32, 3)).copy())
    u = PixelGrid(np.zeros((32, 32)))
    cfg = PipelineConfig()  # 1000 steps, lr 1e-4, default loss weights

    def mean_angle(dep):
        nn = normal_from_depth(dep, b.cam).data
        dots = np.clip((nn * b.true_normal).sum(axis=2), -1.0, 1.0)
        return float(np.degrees(np.arccos(dots))[1:-1, 1:-1].mean())

    refined, _ = refine_depth(noisy, b.cam, nref, noisy, u, cfg)
    before, after = mean_angle(noisy), mean_angle(refined)
    _report("criterion 3 (plane normal recovery and refinement)",
            worst < 0.1 and after < before,
            f"max plane normal err {worst:.4f} deg; refinement "
            f"{before:.2f} -> {after:.2f} deg mean interior error")


def _repaired(kind, size=64):
    b = synth_scene(kind, size=size)
    cfg = PipelineConfig()
    u = flag_uncertain_regions(b.depth, b.semantic, cfg)
    sheet = delete_uncertain_faces(build_mesh(b.depth, b.cam, cfg), u)
    regions = expand_uncertain_region(u, b.semantic, cfg)
    sheet = complete_background(sheet, regions)
    for r in regions:
        if r.kind == "foreground":
            sheet = complete_foreground(sheet, r, b.semantic)
    return sheet


def test_criterion_4_completion_exactness_and_watertightness():
    # hand-checked row fills on a 5x5 lattice with slots 1-2 of a row missing
    d = np.full((20, 20), 5.0)
    d[:, :4] = 2.0
    d[:, 12:16] = 8.0
    cfg = PipelineConfig(grid_downsample=4)
    cam = CameraModel.from_fov(math.pi / 2, 20, 20)
    sheet = build_mesh(PixelGrid(d), cam, cfg)
    u = np.zeros((20, 20))
    u[sheet.source_row[2, 1], sheet.source_col[2, 1]] = 1.0
    u[sheet.source_row[2, 2], sheet.source_col[2, 2]] = 1.0
    cut = delete_uncertain_faces(sheet, PixelGrid(u))
    out = complete_background(cut, [CompletionRegion(mask=PixelGrid(u),
                                                     kind="background")])
    gl, gr = sheet.positions[2, 0], sheet.positions[2, 3]
    err_two = max(
        float(np.abs(out.positions[2, 1] - (2.0 * gl + gr) / 3.0).max()),
        float(np.abs(out.positions[2, 2] - (gl + 2.0 * gr) / 3.0).max()))

    u1 = np.zeros((20, 20))
    u1[sheet.source_row[1, 2], sheet.source_col[1, 2]] = 1.0
    cut1 = delete_uncertain_faces(sheet, PixelGrid(u1))
    out1 = complete_background(cut1, [CompletionRegion(mask=PixelGrid(u1),
                                                       kind="background")])
    mid = (sheet.positions[1, 1] + sheet.positions[1, 3]) / 2.0
    err_mid = float(np.abs(out1.positions[1, 2] - mid).max())

    bad_step = watertight_audit(_repaired("step"))
    bad_car = watertight_audit(_repaired("car-on-road"))
    _report("criterion 4 (row-fill exactness and watertight repair)",
            err_two < 1e-12 and err_mid < 1e-12 and bad_step == 0 and bad_car == 0,
            f"fill errs {err_two:.1e}/{err_mid:.1e}; unmatched interior edges "
            f"step={bad_step}, car-on-road={bad_car}")


def test_criterion_5_no_spurious_faces():
    b = synth_scene("step", size=64)
    cfg = PipelineConfig()
    u = flag_uncertain_regions(b.depth, b.semantic, cfg)
    sheet = delete_uncertain_faces(build_mesh(b.depth, b.cam, cfg), u)
    pos = sheet.positions.reshape(-1, 3)
    z = pos[sheet.faces()][:, :, 2]
    worst = float((z.max(axis=1) - z.min(axis=1)).max())
    step = 10.0 - 3.0
    _report("criterion 5 (no face spans the step discontinuity)",
            worst < step,
            f"max intra-face depth range {worst:.3f} < step size {step:.0f}")


def test_criterion_6_renderer_oracle():
    scene, cam = disk_receiver_scene()
    want = disk_view_factor(1.0, 1.0)
    t0 = time.perf_counter()
    img = render(scene, cam, RenderSettings(samples_per_pixel=4096,
                                            ambient_radiance=(0.0, 0.0, 0.0)))
    dt = time.perf_counter() - t0
    rel = abs(float(img.data[..., 0].mean()) - want) / want

    def rmse(spp):
        im = render(scene, cam, RenderSettings(samples_per_pixel=spp, seed=5,
                                               ambient_radiance=(0.0, 0.0, 0.0)))
        return float(np.sqrt(((im.data[..., 0] - want) ** 2).mean()))

    e16, e64 = rmse(16), rmse(64)
    decay = e64 / e16
    _report("criterion 6 (emissive-disk irradiance oracle)",
            rel < 0.02 and dt < 120.0 and decay < 0.6,
            f"rel err {rel:.4f} at 4096 spp in {dt:.0f}s; "
            f"rmse ratio 64/16 spp = {decay:.2f}")


def test_criterion_7_stochastic_models():
    from test_relight import _light
    n = 10000
    p = 0.35
    lights = [_light(1, p, group=2), _light(2, p, group=2), _light(3, 0.6)]
    hits = 0
    co_violations = 0
    for s in range(n):
        d = draw_activations(lights, s)
        hits += d.instance_active[1]
        co_violations += d.instance_active[1] != d.instance_active[2]
    sigma = math.sqrt(n * p * (1.0 - p))
    freq_ok = abs(hits - n * p) < 3.0 * sigma

    beta1, beta2 = 0.001, 1e-5
    worst_var = 0.0
    for level in (0.1, 0.3, 0.5, 0.7, 0.9):
        img = PixelGrid(np.full((1000, 1000), level))
        noisy = add_sensor_noise(img, beta1, beta2, seed=int(level * 10))
        got = float((noisy.data - level).var())
        want = beta1 * level + beta2
        worst_var = max(worst_var, abs(got - want) / want)
    _report("criterion 7 (activation and noise statistics)",
            freq_ok and co_violations == 0 and worst_var < 0.05,
            f"activation {hits}/{n} vs p={p} (3-sigma bound "
            f"{3.0 * sigma:.0f}); group violations {co_violations}; "
            f"worst noise-variance error {worst_var * 100:.2f}%")


def test_criterion_8_end_to_end_determinism(tmp_path):
    bundle = tmp_path / "bundle"
    paths = save_bundle(synth_scene("car-on-road", size=32, seed=1), bundle)
    lamps = read_sidecar(paths["light_sidecar"])
    seen, seeds = set(), []
    for s in range(100):
        pat = tuple(sorted(draw_activations(lamps, s).instance_active.items()))
        if pat not in seen:
            seen.add(pat)
            seeds.append(s)
        if len(seeds) == 3:
            break
    cfg = PipelineConfig(opt_steps=50, samples_per_pixel=8)

    def manifest(out):
        return JobManifest(inputs={k: str(v) for k, v in paths.items()},
                           out_dir=str(out), activation_seeds=tuple(seeds),
                           config=cfg)

    arts1 = run_pipeline(manifest(tmp_path / "a"))
    arts2 = run_pipeline(manifest(tmp_path / "b"))
    names = ["uncertain.png", "refined_depth.pfm", "loss_trace.txt",
             "mesh.obj", "mesh.ply"] + [f"night_{s}.png" for s in seeds]
    identical = all((tmp_path / "a" / f).read_bytes()
                    == (tmp_path / "b" / f).read_bytes() for f in names)

    # single-threaded subprocess run must reproduce the same bytes
    driver = (
        "from nightsim.pipeline import JobManifest, run_pipeline\n"
        "from nightsim.config import PipelineConfig\n"
        f"cfg = PipelineConfig(opt_steps=50, samples_per_pixel=8)\n"
        f"m = JobManifest(inputs={ {k: str(v) for k, v in paths.items()}!r},\n"
        f"                out_dir={str(tmp_path / 'c')!r},\n"
        f"                activation_seeds={tuple(seeds)!r}, config=cfg)\n"
        "run_pipeline(m)\n")
    env = dict(os.environ, NUMBA_NUM_THREADS="1", OMP_NUM_THREADS="1")
    subprocess.run([sys.executable, "-c", driver], check=True, env=env)
    identical_1t = all((tmp_path / "a" / f).read_bytes()
                       == (tmp_path / "c" / f).read_bytes() for f in names)

    nights = [(tmp_path / "a" / f"night_{s}.png").read_bytes() for s in seeds]
    distinct = len({n for n in nights}) == 3
    _report("criterion 8 (end-to-end determinism)",
            identical and identical_1t and distinct and len(seeds) == 3,
            f"reruns byte-identical: {identical}; single-thread subprocess "
            f"identical: {identical_1t}; {len(set(nights))}/3 distinct night "
            f"images across activation seeds")
