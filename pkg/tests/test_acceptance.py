"""Acceptance gate: one test per contract-level guarantee.

Each test checks a single end-to-end property at its stated tolerance
and prints one ``ACCEPTANCE Cn: PASS`` line on success, so the -v log
doubles as a sign-off checklist. Budgeted items time themselves with
perf_counter and fail hard past their limit.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import ndimage, stats

from rgbdaug.assets import get_default_catalog
from rgbdaug.compositing import (
    REFERENCE_MEAN,
    REFERENCE_STD,
    compute_channel_stats,
    normalize_colors,
)
from rgbdaug.dataset import (
    DatasetManifest,
    PairRef,
    build_dataset,
    audit_dataset,
    make_synthetic_source,
    plan_build,
    plan_virtualize,
    select_accepted,
)
from rgbdaug.geometry import PinholeCamera
from rgbdaug.metrics import compute_metrics
from rgbdaug.pngio import load_depth_png, load_rgb_png
from rgbdaug.render import render_virtual_layer
from rgbdaug.sampling import AugmentationParams, sample_scene

COVERAGE_BOUNDS = (0.1, 0.5)

# Canonical channel statistics the normalization must reproduce.
CANON_MEAN = (123.675, 116.28, 103.53)
CANON_STD = (58.395, 57.12, 57.375)


def _announce(capsys, line):
    with capsys.disabled():
        print(f"\n{line}")


@pytest.fixture(scope="session")
def built_dataset(tmp_path_factory):
    """25 source pairs x ratio 8 -> a 200-image augmented build.

    Shared by the coverage audit and the dominance audit so the build
    cost is paid once. Small frames, low tier, two workers.
    """
    root = tmp_path_factory.mktemp("acceptance_build")
    src_root = root / "source"
    out_root = root / "augmented"
    make_synthetic_source(src_root, count=25, seed=77, size=(48, 64), scenes=2)
    report = build_dataset(
        src_root, out_root, AugmentationParams(), global_seed=2024,
        ratio=8.0, jobs=2, detail_tier="low",
    )
    return src_root, out_root, report


def test_c1_raster_agrees_with_bruteforce(capsys):
    """Fast raster route vs exhaustive per-pixel intersection.

    Gate: depth within 1 ulp, color within +/-1 at mask-boundary
    pixels and identical elsewhere, identical masks. Budget 60s.
    """
    t0 = time.perf_counter()
    camera = PinholeCamera.from_fov(60.0, width=64, height=48)
    catalog = get_default_catalog("low")
    bg_rng = np.random.default_rng(5)

    max_depth_ulp = 0.0
    max_rgb_diff = 0
    for seed, max_objects in [(3, 1), (17, 3), (40, 3), (71, 2)]:
        params = AugmentationParams(max_objects=max_objects)
        spec = sample_scene(seed, params, catalog, camera)
        background = bg_rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
        fast = render_virtual_layer(spec, catalog, background, route="raster")
        slow = render_virtual_layer(spec, catalog, background, route="bruteforce")

        assert fast.mask.any(), f"seed {seed}: empty render proves nothing"
        assert np.array_equal(fast.mask, slow.mask)

        depth_diff = np.abs(fast.depth - slow.depth)
        ulp = np.spacing(np.maximum(np.abs(fast.depth), np.abs(slow.depth)))
        assert np.all(depth_diff <= ulp), f"seed {seed}: depth beyond 1 ulp"
        max_depth_ulp = max(max_depth_ulp, float(depth_diff.max()))

        rgb_diff = np.abs(
            fast.rgb.astype(np.int16) - slow.rgb.astype(np.int16)
        ).max(axis=2)
        interior = ndimage.binary_erosion(fast.mask)
        boundary = fast.mask & ~interior
        assert rgb_diff.max() <= 1, f"seed {seed}: color differs by >1"
        assert np.all(rgb_diff[~boundary] == 0), (
            f"seed {seed}: color differs away from the silhouette"
        )
        max_rgb_diff = max(max_rgb_diff, int(rgb_diff.max()))

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"took {elapsed:.1f}s, budget 60s"
    _announce(capsys, (
        "ACCEPTANCE C1: PASS - raster == bruteforce on 4 scenes "
        f"(max depth err {max_depth_ulp:g}, max rgb diff {max_rgb_diff}, "
        f"{elapsed:.1f}s)"
    ))


def test_c2_stored_coverage_within_bounds(built_dataset, capsys):
    """Every stored pair's visible coverage sits in [0.1, 0.5].

    Recomputed from the stored bytes (source vs augmented PNGs), not
    trusted from the build records; records must agree exactly.
    """
    src_root, out_root, report = built_dataset
    records = [r for r in report.payload["records"] if r["accepted"]]
    assert report.payload["planned"] == 200
    assert len(records) == 200

    src_manifest = DatasetManifest.load(src_root)
    by_name = {}
    for rec in records:
        by_name[(rec["source"]["category"], rec["source"]["scene"],
                 rec["out_name"])] = rec

    checked = 0
    worst = (math.inf, -math.inf)
    for ref in DatasetManifest.load(out_root).pairs:
        rec = by_name[(ref.category, ref.scene, ref.name)]
        src_ref = PairRef(**rec["source"])
        src_depth = load_depth_png(src_root / src_ref.rel_depth)
        out_depth = load_depth_png(out_root / ref.rel_depth)
        implied = ((src_depth == 0) & (out_depth != 0)) | (
            (src_depth != 0) & (out_depth < src_depth)
        )
        coverage = float(implied.sum()) / float(implied.size)
        assert COVERAGE_BOUNDS[0] <= coverage <= COVERAGE_BOUNDS[1], (
            f"{ref.name}: coverage {coverage} outside bounds"
        )
        assert coverage == rec["coverage"], f"{ref.name}: record disagrees"
        worst = (min(worst[0], coverage), max(worst[1], coverage))
        checked += 1

    assert checked == 200
    _announce(capsys, (
        "ACCEPTANCE C2: PASS - 200/200 stored pairs inside "
        f"[{COVERAGE_BOUNDS[0]}, {COVERAGE_BOUNDS[1]}] "
        f"(observed {worst[0]:.3f}..{worst[1]:.3f})"
    ))


def test_c3_sampling_rates(capsys):
    """Scene sampler hits its configured probabilities.

    2000 scenes: colored-light share 0.20 +/- 0.03, shadow share
    0.50 +/- 0.03, light counts uniform over {4,5,6} (chi-square
    p > 0.01).
    """
    camera = PinholeCamera.from_fov(60.0, width=64, height=48)
    catalog = get_default_catalog("low")
    params = AugmentationParams()

    n_scenes = 2000
    colored = 0
    total_lights = 0
    shadowed = 0
    count_hist = {4: 0, 5: 0, 6: 0}
    for seed in range(n_scenes):
        spec = sample_scene(seed, params, catalog, camera)
        count_hist[len(spec.lights)] += 1
        total_lights += len(spec.lights)
        colored += sum(
            1 for light in spec.lights if tuple(light.color) != (1.0, 1.0, 1.0)
        )
        shadowed += int(spec.shadows.enabled)

    colored_share = colored / total_lights
    shadow_share = shadowed / n_scenes
    assert abs(colored_share - 0.20) <= 0.03, f"colored {colored_share:.4f}"
    assert abs(shadow_share - 0.50) <= 0.03, f"shadows {shadow_share:.4f}"

    observed = [count_hist[k] for k in (4, 5, 6)]
    chi = stats.chisquare(observed)
    assert chi.pvalue > 0.01, f"light counts not uniform: {count_hist}"

    _announce(capsys, (
        "ACCEPTANCE C3: PASS - colored lights "
        f"{colored_share:.3f} (target 0.20), shadows {shadow_share:.3f} "
        f"(target 0.50), light-count chi2 p={chi.pvalue:.3f}"
    ))


def test_c4_color_normalization(capsys):
    """Normalization constants and the stats they induce, within 1%."""
    for got, want in ((REFERENCE_MEAN, CANON_MEAN), (REFERENCE_STD, CANON_STD)):
        for g, w in zip(got, want):
            assert abs(g - w) / w <= 0.01

    rng = np.random.default_rng(12)
    image = rng.integers(0, 256, (240, 320, 3), dtype=np.uint8)
    source_stats = compute_channel_stats([image])
    out = normalize_colors(image, source=source_stats).astype(np.float64)

    worst = 0.0
    for ch in range(3):
        mean = float(out[:, :, ch].mean())
        std = float(out[:, :, ch].std())
        rel_mean = abs(mean - CANON_MEAN[ch]) / CANON_MEAN[ch]
        rel_std = abs(std - CANON_STD[ch]) / CANON_STD[ch]
        assert rel_mean <= 0.01, f"channel {ch} mean off by {rel_mean:.4f}"
        assert rel_std <= 0.01, f"channel {ch} std off by {rel_std:.4f}"
        worst = max(worst, rel_mean, rel_std)

    _announce(capsys, (
        "ACCEPTANCE C4: PASS - constants exact, normalized image stats "
        f"within {worst * 100:.2f}% of reference (gate 1%)"
    ))


def test_c5_plan_arithmetic(capsys):
    """Job counts for the published operating points, in-memory.

    24231 sources: ratio 0.1 -> 2423 jobs, ratio 2.0 -> 48462 jobs.
    645 test sources virtualized to exactly 2048 outputs in 4 waves.
    Budget 5s.
    """
    t0 = time.perf_counter()
    train = DatasetManifest(root=Path("/nonexistent"), pairs=sorted(
        PairRef("train", f"scene{i % 249:03d}", f"img{i:05d}")
        for i in range(24231)
    ))
    small = plan_build(train, ratio=0.1, source_fraction=1.0, global_seed=1)
    full = plan_build(train, ratio=2.0, source_fraction=1.0, global_seed=1)
    assert len(small.jobs) == 2423
    assert len(full.jobs) == 48462

    test_set = DatasetManifest(root=Path("/nonexistent"), pairs=sorted(
        PairRef("test", f"scene{i % 5:02d}", f"img{i:04d}") for i in range(645)
    ))
    plan = plan_virtualize(test_set, target_count=2048, global_seed=1)
    assert len(plan.sources) == 645
    assert plan.max_uses == 4  # ceil(2048 / 645)

    # Simulate all-accepted waves; selection must stop at exactly 2048.
    records = []
    waves_needed = 0
    for wave in range(plan.max_waves):
        for job in plan.wave_jobs(wave):
            records.append({
                "job_index": job.job_index,
                "accepted": True,
                "source": job.source,
            })
        waves_needed = wave + 1
        chosen = select_accepted(records, 2048, plan.balanced, plan.max_uses)
        if len(chosen) >= 2048:
            break
    assert len(chosen) == 2048
    assert waves_needed == 4  # 3 full waves give 1935, the 4th tops up

    balanced = select_accepted(records, 2048, True, plan.max_uses)
    assert len(balanced) == 2048
    per_source = {}
    for rec in balanced:
        per_source[rec["source"]] = per_source.get(rec["source"], 0) + 1
    assert max(per_source.values()) <= plan.max_uses

    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"
    _announce(capsys, (
        "ACCEPTANCE C5: PASS - 24231 sources -> 2423/48462 jobs, "
        f"645 -> 2048 in {waves_needed} waves, cap {plan.max_uses} "
        f"({elapsed:.2f}s)"
    ))


def test_c6_parallel_builds_are_byte_identical(tmp_path, capsys):
    """Same seed, 1 worker vs 8 workers: every output byte matches."""
    src_root = tmp_path / "source"
    make_synthetic_source(src_root, count=6, seed=31, size=(48, 64), scenes=2)

    def tree(root: Path) -> dict:
        return {
            str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()
        }

    outs = []
    for jobs in (1, 8):
        out_root = tmp_path / f"out_j{jobs}"
        build_dataset(
            src_root, out_root, AugmentationParams(), global_seed=99,
            ratio=2.0, jobs=jobs, detail_tier="low",
        )
        outs.append(tree(out_root))

    assert sorted(outs[0]) == sorted(outs[1])
    for name in outs[0]:
        assert outs[0][name] == outs[1][name], f"{name} differs across jobs"

    _announce(capsys, (
        "ACCEPTANCE C6: PASS - 1-worker and 8-worker builds agree on "
        f"all {len(outs[0])} files, report included"
    ))


def test_c7_metrics_match_scalar_reference(capsys):
    """Vectorized metrics vs a plain python loop, agreement <= 1e-12."""
    rng = np.random.default_rng(40)
    gt = rng.uniform(0.5, 10.0, (60, 80))
    pred = gt * rng.uniform(0.6, 1.6, (60, 80))
    mask = rng.random((60, 80)) > 0.25
    gt[~mask] = 0.0

    fast = compute_metrics(pred, gt)

    # Mirror the evaluation contract by hand: gt valid in
    # [0.001, 10], predictions clamped into the same window.
    se = ae = al = 0.0
    d1 = d2 = d3 = n = 0
    for i in range(60):
        for j in range(80):
            g = gt[i, j]
            if not (0.0 < g and 0.001 <= g <= 10.0):
                continue
            p = min(max(pred[i, j], 0.001), 10.0)
            se += (p - g) ** 2
            ae += abs(p - g) / g
            al += abs(math.log10(p) - math.log10(g))
            ratio = max(p / g, g / p)
            d1 += ratio < 1.25
            d2 += ratio < 1.25 ** 2
            d3 += ratio < 1.25 ** 3
            n += 1
    slow = {
        "rmse": math.sqrt(se / n), "rel": ae / n, "log10": al / n,
        "delta1": d1 / n, "delta2": d2 / n, "delta3": d3 / n,
    }

    worst = 0.0
    for field, want in slow.items():
        got = getattr(fast, field)
        assert abs(got - want) <= 1e-12, f"{field}: {got} vs {want}"
        worst = max(worst, abs(got - want))
    assert fast.valid_pixels == n

    # Threshold semantics: an exact ratio of 1.25 is excluded.
    edge = compute_metrics(np.full((2, 2), 0.625), np.full((2, 2), 0.5))
    assert edge.delta1 == 0.0 and edge.delta2 == 1.0

    _announce(capsys, (
        "ACCEPTANCE C7: PASS - 6 metrics within "
        f"{worst:.2e} of the scalar loop over {n} pixels (gate 1e-12)"
    ))


def test_c8_depth_dominance_audit(built_dataset, capsys):
    """Stored depths never move farther than their source readings.

    audit_dataset re-reads every pair from disk and raises on the
    first violation; all 200 must check out.
    """
    src_root, out_root, _ = built_dataset
    counters = audit_dataset(src_root, out_root)
    assert counters["checked"] == 200

    # The audit must actually bite: corrupt one stored pixel upward.
    ref = DatasetManifest.load(out_root).pairs[0]
    path = out_root / ref.rel_depth
    original = path.read_bytes()
    depth = load_depth_png(path)
    rgb = load_rgb_png(out_root / ref.rel_rgb)
    try:
        depth2 = depth.copy()
        depth2[depth2 > 0] += 1
        from rgbdaug.pngio import save_depth_png
        save_depth_png(path, depth2)
        from rgbdaug.dataset import DatasetError
        with pytest.raises(DatasetError):
            audit_dataset(src_root, out_root)
    finally:
        path.write_bytes(original)
    assert np.array_equal(load_depth_png(path), depth)
    del rgb

    _announce(capsys, (
        "ACCEPTANCE C8: PASS - dominance audit checked 200/200 pairs "
        "and rejects a tampered one"
    ))


def test_c9_full_resolution_throughput(tmp_path, capsys):
    """100 full-resolution (640x480) standard-tier pairs within 300s."""
    src_root = tmp_path / "source"
    make_synthetic_source(src_root, count=10, seed=55, size=(480, 640), scenes=2)

    out_root = tmp_path / "augmented"
    t0 = time.perf_counter()
    report = build_dataset(
        src_root, out_root, AugmentationParams(), global_seed=7,
        ratio=10.0, jobs=1, detail_tier="standard",
    )
    elapsed = time.perf_counter() - t0

    assert report.payload["planned"] == 100
    assert report.payload["accepted"] == 100
    pairs = DatasetManifest.load(out_root).pairs
    assert len(pairs) == 100
    sample = load_depth_png(out_root / pairs[0].rel_depth)
    assert sample.shape == (480, 640)
    assert elapsed <= 300.0, f"took {elapsed:.1f}s, budget 300s"

    _announce(capsys, (
        "ACCEPTANCE C9: PASS - 100 VGA pairs in "
        f"{elapsed:.1f}s ({elapsed / 100:.2f}s/pair, budget 300s)"
    ))
