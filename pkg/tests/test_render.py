from dataclasses import replace

import numpy as np
import pytest

from rgbdaug.errors import ConfigError
from rgbdaug.geometry import AffineTransform, PinholeCamera
from rgbdaug.render import (
    build_render_soup,
    render_virtual_layer,
    shade_gbuffer,
    trace_gbuffer_bruteforce,
    trace_gbuffer_raster,
)
from rgbdaug.sampling import AugmentationParams, SceneSpec, sample_scene


def _background(camera, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(camera.height, camera.width, 3), dtype=np.uint8)


def test_routes_identical_across_seeds(low_catalog, small_camera):
    bg = _background(small_camera)
    params = AugmentationParams(max_objects=3)
    for seed in (2, 9, 27, 51):
        spec = sample_scene(seed, params, low_catalog, small_camera)
        a = render_virtual_layer(spec, low_catalog, bg, route="raster")
        b = render_virtual_layer(spec, low_catalog, bg, route="bruteforce")
        assert np.array_equal(a.rgb, b.rgb), seed
        assert np.array_equal(a.depth, b.depth), seed
        assert np.array_equal(a.mask, b.mask), seed
        assert a.coverage == b.coverage


def test_gbuffers_identical(low_catalog, small_camera):
    spec = sample_scene(5, AugmentationParams(max_objects=4), low_catalog, small_camera)
    soup = build_render_soup(spec, low_catalog)
    ra = trace_gbuffer_raster(soup)
    rb = trace_gbuffer_bruteforce(soup)
    assert np.array_equal(ra.tri, rb.tri)
    assert np.array_equal(ra.t, rb.t)
    assert np.array_equal(ra.u, rb.u)
    assert np.array_equal(ra.v, rb.v)
    assert np.array_equal(ra.cover, rb.cover)


def test_render_deterministic(low_catalog, small_camera):
    bg = _background(small_camera, 3)
    spec = sample_scene(12, AugmentationParams(), low_catalog, small_camera)
    a = render_virtual_layer(spec, low_catalog, bg)
    b = render_virtual_layer(spec, low_catalog, bg)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.depth, b.depth)


def test_background_untouched_outside_mask(low_catalog, small_camera):
    bg = _background(small_camera, 1)
    spec = sample_scene(4, AugmentationParams(max_objects=2), low_catalog, small_camera)
    layer = render_virtual_layer(spec, low_catalog, bg)
    outside = ~layer.mask
    assert np.array_equal(layer.rgb[outside], bg[outside])
    assert np.all(layer.depth[outside] == 0.0)
    assert np.all(layer.depth[layer.mask] > 0.0)


def test_coverage_is_mask_mean(low_catalog, small_camera):
    bg = _background(small_camera, 2)
    spec = sample_scene(8, AugmentationParams(), low_catalog, small_camera)
    layer = render_virtual_layer(spec, low_catalog, bg)
    assert layer.coverage == pytest.approx(layer.mask.mean())
    assert layer.mask.any()


def test_empty_scene_is_identity(low_catalog, small_camera):
    bg = _background(small_camera, 4)
    spec = sample_scene(1, AugmentationParams(max_objects=1), low_catalog, small_camera)
    empty = SceneSpec.from_json(spec.to_json())
    empty.objects = []
    layer = render_virtual_layer(empty, low_catalog, bg)
    assert np.array_equal(layer.rgb, bg)
    assert not layer.mask.any()
    assert layer.coverage == 0.0


def test_single_square_depth_exact(low_catalog):
    # Axis-aligned unit square at z = 5: planar depth at every covered
    # pixel is exactly 5.0 because rays carry z = 1.
    camera = PinholeCamera.from_fov(60.0, width=32, height=24)
    spec = sample_scene(1, AugmentationParams(max_objects=1), low_catalog, camera)
    probe = SceneSpec.from_json(spec.to_json())
    flat = AffineTransform(
        scale=np.ones(3), rotation=np.eye(3), translation=np.array([0.0, 0.0, 5.0])
    )
    entry = low_catalog.meshes.entry("box_00")
    tex = low_catalog.textures.keys[0]
    probe.objects = [
        replace(
            probe.objects[0],
            mesh_key="box_00",
            transform=flat,
            textures={g: tex for g in entry.group_names},
        )
    ]
    obj = probe.objects[0]
    soup = build_render_soup(probe, low_catalog)
    g = trace_gbuffer_raster(soup)
    hit = g.tri >= 0
    assert hit.any()
    # The camera looks straight at the box face nearest the origin.
    zmin = (entry.mesh.vertices[:, 2].min() * obj.transform.scale[2]) + 5.0
    center = g.t[camera.height // 2, camera.width // 2]
    assert center == zmin


def test_near_plane_culling_shared(low_catalog, small_camera):
    bg = _background(small_camera, 5)
    spec = sample_scene(6, AugmentationParams(max_objects=1), low_catalog, small_camera)
    straddle = SceneSpec.from_json(spec.to_json())
    # Drop the object onto the camera so it straddles the near plane.
    first = straddle.objects[0]
    moved = replace(
        first,
        transform=replace(first.transform, translation=np.array([0.0, 0.0, 0.2])),
    )
    straddle.objects = [moved]
    a = render_virtual_layer(straddle, low_catalog, bg, route="raster")
    b = render_virtual_layer(straddle, low_catalog, bg, route="bruteforce")
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.depth, b.depth)
    if a.mask.any():
        assert a.depth[a.mask].min() > straddle.camera.near_plane


def test_soup_rejects_wrong_catalog(low_catalog, small_camera):
    spec = sample_scene(3, AugmentationParams(), low_catalog, small_camera)
    spec.catalog_id = "not-this-catalog"
    with pytest.raises(ConfigError):
        build_render_soup(spec, low_catalog)


def test_unknown_route_rejected(low_catalog, small_camera):
    bg = _background(small_camera)
    spec = sample_scene(3, AugmentationParams(), low_catalog, small_camera)
    with pytest.raises(ConfigError):
        render_virtual_layer(spec, low_catalog, bg, route="hybrid")


def test_silhouette_blend_partial_pixels(low_catalog, small_camera):
    bg = _background(small_camera, 6)
    spec = sample_scene(9, AugmentationParams(), low_catalog, small_camera)
    soup = build_render_soup(spec, low_catalog)
    g = trace_gbuffer_raster(soup)
    hit = g.tri >= 0
    partial = hit & (g.cover < 4)
    interior = hit & (g.cover == 4)
    assert partial.any() and interior.any()
    layer = render_virtual_layer(spec, low_catalog, bg)
    # Full-cover pixels owe nothing to the background; partial pixels mix
    # toward it, so flipping the background must change only them.
    bg2 = 255 - bg
    layer2 = render_virtual_layer(spec, low_catalog, bg2)
    changed = np.any(layer.rgb != layer2.rgb, axis=2)
    assert not (changed & interior).any()
    assert (changed & partial).sum() > 0
