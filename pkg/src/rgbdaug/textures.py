"""Procedural tileable textures and texture sampling.

Every texture is an image: a (H, W, 3) float32 array with values in
[0, 1], sampled bilinearly with repeat wrapping and texel centers at
(i + 0.5) / size. The six generator families all build their patterns
from functions with period 1 in uv, so each image tiles seamlessly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import make_generator

TEXTURE_FAMILIES = ("checker", "stripes", "marble", "wood", "dots", "gradient_mix")

DEFAULT_RESOLUTION = 128


@dataclass
class TextureSource:
    """A named image texture."""

    name: str
    pixels: np.ndarray  # (H, W, 3) float32 in [0, 1]

    @property
    def resolution(self) -> tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]


def sample_texture(pixels: np.ndarray, u, v) -> np.ndarray:
    """Bilinear texture lookup with repeat wrapping.

    Texel i covers [i/W, (i+1)/W) with its center at (i+0.5)/W, so
    sampling exactly at a center returns that texel's stored value.
    u maps to columns, v to rows. Accepts scalar or array uv; returns
    float64 with a trailing RGB axis.
    """
    h, w = pixels.shape[0], pixels.shape[1]
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)

    x = u * w - 0.5
    y = v * h - 0.5
    x0f = np.floor(x)
    y0f = np.floor(y)
    fx = (x - x0f)[..., None]
    fy = (y - y0f)[..., None]
    x0 = x0f.astype(np.int64) % w
    y0 = y0f.astype(np.int64) % h
    x1 = (x0 + 1) % w
    y1 = (y0 + 1) % h

    p = pixels.astype(np.float64, copy=False)
    top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def shift_texture_colors(pixels: np.ndarray, shift_rgb) -> np.ndarray:
    """Additive per-channel color shift, expressed in 8-bit units.

    A shift of +255 saturates a black texel to full; results clamp to
    [0, 1]. Returns a new float32 image.
    """
    shift = np.asarray(shift_rgb, dtype=np.float64)
    if shift.shape != (3,):
        raise ConfigError(f"color shift must have 3 channels, got shape {shift.shape}")
    out = pixels.astype(np.float64) + shift / 255.0
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _uv_grid(res: int) -> tuple[np.ndarray, np.ndarray]:
    """Texel-center uv coordinates: u varies along columns, v along rows."""
    centers = (np.arange(res) + 0.5) / res
    return np.meshgrid(centers, centers, indexing="xy")


def _palette(rng: np.random.Generator, count: int) -> np.ndarray:
    """Random colors kept away from pure black/white so lighting still
    has headroom in both directions."""
    return rng.uniform(0.08, 0.95, size=(count, 3))


def _periodic_value_noise(rng, res, cells=4, octaves=3, persistence=0.55) -> np.ndarray:
    """Tileable value noise in [0, 1]: smooth interpolation of a wrapped
    random lattice, summed over octaves."""
    acc = np.zeros((res, res))
    amp, norm, c = 1.0, 0.0, int(cells)
    for _ in range(octaves):
        lattice = rng.random((c, c))
        t = (np.arange(res) + 0.5) * c / res
        i0 = np.floor(t).astype(np.int64)
        f = t - i0
        i0 %= c
        i1 = (i0 + 1) % c
        wgt = f * f * (3.0 - 2.0 * f)
        g00 = lattice[np.ix_(i0, i0)]
        g01 = lattice[np.ix_(i0, i1)]
        g10 = lattice[np.ix_(i1, i0)]
        g11 = lattice[np.ix_(i1, i1)]
        wr, wc = wgt[:, None], wgt[None, :]
        acc += amp * ((g00 * (1 - wc) + g01 * wc) * (1 - wr)
                      + (g10 * (1 - wc) + g11 * wc) * wr)
        norm += amp
        amp *= persistence
        c *= 2
    return acc / norm


def _mix(colors: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Map t in [0, 1] through a piecewise-linear palette ramp."""
    n = colors.shape[0]
    pos = np.clip(t, 0.0, 1.0) * (n - 1)
    idx = np.minimum(pos.astype(np.int64), n - 2)
    frac = (pos - idx)[..., None]
    return colors[idx] * (1.0 - frac) + colors[idx + 1] * frac


def _tex_checker(rng, res):
    tiles = int(rng.integers(2, 9))
    c0, c1 = _palette(rng, 2)
    u, v = _uv_grid(res)
    parity = (np.floor(u * tiles).astype(np.int64) + np.floor(v * tiles).astype(np.int64)) % 2
    return np.where(parity[..., None] == 0, c0, c1)


def _tex_stripes(rng, res):
    count = int(rng.integers(2, 10))
    colors = _palette(rng, int(rng.integers(2, 4)))
    u, v = _uv_grid(res)
    axis = int(rng.integers(0, 3))
    coord = u if axis == 0 else v if axis == 1 else (u + v)
    band = np.floor(coord * count).astype(np.int64) % len(colors)
    return colors[band]


def _tex_marble(rng, res):
    c0, c1 = _palette(rng, 2)
    freq = int(rng.integers(2, 5))
    turbulence = rng.uniform(2.0, 6.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    noise = _periodic_value_noise(rng, res, cells=4, octaves=4)
    u, v = _uv_grid(res)
    t = 0.5 + 0.5 * np.sin(2.0 * np.pi * freq * (u + v) + turbulence * noise + phase)
    return c0 * (1.0 - t[..., None]) + c1 * t[..., None]


def _tex_wood(rng, res):
    c0, c1 = _palette(rng, 2)
    rings = int(rng.integers(4, 12))
    wobble = rng.uniform(0.5, 2.0)
    noise = _periodic_value_noise(rng, res, cells=4, octaves=3)
    u, v = _uv_grid(res)
    # sin(pi u) has period 1, so this radial stand-in tiles cleanly.
    r = np.sqrt(np.sin(np.pi * u) ** 2 + np.sin(np.pi * v) ** 2)
    t = 0.5 + 0.5 * np.sin(2.0 * np.pi * rings * r + wobble * noise)
    t = t ** 1.5
    return c0 * (1.0 - t[..., None]) + c1 * t[..., None]


def _tex_dots(rng, res):
    bg, fg = _palette(rng, 2)
    freq = int(rng.integers(3, 8))
    radius = rng.uniform(0.25, 0.42)
    u, v = _uv_grid(res)
    # Periodic squared distance to the nearest dot center.
    du = np.sin(np.pi * freq * u) / (np.pi * freq)
    dv = np.sin(np.pi * freq * v) / (np.pi * freq)
    d = np.sqrt(du * du + dv * dv) * freq
    edge = 0.05
    t = np.clip((radius - d) / edge, 0.0, 1.0)
    t = t * t * (3.0 - 2.0 * t)
    return bg * (1.0 - t[..., None]) + fg * t[..., None]


def _tex_gradient_mix(rng, res):
    colors = _palette(rng, int(rng.integers(3, 5)))
    u, v = _uv_grid(res)
    field = np.zeros_like(u)
    waves = int(rng.integers(2, 5))
    for _ in range(waves):
        fu = int(rng.integers(0, 4))
        fv = int(rng.integers(0, 4))
        if fu == 0 and fv == 0:
            fu = 1
        phase = rng.uniform(0.0, 2.0 * np.pi)
        field += rng.uniform(0.4, 1.0) * np.sin(2.0 * np.pi * (fu * u + fv * v) + phase)
    lo, hi = field.min(), field.max()
    t = (field - lo) / (hi - lo) if hi > lo else np.zeros_like(field)
    return _mix(colors, t)


_GENERATORS = {
    "checker": _tex_checker,
    "stripes": _tex_stripes,
    "marble": _tex_marble,
    "wood": _tex_wood,
    "dots": _tex_dots,
    "gradient_mix": _tex_gradient_mix,
}


def make_texture(family: str, seed: int, resolution: int = DEFAULT_RESOLUTION) -> TextureSource:
    """Generate one texture variant deterministically from (family, seed)."""
    if family not in _GENERATORS:
        raise ConfigError(f"unknown texture family {family!r}")
    if resolution < 2:
        raise ConfigError("texture resolution must be at least 2")
    rng = make_generator(seed)
    pixels = _GENERATORS[family](rng, int(resolution))
    pixels = np.clip(pixels, 0.0, 1.0).astype(np.float32)
    return TextureSource(name=f"{family}_{seed & 0xFFFFFFFF:08x}", pixels=pixels)


def solid_texture(rgb, resolution: int = 2) -> TextureSource:
    """Uniform single-color texture, mostly useful in tests."""
    rgb = np.clip(np.asarray(rgb, dtype=np.float32), 0.0, 1.0)
    if rgb.shape != (3,):
        raise ConfigError("solid_texture needs an RGB triple")
    pixels = np.broadcast_to(rgb, (resolution, resolution, 3)).copy()
    return TextureSource(name="solid", pixels=pixels)
