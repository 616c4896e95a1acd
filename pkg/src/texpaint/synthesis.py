"""Texture-space state machine: trimap, back-projection, cache updates.

The per-view loop classifies pixels (generate / refine / keep), protects
the keep region during blending, and back-projects painted pixels into
the UV atlas by inverse bilinear splatting with pull-push hole filling.

All mutating operations snapshot (T, W, V) onto a bounded history stack
and install freshly built arrays; installed arrays are never written in
place, so undo restores prior state bit-exactly and concurrent readers
always see a consistent snapshot.
"""

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgio import (
    decode_gray16,
    decode_rgb8,
    encode_gray16,
    encode_rgb8,
    resize_bilinear,
)
from .rasterizer import GBuffer

DEFAULT_TEXTURE_RES = 1024
DEFAULT_REFINE_MARGIN = 0.01
DEFAULT_MIP_LEVELS = 4
HISTORY_DEPTH = 16
UNPAINTED_GRAY = 0.5


@dataclass
class Trimap:
    """Disjoint pixel classes partitioning the rendered object mask."""

    generate: np.ndarray  # (H, W) bool, first-seen pixels
    refine: np.ndarray    # (H, W) bool, seen before at a worse angle
    keep: np.ndarray      # (H, W) bool, already good enough


class TextureState:
    """Texture atlas plus back-projection caches.

    T: (H, W, 3) float32 color; W: (H, W) float32 accumulated splat
    weight, 0 = never painted; V: (H, W) float32 max view cosine seen.

    The triple lives in one tuple that mutating ops replace wholesale,
    so a concurrent reader always sees a matching (T, W, V) even while
    an update is installing.
    """

    def __init__(self, T: np.ndarray, W: np.ndarray, V: np.ndarray):
        self._data = (T, W, V)
        self.history: deque = deque(maxlen=HISTORY_DEPTH)

    @property
    def T(self) -> np.ndarray:
        return self._data[0]

    @property
    def W(self) -> np.ndarray:
        return self._data[1]

    @property
    def V(self) -> np.ndarray:
        return self._data[2]

    @property
    def resolution(self) -> int:
        return self.W.shape[0]

    def snapshot(self):
        return self._data


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def new_texture_state(resolution: int = DEFAULT_TEXTURE_RES) -> TextureState:
    """Fresh all-unpainted state; color starts at the mid-gray shown for unpainted texels."""
    t = np.full((resolution, resolution, 3), UNPAINTED_GRAY, dtype=np.float32)
    w = np.zeros((resolution, resolution), dtype=np.float32)
    v = np.zeros((resolution, resolution), dtype=np.float32)
    return TextureState(T=_freeze(t), W=_freeze(w), V=_freeze(v))


def _push(state: TextureState) -> None:
    state.history.append(state.snapshot())


def _install(state: TextureState, t, w, v) -> None:
    state._data = (
        _freeze(np.ascontiguousarray(t, dtype=np.float32)),
        _freeze(np.ascontiguousarray(w, dtype=np.float32)),
        _freeze(np.ascontiguousarray(v, dtype=np.float32)),
    )


def can_undo(state: TextureState) -> bool:
    return len(state.history) > 0


def undo(state: TextureState) -> TextureState:
    """Restore the most recent snapshot bit-exactly; no-op when history is empty."""
    if state.history:
        state._data = state.history.pop()
    return state


def compute_trimap(gbuffer: GBuffer, refine_margin: float = DEFAULT_REFINE_MARGIN) -> Trimap:
    """Classify object pixels by the sampled weight/cosine caches.

    generate: never painted (sampled weight exactly 0). refine: painted,
    but this view sees the surface at a cosine better than the cache by
    more than the margin. keep: everything else on the object.
    """
    obj = gbuffer.object_mask
    generate = obj & (gbuffer.w_sampled == 0.0)
    refine = obj & (gbuffer.w_sampled > 0.0) & \
        (gbuffer.v_sampled + refine_margin < gbuffer.view_cos)
    keep = obj & ~generate & ~refine
    return Trimap(generate=generate, refine=refine, keep=keep)


def blend_keep(inpainted: np.ndarray, original: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Per-pixel select: original on keep pixels, inpainted elsewhere."""
    if inpainted.shape != original.shape:
        raise ValueError(f"shape mismatch: {inpainted.shape} vs {original.shape}")
    if keep.shape != inpainted.shape[:2]:
        raise ValueError(f"mask shape {keep.shape} does not match image {inpainted.shape}")
    return np.where(keep[:, :, None], original, inpainted)


def grid_put(uv_points: np.ndarray, values: np.ndarray, weights: np.ndarray,
             target_size: int, levels: int = DEFAULT_MIP_LEVELS,
             return_coverage: bool = False):
    """Scatter UV-space samples into a texel grid, mipmap-filled.

    Each sample is splatted to the 4 texels bracketing its continuous
    texel coordinate (the inverse of bilinear interpolation) at every
    mip level; holes at fine levels are filled by weight-aware bilinear
    upsampling of coarser levels (pull-push). Texels no level covers
    stay 0.

    Returns (image (S, S, C) float32, weight (S, S) float64) where the
    weight map is the exact level-0 accumulation, so its total matches
    the input weight total to accumulation precision. With
    return_coverage a third (S, S) bool array marks texels filled from
    any level.
    """
    if target_size < 2 or target_size & (target_size - 1):
        raise ValueError(f"target_size must be a power of two, got {target_size}")
    max_levels = int(np.log2(target_size)) - 1
    if not 1 <= levels <= max_levels:
        raise ValueError(f"levels must be in [1, {max_levels}] for size {target_size}")
    uv_points = np.atleast_2d(np.asarray(uv_points, dtype=np.float64))
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    weights = np.asarray(weights, dtype=np.float64).ravel()
    n = len(uv_points) if uv_points.size else 0
    if values.shape[0] != n or weights.shape[0] != n:
        raise ValueError(
            f"length mismatch: {n} points, {values.shape[0]} values, {weights.shape[0]} weights")
    channels = values.shape[1] if values.size else 1

    level_avg = []
    level_cov = []
    wsum0 = None
    for lv in range(levels):
        size = target_size >> lv
        acc = np.zeros((size, size, channels), dtype=np.float64)
        wsum = np.zeros((size, size), dtype=np.float64)
        if n:
            _splat(uv_points, values, weights, acc, wsum)
        cov = wsum > 0.0
        avg = np.zeros_like(acc)
        avg[cov] = acc[cov] / wsum[cov, None]
        level_avg.append(avg)
        level_cov.append(cov)
        if lv == 0:
            wsum0 = wsum

    filled = level_avg[-1]
    fcov = level_cov[-1].astype(np.float64)
    for lv in range(levels - 2, -1, -1):
        size = target_size >> lv
        num = resize_bilinear(filled * fcov[:, :, None], size, size)
        den = resize_bilinear(fcov, size, size)
        up = np.zeros_like(num)
        hit = den > 0.0
        up[hit] = num[hit] / den[hit, None]
        cov = level_cov[lv]
        filled = np.where(cov[:, :, None], level_avg[lv], up)
        fcov = np.maximum(cov.astype(np.float64), hit.astype(np.float64))

    if return_coverage:
        return filled.astype(np.float32), wsum0, fcov > 0.0
    return filled.astype(np.float32), wsum0


def _splat_corners(uv_points, size):
    """The 4 bracketing texels and bilinear weights for each sample."""
    x = uv_points[:, 0] * size - 0.5
    y = (1.0 - uv_points[:, 1]) * size - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    for dx, dy, bw in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = np.clip(x0 + dx, 0, size - 1)
        yi = np.clip(y0 + dy, 0, size - 1)
        yield yi, xi, bw


def _splat(uv_points, values, weights, acc, wsum):
    """Bilinear scatter-add into one level; edge contributions clamp inward
    so every sample deposits its full weight."""
    for yi, xi, bw in _splat_corners(uv_points, wsum.shape[0]):
        w = bw * weights
        np.add.at(wsum, (yi, xi), w)
        np.add.at(acc, (yi, xi), values * w[:, None])


def splat_max(uv_points: np.ndarray, scalars: np.ndarray, size: int) -> np.ndarray:
    """Per-texel maximum over each sample's bilinear footprint.

    Corners whose bilinear weight is exactly 0 receive nothing, so the
    support matches the weighted splat's support exactly.
    """
    out = np.zeros((size, size), dtype=np.float64)
    scalars = np.asarray(scalars, dtype=np.float64)
    for yi, xi, bw in _splat_corners(np.asarray(uv_points, dtype=np.float64), size):
        m = bw > 0.0
        if m.any():
            np.maximum.at(out, (yi[m], xi[m]), scalars[m])
    return out


def update_texture(state: TextureState, gbuffer: GBuffer, blended: np.ndarray,
                   trimap: Trimap, levels: int = DEFAULT_MIP_LEVELS,
                   refine_mode: str = "blend") -> TextureState:
    """Back-project generate/refine pixels into the atlas and merge.

    Per-sample splat weight is the pixel's view cosine, so grazing
    pixels contribute less. Affected texels (level-0 splat weight > 0)
    blend by accumulated weight; every other texel, in particular any
    reached only from keep pixels, is untouched. The cosine cache keeps
    the per-texel maximum.
    """
    if refine_mode not in ("blend", "overwrite"):
        raise ValueError(f"refine_mode must be blend or overwrite, got {refine_mode!r}")
    _push(state)
    src = trimap.generate | trimap.refine
    ys, xs = np.nonzero(src)
    if len(ys) == 0:
        return state
    cos = gbuffer.view_cos[ys, xs].astype(np.float64)
    ok = cos > 0.0  # zero-cosine pixels would splat nothing
    if not ok.any():
        return state
    ys, xs, cos = ys[ok], xs[ok], cos[ok]
    uv = gbuffer.uv[ys, xs].astype(np.float64)
    vals = blended[ys, xs].astype(np.float64)

    img, w_new = grid_put(uv, vals, cos, state.resolution, levels=levels)
    t_new = img.astype(np.float64)
    # cosine cache keeps the per-texel maximum, so re-rendering the same
    # view never re-classifies its own pixels as refine
    cos_tex = splat_max(uv, cos, state.resolution)
    affected = w_new > 0.0

    t_old = state.T.astype(np.float64)
    w_old = state.W.astype(np.float64)
    wn = w_new.astype(np.float64)
    if refine_mode == "overwrite":
        t = np.where(affected[:, :, None], t_new, t_old)
        w = np.where(affected, wn, w_old)
    else:
        denom = np.where(affected, w_old + wn, 1.0)
        t = np.where(affected[:, :, None],
                     (w_old[:, :, None] * t_old + wn[:, :, None] * t_new) / denom[:, :, None],
                     t_old)
        w = w_old + wn
    v = np.where(affected, np.maximum(state.V, cos_tex.astype(np.float32)), state.V)
    _install(state, t, w, v)
    return state


def erase_region(state: TextureState, gbuffer: GBuffer, mask2d: np.ndarray) -> TextureState:
    """Reset every texel hit by splatting the masked visible pixels.

    Hit texels return to the unpainted state: mid-gray color, zero
    weight, zero cosine cache.
    """
    if mask2d.shape != gbuffer.object_mask.shape:
        raise ValueError(
            f"mask shape {mask2d.shape} does not match view {gbuffer.object_mask.shape}")
    _push(state)
    src = mask2d & gbuffer.object_mask
    ys, xs = np.nonzero(src)
    if len(ys) == 0:
        return state
    uv = gbuffer.uv[ys, xs].astype(np.float64)
    ones = np.ones(len(ys), dtype=np.float64)
    _, wmap = grid_put(uv, ones[:, None], ones, state.resolution, levels=1)
    hit = wmap > 0.0
    t = np.where(hit[:, :, None], np.float32(UNPAINTED_GRAY), state.T)
    w = np.where(hit, np.float32(0.0), state.W)
    v = np.where(hit, np.float32(0.0), state.V)
    _install(state, t, w, v)
    return state


def dilate_texture(state: TextureState, iterations: int = 1) -> TextureState:
    """Grow painted texels outward to fill UV gutters.

    Each iteration paints every unpainted texel with a painted
    8-neighbor, assigning the average neighbor color; painted texels
    never change. New texels get the smallest positive weight in the
    map so they stay cheap to refine later.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    _push(state)
    t = state.T.copy()
    w = state.W.copy()
    painted = w > 0.0
    if not painted.any():
        return state
    minw = np.float32(w[painted].min())
    for _ in range(iterations):
        pf = painted.astype(np.float32)
        csum = _neighbor_sum(t * pf[:, :, None])
        cnt = _neighbor_sum(pf)
        grow = ~painted & (cnt > 0.0)
        if not grow.any():
            break
        t[grow] = csum[grow] / cnt[grow, None]
        w[grow] = minw
        painted |= grow
    _install(state, t, w, state.V.copy())
    return state


def _neighbor_sum(img: np.ndarray) -> np.ndarray:
    """Sum over the 8-neighborhood with zero padding at the borders."""
    h, w = img.shape[:2]
    pad = np.zeros((h + 2, w + 2) + img.shape[2:], dtype=img.dtype)
    pad[1:-1, 1:-1] = img
    out = np.zeros_like(img)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            out += pad[dy:dy + h, dx:dx + w]
    return out


def uv_coverage_mask(mesh, resolution: int) -> np.ndarray:
    """Texels referenced by the mesh's UV mapping (center-in-triangle test).

    Rasterizes each face's UV triangle in texel space; a texel counts as
    referenced when its center lies inside (boundary inclusive).
    """
    covered = np.zeros((resolution, resolution), dtype=bool)
    uvs = mesh.uvs[mesh.faces[:, :, 2]]  # (F, 3, 2)
    x = uvs[:, :, 0] * resolution - 0.5
    y = (1.0 - uvs[:, :, 1]) * resolution - 0.5
    for i in range(len(x)):
        ax, bx, cx = x[i]
        ay, by, cy = y[i]
        x0 = max(int(np.floor(min(ax, bx, cx))), 0)
        x1 = min(int(np.ceil(max(ax, bx, cx))) + 1, resolution)
        y0 = max(int(np.floor(min(ay, by, cy))), 0)
        y1 = min(int(np.ceil(max(ay, by, cy))) + 1, resolution)
        if x0 >= x1 or y0 >= y1:
            continue
        gx, gy = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
        denom = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
        if denom == 0:
            continue
        l0 = ((by - cy) * (gx - cx) + (cx - bx) * (gy - cy)) / denom
        l1 = ((cy - ay) * (gx - cx) + (ax - cx) * (gy - cy)) / denom
        l2 = 1.0 - l0 - l1
        inside = (l0 >= 0) & (l1 >= 0) & (l2 >= 0)
        covered[gy[inside], gx[inside]] = True
    return covered


def save_state(state: TextureState, directory) -> None:
    """Serialize to a directory: debuggable PNG views plus an exact copy.

    T.png is 8-bit RGB, W.png/V.png 16-bit gray (W scaled into [0,1] by
    the recorded w_scale); state.npz carries the exact float arrays so a
    round trip is bit-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    wmax = float(state.W.max())
    w_scale = wmax if wmax > 0 else 1.0
    (directory / "T.png").write_bytes(encode_rgb8(state.T))
    (directory / "W.png").write_bytes(encode_gray16(state.W / w_scale))
    (directory / "V.png").write_bytes(encode_gray16(state.V))
    meta = {"resolution": state.resolution, "w_scale": w_scale}
    (directory / "meta.json").write_text(json.dumps(meta, indent=2))
    np.savez_compressed(directory / "state.npz", T=state.T, W=state.W, V=state.V)


def load_state(directory) -> TextureState:
    """Inverse of save_state; prefers the exact arrays, falls back to PNGs."""
    directory = Path(directory)
    npz = directory / "state.npz"
    if npz.exists():
        data = np.load(npz)
        state = TextureState(
            T=_freeze(np.ascontiguousarray(data["T"], dtype=np.float32)),
            W=_freeze(np.ascontiguousarray(data["W"], dtype=np.float32)),
            V=_freeze(np.ascontiguousarray(data["V"], dtype=np.float32)),
        )
        return state
    meta = json.loads((directory / "meta.json").read_text())
    t = decode_rgb8((directory / "T.png").read_bytes())
    w = decode_gray16((directory / "W.png").read_bytes()) * meta["w_scale"]
    v = decode_gray16((directory / "V.png").read_bytes())
    state = TextureState(T=_freeze(t.astype(np.float32)),
                         W=_freeze(w.astype(np.float32)),
                         V=_freeze(v.astype(np.float32)))
    return state
