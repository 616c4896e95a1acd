"""Software rasterizer producing the per-view G-buffers.

Perspective-correct, z-tested triangle rasterization with no GPU
dependency. Output is deterministic: triangles are resolved in index
order with a strict depth test, so re-rendering identical inputs yields
bit-identical buffers.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .camera import OrbitCamera, camera_from_orbit
from .errors import EmptyRenderError
from .imgio import encode_gray8, encode_gray16, encode_rgb8
from .mesh import Mesh

if TYPE_CHECKING:  # pragma: no cover
    from .synthesis import TextureState

_NEAR = 0.01
_UNPAINTED_GRAY = 0.5
# cap on elements per vectorized triangle batch (memory ceiling ~100MB)
_BATCH_BUDGET = 4_000_000


@dataclass
class GBuffer:
    """Per-pixel render outputs for one view.

    Scalar channels are 0 outside `object_mask`; `painted_mask` marks
    surface pixels whose nearest texel has accumulated weight > 0.
    """

    rgb: np.ndarray           # (H, W, 3) float32 in [0, 1]
    object_mask: np.ndarray   # (H, W) bool
    painted_mask: np.ndarray  # (H, W) bool
    depth: np.ndarray         # (H, W) float32 in [0, 1], nearer = 1
    normal: np.ndarray        # (H, W, 3) float32 world-space unit vectors
    uv: np.ndarray            # (H, W, 2) float32 in [0, 1]^2
    view_cos: np.ndarray      # (H, W) float32 in [0, 1]
    w_sampled: np.ndarray     # (H, W) float32 >= 0
    v_sampled: np.ndarray     # (H, W) float32 in [0, 1]

    @property
    def resolution(self) -> int:
        return self.object_mask.shape[0]


def sample_nearest(tex: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Nearest-texel lookup. Texel (i, j) center sits at ((j+0.5)/W, 1-(i+0.5)/H)."""
    h, w = tex.shape[:2]
    x = np.clip(np.floor(u * w).astype(np.int64), 0, w - 1)
    y = np.clip(np.floor((1.0 - v) * h).astype(np.int64), 0, h - 1)
    return tex[y, x]


def sample_bilinear(tex: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear lookup with edge clamping; same texel-center convention."""
    h, w = tex.shape[:2]
    x = u * w - 0.5
    y = (1.0 - v) * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0).astype(tex.dtype)
    fy = (y - y0).astype(tex.dtype)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    if tex.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = tex[y0c, x0c] * (1 - fx) + tex[y0c, x1c] * fx
    bot = tex[y1c, x0c] * (1 - fx) + tex[y1c, x1c] * fx
    return top * (1 - fy) + bot * fy


def _gather_corners(mesh: Mesh):
    f = mesh.faces
    pos = mesh.vertices[f[:, :, 0]]   # (F, 3, 3)
    nrm = mesh.normals[f[:, :, 1]]    # (F, 3, 3)
    uv = mesh.uvs[f[:, :, 2]]         # (F, 3, 2)
    return pos, nrm, uv


def _clip_near(pos_cam, pos_w, nrm, uv):
    """Clip triangles against z_cam = -near, emitting 0..2 triangles each.

    Fully-visible triangles pass through untouched; the (rare) crossing
    ones are clipped per triangle.
    """
    z = pos_cam[:, :, 2]
    in_front = z < -_NEAR
    keep_all = in_front.all(axis=1)
    if keep_all.all():
        return pos_cam, pos_w, nrm, uv
    crossing = ~keep_all & in_front.any(axis=1)

    out = [(pos_cam[keep_all], pos_w[keep_all], nrm[keep_all], uv[keep_all])]
    for t in np.nonzero(crossing)[0]:
        poly = []  # clipped polygon, each vertex = (cam, world, normal, uv)
        corners = [(pos_cam[t, i], pos_w[t, i], nrm[t, i], uv[t, i]) for i in range(3)]
        for i in range(3):
            a = corners[i]
            b = corners[(i + 1) % 3]
            a_in = a[0][2] < -_NEAR
            b_in = b[0][2] < -_NEAR
            if a_in:
                poly.append(a)
            if a_in != b_in:
                s = (-_NEAR - a[0][2]) / (b[0][2] - a[0][2])
                poly.append(tuple(ai + s * (bi - ai) for ai, bi in zip(a, b)))
        for i in range(1, len(poly) - 1):
            tri = (poly[0], poly[i], poly[i + 1])
            out.append((
                np.stack([v[0] for v in tri])[None],
                np.stack([v[1] for v in tri])[None],
                np.stack([v[2] for v in tri])[None],
                np.stack([v[3] for v in tri])[None],
            ))
    return tuple(np.concatenate([o[k] for o in out]) for k in range(4))


def _rasterize(sx, sy, w, attrs, res):
    """Z-tested scatter of perspective-correct attributes into buffers.

    sx, sy: (F, 3) screen coordinates; w: (F, 3) positive clip depth;
    attrs: (F, 3, A) per-corner attribute rows. Returns (zbuf, attr_buf).
    Triangles are processed in batches grouped by bounding-box size; ties
    resolve to the later triangle, which keeps output order-deterministic.
    """
    n_attr = attrs.shape[2]
    zbuf = np.full(res * res, np.inf, dtype=np.float64)
    abuf = np.zeros((res * res, n_attr), dtype=np.float64)

    x0 = np.clip(np.floor(sx.min(axis=1) - 0.5), 0, res - 1).astype(np.int64)
    x1 = np.clip(np.ceil(sx.max(axis=1) + 0.5), 0, res - 1).astype(np.int64)
    y0 = np.clip(np.floor(sy.min(axis=1) - 0.5), 0, res - 1).astype(np.int64)
    y1 = np.clip(np.ceil(sy.max(axis=1) + 0.5), 0, res - 1).astype(np.int64)
    on_screen = (sx.max(axis=1) > 0) & (sx.min(axis=1) < res) & \
                (sy.max(axis=1) > 0) & (sy.min(axis=1) < res)
    side = np.maximum(x1 - x0, y1 - y0) + 1

    inv_w = 1.0 / w
    order = np.arange(len(sx))

    size_edges = [8, 16, 32, 64, 128, 256, 512, 1 << 30]
    lo = 0
    for hi in size_edges:
        sel = order[on_screen & (side > lo) & (side <= hi)]
        lo = hi
        if len(sel) == 0:
            continue
        s = min(hi, res)
        step = max(1, _BATCH_BUDGET // (s * s))
        for start in range(0, len(sel), step):
            batch = sel[start:start + step]
            _raster_batch(batch, s, sx, sy, inv_w, attrs, x0, y0, zbuf, abuf, res)
    return zbuf.reshape(res, res), abuf.reshape(res, res, n_attr)


def _raster_batch(batch, s, sx, sy, inv_w, attrs, x0, y0, zbuf, abuf, res):
    n = len(batch)
    ox = np.arange(s)
    px = x0[batch, None, None] + ox[None, None, :]      # (n, 1, s)
    py = y0[batch, None, None] + ox[None, :, None]      # (n, s, 1)
    pcx = px + 0.5
    pcy = py + 0.5

    ax, bx, cx = (sx[batch, i][:, None, None] for i in range(3))
    ay, by, cy = (sy[batch, i][:, None, None] for i in range(3))
    denom = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    ok = np.abs(denom) > 1e-12
    denom = np.where(ok, denom, 1.0)
    l0 = ((by - cy) * (pcx - cx) + (cx - bx) * (pcy - cy)) / denom
    l1 = ((cy - ay) * (pcx - cx) + (ax - cx) * (pcy - cy)) / denom
    l2 = 1.0 - l0 - l1

    inside = (l0 >= 0) & (l1 >= 0) & (l2 >= 0) & ok
    inside &= (px < res) & (py < res)

    tri_id, iy, ix = np.nonzero(inside)
    if len(tri_id) == 0:
        return
    t = batch[tri_id]
    li0 = l0[tri_id, iy, ix] * inv_w[t, 0]
    li1 = l1[tri_id, iy, ix] * inv_w[t, 1]
    li2 = l2[tri_id, iy, ix] * inv_w[t, 2]
    inv = li0 + li1 + li2
    # delta form of the 1/z plane equation: exactly constant for
    # fronto-parallel triangles, so same-depth surfaces stay bit-equal
    inv_z = inv_w[t, 2] + l0[tri_id, iy, ix] * (inv_w[t, 0] - inv_w[t, 2]) \
        + l1[tri_id, iy, ix] * (inv_w[t, 1] - inv_w[t, 2])
    depth = 1.0 / inv_z

    flat = py[tri_id, iy, 0] * res + px[tri_id, 0, ix]
    np.minimum.at(zbuf, flat, depth)
    win = depth == zbuf[flat]
    if not win.any():
        return
    fw = flat[win]
    vals = (li0[win, None] * attrs[t[win], 0]
            + li1[win, None] * attrs[t[win], 1]
            + li2[win, None] * attrs[t[win], 2]) / inv[win, None]
    abuf[fw] = vals


def render(mesh: Mesh, texture_state: "TextureState", camera: OrbitCamera,
           backface_cull: bool = True) -> GBuffer:
    """Render the mesh with the current texture into a GBuffer.

    rgb samples the texture bilinearly where the nearest texel is
    painted and shows mid gray elsewhere; depth is min-max normalized
    per view with the nearest surface at 1.0; weight/cosine caches are
    sampled nearest-texel so painted/unpainted texels never mix.

    Raises EmptyRenderError when the object covers zero pixels.
    """
    res = camera.resolution
    view, _ = camera_from_orbit(camera.elevation, camera.azimuth, camera.radius, camera.fovy)
    cam_pos = camera.position
    f = 1.0 / np.tan(np.radians(camera.fovy) / 2.0)

    pos_w, nrm, uv = _gather_corners(mesh)
    pos_cam = pos_w @ view[:3, :3].T + view[:3, 3]

    pos_cam, pos_w, nrm, uv = _clip_near(pos_cam, pos_w, nrm, uv)
    if len(pos_cam) == 0:
        raise EmptyRenderError("no geometry in front of the camera")

    w = -pos_cam[:, :, 2]  # positive view depth
    ndc_x = f * pos_cam[:, :, 0] / w
    ndc_y = f * pos_cam[:, :, 1] / w
    sx = (ndc_x + 1.0) * 0.5 * res
    sy = (1.0 - (ndc_y + 1.0) * 0.5) * res

    if backface_cull:
        area2 = ((sx[:, 1] - sx[:, 0]) * (sy[:, 2] - sy[:, 0])
                 - (sx[:, 2] - sx[:, 0]) * (sy[:, 1] - sy[:, 0]))
        front = area2 < 0.0  # NDC-CCW triangles are clockwise in y-down screen space
        sx, sy, w = sx[front], sy[front], w[front]
        pos_w, nrm, uv = pos_w[front], nrm[front], uv[front]
        if len(sx) == 0:
            raise EmptyRenderError("all triangles back-facing")

    attrs = np.concatenate([pos_w, nrm, uv], axis=2)  # (F, 3, 8)
    zbuf, abuf = _rasterize(sx, sy, w, attrs, res)

    object_mask = np.isfinite(zbuf)
    if not object_mask.any():
        raise EmptyRenderError("object out of frame")

    oy, ox = np.nonzero(object_mask)
    p_world = abuf[oy, ox, 0:3]
    p_normal = abuf[oy, ox, 3:6]
    p_uv = np.clip(abuf[oy, ox, 6:8], 0.0, 1.0)

    nlen = np.linalg.norm(p_normal, axis=1, keepdims=True)
    p_normal = p_normal / np.where(nlen > 0, nlen, 1.0)
    to_cam = cam_pos[None, :] - p_world
    to_cam /= np.linalg.norm(to_cam, axis=1, keepdims=True)
    p_cos = np.clip(np.sum(p_normal * to_cam, axis=1), 0.0, 1.0)

    zvals = zbuf[oy, ox]
    znear = zvals.min()
    zfar = zvals.max()
    if zfar - znear > 1e-9:
        p_depth = np.clip((zfar - zvals) / (zfar - znear), 0.0, 1.0)
    else:
        p_depth = np.ones_like(zvals)  # whole object at one depth: nearest convention

    u, v = p_uv[:, 0], p_uv[:, 1]
    # one atomic grab so a concurrent update cannot hand us a mixed triple
    t_tex, w_tex, v_tex = texture_state.snapshot()
    p_w = sample_nearest(w_tex, u, v)
    p_v = sample_nearest(v_tex, u, v)
    p_painted = p_w > 0.0
    p_rgb = np.full((len(u), 3), _UNPAINTED_GRAY, dtype=np.float32)
    if p_painted.any():
        p_rgb[p_painted] = sample_bilinear(t_tex, u[p_painted], v[p_painted])

    def scatter(values, shape, dtype=np.float32):
        buf = np.zeros(shape, dtype=dtype)
        buf[oy, ox] = values
        return buf

    return GBuffer(
        rgb=scatter(p_rgb, (res, res, 3)),
        object_mask=object_mask,
        painted_mask=scatter(p_painted, (res, res), bool),
        depth=scatter(p_depth.astype(np.float32), (res, res)),
        normal=scatter(p_normal.astype(np.float32), (res, res, 3)),
        uv=scatter(p_uv.astype(np.float32), (res, res, 2)),
        view_cos=scatter(p_cos.astype(np.float32), (res, res)),
        w_sampled=scatter(p_w.astype(np.float32), (res, res)),
        v_sampled=scatter(p_v.astype(np.float32), (res, res)),
    )


_AUX_MODES = ("rgb", "depth", "alpha", "normal", "viewcos")


def render_aux(gbuffer: GBuffer, mode: str = "rgb") -> np.ndarray:
    """Map a GBuffer to a displayable (H, W, 3) image for the given mode."""
    if mode not in _AUX_MODES:
        raise ValueError(f"mode must be one of {_AUX_MODES}, got {mode!r}")
    if mode == "rgb":
        img = gbuffer.rgb.copy()
        img[~gbuffer.object_mask] = 0.0
        return img
    if mode == "depth":
        return np.repeat(gbuffer.depth[:, :, None], 3, axis=2)
    if mode == "alpha":
        return np.repeat(gbuffer.object_mask[:, :, None].astype(np.float32), 3, axis=2)
    if mode == "viewcos":
        return np.repeat(gbuffer.view_cos[:, :, None], 3, axis=2)
    img = (gbuffer.normal + 1.0) * 0.5
    img[~gbuffer.object_mask] = 0.0
    return img.astype(np.float32)


def channel_png(gbuffer: GBuffer, channel: str) -> bytes:
    """Export one G-buffer channel as PNG: masks 8-bit, depth 16-bit, rgb 8-bit."""
    if channel == "rgb":
        return encode_rgb8(gbuffer.rgb)
    if channel in ("object_mask", "painted_mask"):
        return encode_gray8(getattr(gbuffer, channel))
    if channel == "depth":
        return encode_gray16(gbuffer.depth)
    if channel in ("view_cos", "v_sampled"):
        return encode_gray16(getattr(gbuffer, channel))
    raise ValueError(f"unsupported channel {channel!r}")
