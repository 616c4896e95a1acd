"""Session engine and HTTP API.

A session owns one normalized mesh and its TextureState. Mutating
operations (inpaint, auto, erase, undo, init, save) are serialized per
session with a non-blocking lock: a second writer gets 409 instead of
queueing. Renders and state reads never take the lock; they work on the
atomic texture snapshot.

Every view commits atomically: the texture is only touched after the
backend call succeeds, so a failed view leaves (T, W, V) bit-identical.
"""

import json
import os
import threading
import uuid
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import backend as backend_mod
from .backend import InpaintRequest, mock_inpaint, remote_inpaint
from .camera import OrbitCamera
from .errors import BackendCallError, EmptyRenderError, SessionBusyError
from .imgio import (
    decode_gray8_mask,
    encode_gray16,
    encode_rgb8,
    resize_bilinear,
    resize_nearest,
)
from .mesh import Mesh, TextureImage, load_mesh, load_textured_mesh, normalize_mesh, \
    save_textured_mesh
from .rasterizer import render, render_aux
from .synthesis import (
    TextureState,
    blend_keep,
    can_undo,
    compute_trimap,
    dilate_texture,
    erase_region,
    new_texture_state,
    undo,
    update_texture,
    uv_coverage_mask,
)

BACKEND_URL_ENV = "INTEX_BACKEND_URL"
UI_DIR_ENV = "INTEX_UI_DIR"

# inpainting order from the preset orbit: front, alternating sides,
# back, then the two poles
PRESET_CAMERAS = (
    (0, 0), (0, 45), (0, -45), (0, 90), (0, -90),
    (0, 135), (0, -135), (0, 180), (90, 0), (-90, 0),
)


def preset_cameras() -> list:
    return [tuple(c) for c in PRESET_CAMERAS]


@dataclass
class SynthesisConfig:
    radius: float = 2.5
    fovy: float = 50.0
    view_resolution: int = 512
    texture_resolution: int = 1024
    steps: int = 20
    refine_strength: float = 0.4
    positive_suffix: str = "masterpiece, high quality"
    negative_prompt: str = "bad quality, worst quality, shadows"
    directional_prompts: bool = True
    refine_margin: float = 0.01
    mip_levels: int = 4
    dilate_iterations: int = 8

    def override(self, **kwargs) -> "SynthesisConfig":
        known = {f.name for f in fields(self)}
        bad = set(kwargs) - known
        if bad:
            raise ValueError(f"unknown config fields: {sorted(bad)}")
        return replace(self, **kwargs)


def directional_prompt(elevation: float, azimuth: float) -> str:
    """Coarse view-direction label appended to prompts."""
    if elevation >= 60:
        return "overhead view"
    if elevation <= -60:
        return "bottom view"
    a = abs((azimuth + 180.0) % 360.0 - 180.0)
    if a <= 45:
        return "front view"
    if a >= 135:
        return "back view"
    return "side view"


def assemble_prompt(config: SynthesisConfig, user_prompt: str,
                    elevation: float, azimuth: float) -> str:
    parts = []
    user_prompt = (user_prompt or "").strip()
    if user_prompt:
        parts.append(user_prompt)
    if config.directional_prompts:
        parts.append(directional_prompt(elevation, azimuth))
    parts.append(config.positive_suffix)
    return ", ".join(parts)


class Session:
    """One mesh + texture + config, single-writer."""

    def __init__(self, mesh: Mesh, config: SynthesisConfig, backend: str = "mock",
                 session_id: Optional[str] = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.mesh = mesh
        self.config = config
        self.backend = backend
        self.texture_state = new_texture_state(config.texture_resolution)
        self.lock = threading.Lock()
        self._uv_mask: Optional[np.ndarray] = None

    @property
    def busy(self) -> bool:
        return self.lock.locked()

    def camera(self, elevation: float, azimuth: float,
               resolution: Optional[int] = None, fovy: Optional[float] = None,
               radius: Optional[float] = None) -> OrbitCamera:
        return OrbitCamera(elevation=elevation, azimuth=azimuth,
                           radius=radius if radius is not None else self.config.radius,
                           fovy=fovy if fovy is not None else self.config.fovy,
                           resolution=resolution or self.config.view_resolution)

    def uv_mask(self) -> np.ndarray:
        if self._uv_mask is None:
            self._uv_mask = uv_coverage_mask(self.mesh, self.config.texture_resolution)
        return self._uv_mask

    def coverage(self) -> float:
        """Fraction of UV-referenced texels painted so far."""
        mask = self.uv_mask()
        total = int(mask.sum())
        if total == 0:
            return 0.0
        return float((self.texture_state.W[mask] > 0).sum() / total)


def call_backend(backend: str, request: InpaintRequest):
    if backend == "mock":
        return mock_inpaint(request)
    return remote_inpaint(backend, request)


def inpaint_view(session: Session, camera: OrbitCamera, prompt: str = "",
                 seed: int = 0) -> dict:
    """Render, classify, inpaint, blend, back-project: one view step.

    Always exactly one undo step. Views with nothing to generate or
    refine skip the backend but still snapshot, so undo counting stays
    one-per-operation. Backend failures propagate before any texture
    mutation.
    """
    config = session.config
    state = session.texture_state
    gb = render(session.mesh, state, camera)
    tri = compute_trimap(gb, config.refine_margin)
    report = {
        "elevation": camera.elevation,
        "azimuth": camera.azimuth,
        "generate_px": int(tri.generate.sum()),
        "refine_px": int(tri.refine.sum()),
        "keep_px": int(tri.keep.sum()),
        "backend_elapsed_ms": 0.0,
        "texels_updated": 0,
        "skipped": False,
    }
    # pixels that could actually deposit texture: zero-cosine pixels splat
    # nothing, so a view offering only those has no work for the backend
    effective = ((tri.generate | tri.refine) & (gb.view_cos > 0)).any()
    if not effective:
        update_texture(state, gb, gb.rgb, tri, levels=config.mip_levels)
        report["skipped"] = True
        return report

    res = backend_mod.PROTOCOL_RES
    request = InpaintRequest(
        image_masked=resize_nearest(gb.rgb, res, res),
        generate_mask=resize_nearest(tri.generate, res, res),
        refine_mask=resize_nearest(tri.refine, res, res),
        depth=resize_nearest(gb.depth, res, res),
        prompt=assemble_prompt(config, prompt, camera.elevation, camera.azimuth),
        negative_prompt=config.negative_prompt,
        seed=seed,
        steps=config.steps,
        refine_strength=config.refine_strength,
    )
    response = call_backend(session.backend, request)

    vres = camera.resolution
    up = resize_bilinear(response.image, vres, vres).astype(np.float32)
    blended = blend_keep(up, gb.rgb, tri.keep)
    w_before = state.W
    update_texture(state, gb, blended, tri, levels=config.mip_levels)
    report["backend_elapsed_ms"] = float(response.elapsed_ms)
    report["texels_updated"] = int((state.W != w_before).sum())
    return report


def run_auto(session: Session, prompt: str = "", seed: int = 0) -> dict:
    """The automatic pipeline: all preset views in order, then dilation.

    Each view commits before the next starts; a backend failure aborts
    the run but keeps the completed views.
    """
    views = []
    for elevation, azimuth in preset_cameras():
        views.append(inpaint_view(session, session.camera(elevation, azimuth),
                                  prompt=prompt, seed=seed))
    dilate_texture(session.texture_state, session.config.dilate_iterations)
    return {
        "views": views,
        "dilated": session.config.dilate_iterations,
        "coverage": session.coverage(),
    }


def erase_view(session: Session, camera: OrbitCamera, mask2d: np.ndarray) -> dict:
    gb = render(session.mesh, session.texture_state, camera)
    if mask2d.shape != (camera.resolution, camera.resolution):
        mask2d = resize_nearest(mask2d, camera.resolution, camera.resolution)
    w_before = session.texture_state.W
    erase_region(session.texture_state, gb, mask2d)
    erased = int(((w_before > 0) & (session.texture_state.W == 0)).sum())
    return {"erased_texels": erased}


def dilate_session(session: Session) -> dict:
    """Grow painted texels into the UV gutters; one undo step."""
    w_before = session.texture_state.W
    dilate_texture(session.texture_state, session.config.dilate_iterations)
    filled = int(((w_before == 0) & (session.texture_state.W > 0)).sum())
    return {"iterations": session.config.dilate_iterations, "filled_texels": filled}


def init_session(session: Session) -> None:
    """Reset to the unpainted state, history cleared."""
    session.texture_state = new_texture_state(session.config.texture_resolution)


def save_session(session: Session, directory) -> list:
    """Write the textured mesh plus the session state.

    mesh.obj/mesh.mtl/albedo.png form a standalone textured model;
    W.png/V.png/meta.json plus the exact float arrays in state.npz make
    the session reloadable with bit-identical renders.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    state = session.texture_state
    files = save_textured_mesh(session.mesh, TextureImage(state.T.copy()), str(directory))
    wmax = float(state.W.max())
    w_scale = wmax if wmax > 0 else 1.0
    wp = directory / "W.png"
    vp = directory / "V.png"
    mp = directory / "meta.json"
    sp = directory / "state.npz"
    wp.write_bytes(encode_gray16(state.W / w_scale))
    vp.write_bytes(encode_gray16(state.V))
    meta = {
        "session_id": session.id,
        "w_scale": w_scale,
        "config": asdict(session.config),
        "backend": session.backend,
    }
    mp.write_text(json.dumps(meta, indent=2, sort_keys=True))
    np.savez_compressed(sp, T=state.T, W=state.W, V=state.V)
    return files + [str(wp), str(vp), str(mp), str(sp)]


def load_session(directory, backend: Optional[str] = None) -> Session:
    """Rebuild a session saved by save_session; exact state when state.npz exists."""
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    config = SynthesisConfig(**meta["config"])
    mesh, albedo = load_textured_mesh(str(directory))
    session = Session(mesh, config, backend=backend or meta.get("backend", "mock"),
                      session_id=meta.get("session_id"))
    npz_path = directory / "state.npz"
    if npz_path.exists():
        data = np.load(npz_path)
        t, w, v = (np.ascontiguousarray(data[k], dtype=np.float32) for k in ("T", "W", "V"))
    else:
        from .imgio import decode_gray16
        t = albedo.data.astype(np.float32)
        w = decode_gray16((directory / "W.png").read_bytes()) * meta["w_scale"]
        v = decode_gray16((directory / "V.png").read_bytes())
    state = TextureState(t, w, v)
    for arr in state.snapshot():
        arr.flags.writeable = False
    session.texture_state = state
    return session


def default_backend() -> str:
    return os.environ.get(BACKEND_URL_ENV, "mock")


def create_app(backend: Optional[str] = None, config: Optional[SynthesisConfig] = None,
               ui_dir: Optional[str] = None):
    """Build the FastAPI app hosting the session API (and the UI if present)."""
    from fastapi import FastAPI, File, Form, HTTPException, UploadFile
    from fastapi.responses import JSONResponse, Response
    from pydantic import BaseModel

    backend = backend or default_backend()
    base_config = config or SynthesisConfig()
    sessions: dict = {}

    app = FastAPI(title="texpaint", docs_url="/docs")

    class InpaintBody(BaseModel):
        elevation: float = 0.0
        azimuth: float = 0.0
        prompt: str = ""
        seed: int = 0
        fovy: Optional[float] = None    # defaults to the session config
        radius: Optional[float] = None

    class AutoBody(BaseModel):
        prompt: str = ""
        seed: int = 0

    class EraseBody(BaseModel):
        elevation: float = 0.0
        azimuth: float = 0.0
        mask: str  # base64 PNG, white = erase
        fovy: Optional[float] = None
        radius: Optional[float] = None

    class SaveBody(BaseModel):
        path: Optional[str] = None

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def acquire(session: Session):
        if not session.lock.acquire(blocking=False):
            raise SessionBusyError(f"session {session.id} has a mutating operation in flight")

    @app.exception_handler(SessionBusyError)
    async def _busy(request, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(BackendCallError)
    async def _backend_fail(request, exc):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(EmptyRenderError)
    async def _empty(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _value(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/sessions")
    def create_session(mesh: UploadFile = File(...), config: str = Form(None)):
        cfg = base_config
        if config:
            try:
                overrides = json.loads(config)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config field is not JSON: {exc}") from exc
            cfg = cfg.override(**overrides)
        data = mesh.file.read()
        loaded = normalize_mesh(load_mesh(data, name=mesh.filename or "mesh"))
        session = Session(loaded, cfg, backend=backend)
        sessions[session.id] = session
        return {"id": session.id}

    @app.get("/sessions/{session_id}/render")
    def render_view(session_id: str, elevation: float = 0.0, azimuth: float = 0.0,
                    mode: str = "rgb", resolution: Optional[int] = None,
                    fovy: Optional[float] = None, radius: Optional[float] = None):
        session = get_session(session_id)
        camera = session.camera(elevation, azimuth, resolution, fovy=fovy, radius=radius)
        gb = render(session.mesh, session.texture_state, camera)
        png = encode_rgb8(render_aux(gb, mode))
        return Response(content=png, media_type="image/png")

    @app.post("/sessions/{session_id}/inpaint")
    def inpaint(session_id: str, body: InpaintBody):
        session = get_session(session_id)
        acquire(session)
        try:
            camera = session.camera(body.elevation, body.azimuth,
                                    fovy=body.fovy, radius=body.radius)
            return inpaint_view(session, camera, prompt=body.prompt, seed=body.seed)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/auto")
    def auto(session_id: str, body: AutoBody):
        session = get_session(session_id)
        acquire(session)
        try:
            return run_auto(session, prompt=body.prompt, seed=body.seed)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/erase")
    def erase(session_id: str, body: EraseBody):
        import base64
        session = get_session(session_id)
        acquire(session)
        try:
            mask = decode_gray8_mask(base64.b64decode(body.mask))
            camera = session.camera(body.elevation, body.azimuth,
                                    fovy=body.fovy, radius=body.radius)
            return erase_view(session, camera, mask)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/undo")
    def undo_op(session_id: str):
        session = get_session(session_id)
        acquire(session)
        try:
            undone = can_undo(session.texture_state)
            undo(session.texture_state)
            return {"undone": undone,
                    "detail": "ok" if undone else "nothing to undo",
                    "history": len(session.texture_state.history)}
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/dilate")
    def dilate_op(session_id: str):
        session = get_session(session_id)
        acquire(session)
        try:
            return dilate_session(session)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/init")
    def init_op(session_id: str):
        session = get_session(session_id)
        acquire(session)
        try:
            init_session(session)
            return {"ok": True}
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/save")
    def save_op(session_id: str, body: SaveBody = None):
        session = get_session(session_id)
        acquire(session)
        try:
            path = (body.path if body and body.path
                    else os.path.join("texpaint_sessions", session.id))
            try:
                files = save_session(session, path)
            except OSError as exc:
                raise ValueError(f"cannot save to {path!r}: {exc}") from exc
            return {"path": str(path), "files": files}
        finally:
            session.lock.release()

    @app.get("/sessions/{session_id}/state")
    def state_op(session_id: str):
        session = get_session(session_id)
        return {
            "config": asdict(session.config),
            "coverage": session.coverage(),
            "history": len(session.texture_state.history),
            "busy": session.busy,
        }

    ui_path = ui_dir or os.environ.get(UI_DIR_ENV) or os.path.join("frontend", "dist")
    if os.path.isdir(ui_path):
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_path, html=True), name="ui")

    app.state.sessions = sessions  # introspection hook for tools and tests
    return app


def serve(port: int = 8000, host: str = "127.0.0.1", backend: Optional[str] = None,
          config: Optional[SynthesisConfig] = None, ui_dir: Optional[str] = None):
    import uvicorn
    uvicorn.run(create_app(backend=backend, config=config, ui_dir=ui_dir),
                host=host, port=port)
