"""Interactive text-to-texture painting for UV-mapped meshes.

Renders a mesh from orbiting cameras, classifies each view into
generate/refine/keep regions, asks a depth-aware inpainting backend for
the missing content, and back-projects the result into the UV atlas.
"""

from .backend import (
    PROTOCOL_RES,
    InpaintRequest,
    InpaintResponse,
    deserialize_request,
    deserialize_response,
    mask_at_step,
    mock_inpaint,
    remote_inpaint,
    serialize_request,
    serialize_response,
)
from .camera import OrbitCamera, camera_from_orbit
from .errors import (
    BackendCallError,
    BackendTimeout,
    BackendUnreachable,
    DegenerateMeshError,
    EmptyRenderError,
    MeshParseError,
    MissingUVError,
    RemoteBackendError,
    SessionBusyError,
    WireProtocolError,
)
from .mesh import (
    Mesh,
    TextureImage,
    export_obj,
    load_mesh,
    load_textured_mesh,
    normalize_mesh,
    save_textured_mesh,
)
from .primitives import make_cube, make_quad, make_sphere
from .rasterizer import GBuffer, render, render_aux
from .service import (
    Session,
    SynthesisConfig,
    create_app,
    directional_prompt,
    inpaint_view,
    load_session,
    preset_cameras,
    run_auto,
    save_session,
    serve,
)
from .synthesis import (
    TextureState,
    Trimap,
    blend_keep,
    compute_trimap,
    dilate_texture,
    erase_region,
    grid_put,
    new_texture_state,
    undo,
    update_texture,
)

__version__ = "0.1.0"

__all__ = [
    "BackendCallError",
    "BackendTimeout",
    "BackendUnreachable",
    "DegenerateMeshError",
    "EmptyRenderError",
    "GBuffer",
    "InpaintRequest",
    "InpaintResponse",
    "Mesh",
    "MeshParseError",
    "MissingUVError",
    "OrbitCamera",
    "PROTOCOL_RES",
    "RemoteBackendError",
    "Session",
    "SessionBusyError",
    "SynthesisConfig",
    "TextureImage",
    "TextureState",
    "Trimap",
    "WireProtocolError",
    "blend_keep",
    "camera_from_orbit",
    "compute_trimap",
    "create_app",
    "deserialize_request",
    "deserialize_response",
    "dilate_texture",
    "directional_prompt",
    "erase_region",
    "export_obj",
    "grid_put",
    "inpaint_view",
    "load_mesh",
    "load_session",
    "load_textured_mesh",
    "make_cube",
    "make_quad",
    "make_sphere",
    "mask_at_step",
    "mock_inpaint",
    "new_texture_state",
    "normalize_mesh",
    "preset_cameras",
    "remote_inpaint",
    "render",
    "render_aux",
    "run_auto",
    "save_session",
    "save_textured_mesh",
    "serialize_request",
    "serialize_response",
    "serve",
    "undo",
    "update_texture",
]
