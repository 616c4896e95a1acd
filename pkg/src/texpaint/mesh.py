"""UV-mapped triangle meshes: OBJ loading, validation, normalization, saving.

Meshes use indexed corners: every face stores (position, normal, uv) index
triplets, so positions, normals and texture coordinates can be shared
independently. Overlapping UV charts are legal (symmetric texture reuse).
"""

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateMeshError, MeshParseError, MissingUVError
from .imgio import decode_rgb8, encode_rgb8

_NORMAL_EPS = 1e-12


@dataclass
class TextureImage:
    """Float image in [0, 1] with power-of-two sides between 64 and 4096."""

    data: np.ndarray  # (H, W, C) float32, C in {1, 3}

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"texture must be (H, W, 1|3), got {arr.shape}")
        h, w = arr.shape[:2]
        for side in (h, w):
            if side < 64 or side > 4096 or (side & (side - 1)) != 0:
                raise ValueError(f"texture sides must be powers of two in [64, 4096], got {h}x{w}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("texture contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("texture values must lie in [0, 1]")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class Mesh:
    """Indexed triangle mesh with per-corner UVs and unit normals."""

    vertices: np.ndarray  # (NV, 3) float64
    normals: np.ndarray   # (NN, 3) float64, unit length
    uvs: np.ndarray       # (NT, 2) float64 in [0, 1]^2
    faces: np.ndarray     # (F, 3, 3) int32: faces[f, corner] = (v, n, uv) indices
    name: str = "mesh"

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.normals = np.ascontiguousarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.uvs = np.ascontiguousarray(self.uvs, dtype=np.float64).reshape(-1, 2)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32).reshape(-1, 3, 3)

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def validate(self):
        """Raise if any structural invariant is violated."""
        f = self.faces
        if f.size and (f.min() < 0
                       or f[:, :, 0].max() >= len(self.vertices)
                       or f[:, :, 1].max() >= len(self.normals)
                       or f[:, :, 2].max() >= len(self.uvs)):
            raise MeshParseError("face index out of range")
        if len(self.normals):
            lengths = np.linalg.norm(self.normals, axis=1)
            if np.abs(lengths - 1.0).max() > 1e-4:
                raise ValueError("normals are not unit length")
        if len(self.uvs) and (self.uvs.min() < 0.0 or self.uvs.max() > 1.0):
            raise ValueError("uvs outside [0, 1]^2")


def _wrap_uv(uv: np.ndarray) -> np.ndarray:
    """Wrap coordinates outside [0, 1] by fractional part; keep boundary values."""
    out = uv.copy()
    outside = (out < 0.0) | (out > 1.0)
    out[outside] = out[outside] - np.floor(out[outside])
    return out


def _face_normals(vertices, tri_vidx):
    a = vertices[tri_vidx[:, 0]]
    b = vertices[tri_vidx[:, 1]]
    c = vertices[tri_vidx[:, 2]]
    n = np.cross(b - a, c - a)
    return n  # area-weighted (not normalized)


def _vertex_normals(vertices, tri_vidx):
    """Area-weighted per-vertex normals from face geometry."""
    fn = _face_normals(vertices, tri_vidx)
    vn = np.zeros_like(vertices)
    for corner in range(3):
        np.add.at(vn, tri_vidx[:, corner], fn)
    lengths = np.linalg.norm(vn, axis=1, keepdims=True)
    safe = np.where(lengths > _NORMAL_EPS, lengths, 1.0)
    vn = vn / safe
    vn[lengths[:, 0] <= _NORMAL_EPS] = (0.0, 0.0, 1.0)
    return vn


def load_mesh(data: bytes, fmt: str = "obj", name: str = "mesh") -> Mesh:
    """Parse a Wavefront OBJ byte string into a Mesh.

    Quads and larger polygons are fan-triangulated. Missing normals are
    computed as area-weighted per-vertex normals; zero-length normals are
    replaced by the referencing face's geometric normal. UVs outside
    [0, 1] are wrapped by fractional part.

    Raises MeshParseError on malformed records (with line number) and
    MissingUVError when a face corner has no `vt` reference.
    """
    if fmt.lower() != "obj":
        raise ValueError(f"unsupported mesh format: {fmt}")
    text = data.decode("utf-8", errors="replace")

    positions: list[list[float]] = []
    normals: list[list[float]] = []
    uvs: list[list[float]] = []
    corners: list[tuple[int, int, int]] = []  # flat list, 3 per face
    face_lines: list[int] = []

    def resolve(idx: int, count: int, lineno: int, kind: str) -> int:
        # OBJ indices are 1-based; negative indices count from the end
        if idx > 0:
            r = idx - 1
        elif idx < 0:
            r = count + idx
        else:
            raise MeshParseError(f"zero {kind} index", line=lineno)
        if r < 0 or r >= count:
            raise MeshParseError(f"{kind} index {idx} out of range", line=lineno)
        return r

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        try:
            if tag == "v":
                if len(tokens) < 4:
                    raise MeshParseError("vertex needs 3 coordinates", line=lineno)
                positions.append([float(t) for t in tokens[1:4]])
            elif tag == "vn":
                if len(tokens) < 4:
                    raise MeshParseError("normal needs 3 coordinates", line=lineno)
                normals.append([float(t) for t in tokens[1:4]])
            elif tag == "vt":
                if len(tokens) < 3:
                    raise MeshParseError("texcoord needs 2 coordinates", line=lineno)
                uvs.append([float(t) for t in tokens[1:3]])
            elif tag == "f":
                refs = tokens[1:]
                if len(refs) < 3:
                    raise MeshParseError("face needs at least 3 corners", line=lineno)
                parsed = []
                for ref in refs:
                    parts = ref.split("/")
                    v = resolve(int(parts[0]), len(positions), lineno, "vertex")
                    if len(parts) < 2 or parts[1] == "":
                        raise MissingUVError("face corner has no uv reference", line=lineno)
                    t = resolve(int(parts[1]), len(uvs), lineno, "uv")
                    if len(parts) >= 3 and parts[2] != "":
                        n = resolve(int(parts[2]), len(normals), lineno, "normal")
                    else:
                        n = -1  # filled in after parsing
                    parsed.append((v, n, t))
                for i in range(1, len(parsed) - 1):  # fan triangulation
                    corners.extend((parsed[0], parsed[i], parsed[i + 1]))
                    face_lines.append(lineno)
            # mtllib/usemtl/o/g/s records carry no geometry; skipped
        except MeshParseError:
            raise
        except ValueError as exc:
            raise MeshParseError(str(exc), line=lineno) from exc

    if not corners:
        raise MeshParseError("no faces found")

    verts = np.asarray(positions, dtype=np.float64)
    uv_arr = _wrap_uv(np.asarray(uvs, dtype=np.float64)) if uvs else np.zeros((0, 2))
    faces = np.asarray(corners, dtype=np.int64).reshape(-1, 3, 3)  # corner = (v, n, uv)
    tri_vidx = faces[:, :, 0]

    norm_arr = np.asarray(normals, dtype=np.float64) if normals else np.zeros((0, 3))
    if len(norm_arr):
        lengths = np.linalg.norm(norm_arr, axis=1, keepdims=True)
        nonzero = lengths[:, 0] > _NORMAL_EPS
        norm_arr = np.where(nonzero[:, None], norm_arr / np.where(nonzero[:, None], lengths, 1.0), norm_arr)

    # corners without a vn reference use computed per-vertex normals
    if (faces[:, :, 1] < 0).any():
        vnormals = _vertex_normals(verts, tri_vidx)
        base = len(norm_arr)
        norm_arr = np.vstack([norm_arr, vnormals]) if len(norm_arr) else vnormals
        missing = faces[:, :, 1] < 0
        faces[:, :, 1] = np.where(missing, base + faces[:, :, 0], faces[:, :, 1])

    # zero-length normals fall back to the referencing face's geometric normal
    lengths = np.linalg.norm(norm_arr, axis=1)
    if (lengths <= _NORMAL_EPS).any():
        fnorm = _face_normals(verts, tri_vidx)
        flen = np.linalg.norm(fnorm, axis=1, keepdims=True)
        fnorm = np.where(flen > _NORMAL_EPS, fnorm / np.where(flen > _NORMAL_EPS, flen, 1.0), (0.0, 0.0, 1.0))
        extra = []
        for f in range(faces.shape[0]):
            for corner in range(3):
                nidx = faces[f, corner, 1]
                if lengths[nidx] <= _NORMAL_EPS:
                    extra.append(fnorm[f])
                    faces[f, corner, 1] = len(norm_arr) + len(extra) - 1
        norm_arr = np.vstack([norm_arr, np.asarray(extra)])

    mesh = Mesh(vertices=verts, normals=norm_arr, uvs=uv_arr, faces=faces.astype(np.int32), name=name)
    mesh.validate()
    return mesh


def normalize_mesh(mesh: Mesh) -> Mesh:
    """Center the bounding box at the origin and scale max vertex norm to 1.

    Keeps every normalized mesh framed identically by any orbit camera,
    whatever the source units. Idempotent within float tolerance.
    """
    if len(mesh.vertices) == 0:
        raise DegenerateMeshError("mesh has no vertices")
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    center = (lo + hi) / 2.0
    shifted = mesh.vertices - center
    radius = np.linalg.norm(shifted, axis=1).max()
    if radius <= 0.0:
        raise DegenerateMeshError("all vertices coincide")
    return Mesh(
        vertices=shifted / radius,
        normals=mesh.normals.copy(),
        uvs=mesh.uvs.copy(),
        faces=mesh.faces.copy(),
        name=mesh.name,
    )


_MTL_NAME = "material_0"


def export_obj(mesh: Mesh, mtllib: Optional[str] = None) -> bytes:
    """Serialize the mesh as Wavefront OBJ text (v/vt/vn/f, 1-based)."""
    lines = []
    if mtllib:
        lines.append(f"mtllib {mtllib}")
    lines.append(f"o {mesh.name}")
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}")
    for t in mesh.uvs:
        lines.append(f"vt {t[0]:.8f} {t[1]:.8f}")
    for n in mesh.normals:
        lines.append(f"vn {n[0]:.8f} {n[1]:.8f} {n[2]:.8f}")
    if mtllib:
        lines.append(f"usemtl {_MTL_NAME}")
    for face in mesh.faces:
        refs = " ".join(f"{c[0] + 1}/{c[2] + 1}/{c[1] + 1}" for c in face)
        lines.append(f"f {refs}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_textured_mesh(mesh: Mesh, texture: TextureImage, directory: str) -> list[str]:
    """Write mesh.obj, mesh.mtl and albedo.png into `directory`.

    The OBJ references the MTL, which references the albedo via map_Kd.
    Returns the written file paths. Reloading with load_mesh reproduces
    vertex/uv/face data within 1e-6.
    """
    if texture.channels != 3:
        raise ValueError("albedo texture must have 3 channels")
    os.makedirs(directory, exist_ok=True)
    obj_path = os.path.join(directory, "mesh.obj")
    mtl_path = os.path.join(directory, "mesh.mtl")
    png_path = os.path.join(directory, "albedo.png")

    with open(obj_path, "wb") as fh:
        fh.write(export_obj(mesh, mtllib="mesh.mtl"))

    with open(mtl_path, "w", encoding="utf-8") as fh:
        fh.write(f"newmtl {_MTL_NAME}\n")
        fh.write("Ka 1.000000 1.000000 1.000000\n")
        fh.write("Kd 1.000000 1.000000 1.000000\n")
        fh.write("Ks 0.000000 0.000000 0.000000\n")
        fh.write("d 1.0\nillum 1\n")
        fh.write("map_Kd albedo.png\n")

    with open(png_path, "wb") as fh:
        fh.write(encode_rgb8(texture.data))
    return [obj_path, mtl_path, png_path]


def load_textured_mesh(directory: str) -> tuple[Mesh, TextureImage]:
    """Load a directory written by save_textured_mesh."""
    obj_path = os.path.join(directory, "mesh.obj")
    with open(obj_path, "rb") as fh:
        mesh = load_mesh(fh.read(), name=os.path.basename(directory) or "mesh")
    with open(os.path.join(directory, "albedo.png"), "rb") as fh:
        texture = TextureImage(decode_rgb8(fh.read()))
    return mesh, texture
