"""Analytic test meshes: quad, cube, cube-sphere.

The sphere is built from a subdivided cube projected onto the unit
sphere, with each of the 6 charts laid out in a 3x2 UV atlas. Compared
to an equirectangular mapping this keeps texel density near uniform, so
UV-space coverage statistics are meaningful at the poles too.
"""

import numpy as np

from .mesh import Mesh

# gap between atlas charts; wide enough that default dilation cannot
# bleed one chart into the next at a 1024 atlas
_CHART_MARGIN = 0.025


def make_quad(size: float = 1.0, z: float = 0.0, name: str = "quad") -> Mesh:
    """Camera-facing unit quad in the XY plane, +Z normal, full UV square."""
    s = size / 2.0
    vertices = np.array([
        [-s, -s, z], [s, -s, z], [s, s, z], [-s, s, z],
    ], dtype=np.float64)
    normals = np.array([[0.0, 0.0, 1.0]], dtype=np.float64)
    uvs = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.float64)
    faces = np.array([
        [[0, 0, 0], [1, 0, 1], [2, 0, 2]],
        [[0, 0, 0], [2, 0, 2], [3, 0, 3]],
    ], dtype=np.int32)
    mesh = Mesh(vertices=vertices, normals=normals, uvs=uvs, faces=faces, name=name)
    mesh.validate()
    return mesh


# per cube face: outward normal n and tangents t1, t2 with cross(t1, t2) = n,
# so grid triangles wind counter-clockwise seen from outside
_CUBE_FACES = (
    ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (-1, 0, 0), (0, 1, 0)),
)


def _chart_uv(chart: int, fu: np.ndarray, fv: np.ndarray):
    """Map chart-local coordinates in [0,1]^2 into the 3x2 atlas cell."""
    col = chart % 3
    row = chart // 3
    m = _CHART_MARGIN
    u = (col + m + (1.0 - 2.0 * m) * fu) / 3.0
    v = (row + m + (1.0 - 2.0 * m) * fv) / 2.0
    return u, v


def _cube_grid(subdiv: int, spherify: bool):
    verts, norms, uvs, faces = [], [], [], []
    n = subdiv
    for chart, (fn, t1, t2) in enumerate(_CUBE_FACES):
        fn = np.array(fn, dtype=np.float64)
        t1 = np.array(t1, dtype=np.float64)
        t2 = np.array(t2, dtype=np.float64)
        base = len(verts)
        for j in range(n + 1):
            for i in range(n + 1):
                a = -1.0 + 2.0 * i / n
                b = -1.0 + 2.0 * j / n
                p = fn + a * t1 + b * t2
                if spherify:
                    p = p / np.linalg.norm(p)
                    nv = p
                else:
                    nv = fn
                u, v = _chart_uv(chart, np.float64(i / n), np.float64(j / n))
                verts.append(p)
                norms.append(nv)
                uvs.append((u, v))
        for j in range(n):
            for i in range(n):
                v00 = base + j * (n + 1) + i
                v10 = v00 + 1
                v01 = v00 + (n + 1)
                v11 = v01 + 1
                faces.append([[v00] * 3, [v10] * 3, [v11] * 3])
                faces.append([[v00] * 3, [v11] * 3, [v01] * 3])
    return (np.array(verts), np.array(norms), np.array(uvs),
            np.array(faces, dtype=np.int32))


def make_cube(subdiv: int = 1, name: str = "cube") -> Mesh:
    """Axis-aligned cube spanning [-1, 1]^3, one atlas chart per face."""
    verts, norms, uvs, faces = _cube_grid(subdiv, spherify=False)
    mesh = Mesh(vertices=verts, normals=norms, uvs=uvs, faces=faces, name=name)
    mesh.validate()
    return mesh


def make_sphere(subdiv: int = 16, name: str = "sphere") -> Mesh:
    """Unit cube-sphere; normals equal positions exactly."""
    verts, norms, uvs, faces = _cube_grid(subdiv, spherify=True)
    mesh = Mesh(vertices=verts, normals=norms, uvs=uvs, faces=faces, name=name)
    mesh.validate()
    return mesh
