"""Orbit camera: (elevation, azimuth, radius) pose around the origin.

Convention: world +Y is up; elevation 0 / azimuth 0 places the camera on
the +Z axis looking toward -Z ("front"). Azimuth grows from +Z toward +X.
The camera always looks at the origin.
"""

import math
from dataclasses import dataclass

import numpy as np

_POLE_EPS = 1e-6  # degrees from +-90 at which the up vector switches


@dataclass(frozen=True)
class OrbitCamera:
    elevation: float  # degrees in [-90, 90]
    azimuth: float    # degrees, wrapped into (-180, 180]
    radius: float = 2.5
    fovy: float = 50.0  # vertical field of view, degrees
    resolution: int = 512  # square frame, pixels per side

    def __post_init__(self):
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation must be in [-90, 90], got {self.elevation}")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not 1.0 <= self.fovy <= 120.0:
            raise ValueError(f"fovy must be in [1, 120], got {self.fovy}")
        if self.resolution <= 0 or self.resolution % 8 != 0:
            raise ValueError(f"resolution must be a positive multiple of 8, got {self.resolution}")
        az = ((self.azimuth + 180.0) % 360.0) - 180.0
        if az == -180.0:
            az = 180.0
        object.__setattr__(self, "azimuth", az)

    @property
    def position(self) -> np.ndarray:
        e = math.radians(self.elevation)
        a = math.radians(self.azimuth)
        return self.radius * np.array(
            [math.cos(e) * math.sin(a), math.sin(e), math.cos(e) * math.cos(a)],
            dtype=np.float64,
        )


def camera_from_orbit(elevation: float, azimuth: float, radius: float = 2.5,
                      fovy: float = 50.0) -> tuple[np.ndarray, np.ndarray]:
    """Build (view, projection) 4x4 matrices for an orbit pose.

    The view matrix maps world to camera space (camera looks along -Z,
    +Y up on screen). At elevation +-90 the up-vector degeneracy is
    resolved with world -Z (top view) / +Z (bottom view).
    """
    cam = OrbitCamera(elevation=elevation, azimuth=azimuth, radius=radius, fovy=fovy)
    pos = cam.position
    forward = -pos / np.linalg.norm(pos)  # toward the origin

    if cam.elevation >= 90.0 - _POLE_EPS:
        up = np.array([0.0, 0.0, -1.0])
    elif cam.elevation <= -90.0 + _POLE_EPS:
        up = np.array([0.0, 0.0, 1.0])
    else:
        up = np.array([0.0, 1.0, 0.0])

    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    true_up = np.cross(right, forward)

    view = np.eye(4, dtype=np.float64)
    view[0, :3] = right
    view[1, :3] = true_up
    view[2, :3] = -forward
    view[:3, 3] = -view[:3, :3] @ pos

    near, far = 0.01, 100.0
    f = 1.0 / math.tan(math.radians(cam.fovy) / 2.0)
    proj = np.zeros((4, 4), dtype=np.float64)
    proj[0, 0] = f  # square frames: aspect ratio 1
    proj[1, 1] = f
    proj[2, 2] = (far + near) / (near - far)
    proj[2, 3] = 2.0 * far * near / (near - far)
    proj[3, 2] = -1.0
    return view, proj
