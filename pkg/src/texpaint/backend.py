"""Depth-aware inpainting contract: mock backend, wire format, HTTP client.

A backend fills the generate region from scratch and partially rewrites
the refine region, guided by a normalized depth map. The built-in mock
is a pure function of the request so every pipeline test is replayable;
remote_inpaint speaks the JSON-over-HTTP wire format to a real model
server.
"""

import base64
import hashlib
import json
from dataclasses import dataclass

import httpx
import numpy as np

from .errors import (
    BackendTimeout,
    BackendUnreachable,
    RemoteBackendError,
    WireProtocolError,
)
from .imgio import decode_gray8_mask, decode_gray16, decode_rgb8, \
    encode_gray8, encode_gray16, encode_rgb8

PROTOCOL_RES = 512
DEFAULT_STEPS = 20
DEFAULT_REFINE_STRENGTH = 0.4
# recover the real-arithmetic step boundary: (1-0.4)*20 lands a few ulp
# below the integer 12 in binary floating point
_STEP_EPS = 1e-9


@dataclass
class InpaintRequest:
    """One view's inpainting job at the fixed 512x512 protocol resolution.

    Unpainted pixels in image_masked carry mid gray; the masks are the
    authoritative region info. depth is 0 on background, 1 at the
    nearest surface point.
    """

    image_masked: np.ndarray   # (512, 512, 3) float32 in [0, 1]
    generate_mask: np.ndarray  # (512, 512) bool
    refine_mask: np.ndarray    # (512, 512) bool
    depth: np.ndarray          # (512, 512) float32 in [0, 1]
    prompt: str
    negative_prompt: str = ""
    seed: int = 0
    steps: int = DEFAULT_STEPS
    refine_strength: float = DEFAULT_REFINE_STRENGTH

    def validate(self) -> None:
        shp = (PROTOCOL_RES, PROTOCOL_RES)
        if self.image_masked.shape != shp + (3,):
            raise ValueError(f"image_masked must be {shp + (3,)}, got {self.image_masked.shape}")
        for name in ("generate_mask", "refine_mask", "depth"):
            arr = getattr(self, name)
            if arr.shape != shp:
                raise ValueError(f"{name} must be {shp}, got {arr.shape}")
        if (self.generate_mask & self.refine_mask).any():
            raise ValueError("generate_mask and refine_mask overlap")
        if not np.isfinite(self.image_masked).all() or not np.isfinite(self.depth).all():
            raise ValueError("non-finite image or depth values")
        if self.depth.min() < 0 or self.depth.max() > 1:
            raise ValueError("depth out of [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 <= self.refine_strength <= 1.0:
            raise ValueError("refine_strength out of [0, 1]")


@dataclass
class InpaintResponse:
    image: np.ndarray  # (512, 512, 3) float32 in [0, 1]
    backend_id: str = "unknown"
    elapsed_ms: float = 0.0


def mask_at_step(step: int, total_steps: int, alpha: float,
                 generate_mask: np.ndarray, refine_mask: np.ndarray) -> np.ndarray:
    """Denoising-step mask schedule: generate-only early, union late.

    The boundary (1-alpha)*total_steps is inclusive on the generate-only
    side and compared with a small epsilon so float rounding cannot move
    an exact integer boundary.
    """
    threshold = (1.0 - alpha) * total_steps
    if step <= threshold + _STEP_EPS:
        return generate_mask.copy()
    return generate_mask | refine_mask


def _hash_pattern(seed: int, prompt: str, negative_prompt: str,
                  height: int, width: int) -> np.ndarray:
    """Seeded procedural RGB noise, stable across runs and platforms."""
    digest = hashlib.blake2b(
        prompt.encode() + b"\x00" + negative_prompt.encode(), digest_size=4).digest()
    p = np.uint32(int.from_bytes(digest, "big"))
    s = np.uint32(seed & 0xFFFFFFFF)
    y, x = np.mgrid[0:height, 0:width].astype(np.uint32)
    with np.errstate(over="ignore"):
        h = (x * np.uint32(0x9E3779B1)) ^ (y * np.uint32(0x85EBCA77))
        h ^= s * np.uint32(0xC2B2AE3D)
        h ^= p
        # murmur-style avalanche so neighboring pixels decorrelate
        h ^= h >> np.uint32(16)
        h *= np.uint32(0x85EBCA6B)
        h ^= h >> np.uint32(13)
        h *= np.uint32(0xC2B2AE35)
        h ^= h >> np.uint32(16)
    rgb = np.stack([(h >> np.uint32(16)) & np.uint32(0xFF),
                    (h >> np.uint32(8)) & np.uint32(0xFF),
                    h & np.uint32(0xFF)], axis=2)
    return (rgb.astype(np.float32) / 255.0).astype(np.float32)


def mock_inpaint(request: InpaintRequest) -> InpaintResponse:
    """Deterministic stand-in for the diffusion backend.

    Generate pixels become a seeded noise pattern blended half with the
    depth map (so output visibly tracks geometry); refine pixels move
    halfway toward that pattern; everything else passes through
    untouched. Identical requests produce identical responses.
    """
    request.validate()
    h, w = request.depth.shape
    pattern = _hash_pattern(request.seed, request.prompt, request.negative_prompt, h, w)
    pattern = 0.5 * pattern + 0.5 * request.depth[:, :, None]
    out = request.image_masked.astype(np.float32).copy()
    gen = request.generate_mask
    ref = request.refine_mask
    out[gen] = pattern[gen]
    out[ref] = 0.5 * pattern[ref] + 0.5 * out[ref]
    return InpaintResponse(image=np.clip(out, 0.0, 1.0).astype(np.float32),
                           backend_id="mock", elapsed_ms=0.0)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise WireProtocolError(f"bad base64 in {what}: {exc}") from exc


def serialize_request(request: InpaintRequest) -> bytes:
    """Canonical JSON wire body: images as base64 PNG, scalars inline."""
    payload = {
        "image_masked": _b64(encode_rgb8(request.image_masked)),
        "generate_mask": _b64(encode_gray8(request.generate_mask)),
        "refine_mask": _b64(encode_gray8(request.refine_mask)),
        "depth": _b64(encode_gray16(request.depth)),
        "prompt": request.prompt,
        "negative_prompt": request.negative_prompt,
        "seed": int(request.seed),
        "steps": int(request.steps),
        "refine_strength": float(request.refine_strength),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def deserialize_request(data: bytes) -> InpaintRequest:
    try:
        payload = json.loads(data)
    except ValueError as exc:  # JSONDecodeError or undecodable bytes
        raise WireProtocolError(f"request body is not JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise WireProtocolError("request body must be a JSON object")
    required = ("image_masked", "generate_mask", "refine_mask", "depth", "prompt")
    for key in required:
        if key not in payload:
            raise WireProtocolError(f"missing field {key!r}")
    try:
        req = InpaintRequest(
            image_masked=decode_rgb8(_unb64(payload["image_masked"], "image_masked")),
            generate_mask=decode_gray8_mask(_unb64(payload["generate_mask"], "generate_mask")),
            refine_mask=decode_gray8_mask(_unb64(payload["refine_mask"], "refine_mask")),
            depth=decode_gray16(_unb64(payload["depth"], "depth")),
            prompt=str(payload["prompt"]),
            negative_prompt=str(payload.get("negative_prompt", "")),
            seed=int(payload.get("seed", 0)),
            steps=int(payload.get("steps", DEFAULT_STEPS)),
            refine_strength=float(payload.get("refine_strength", DEFAULT_REFINE_STRENGTH)),
        )
        req.validate()
    except WireProtocolError:
        raise
    except Exception as exc:
        raise WireProtocolError(f"invalid request: {exc}") from exc
    return req


def serialize_response(response: InpaintResponse) -> bytes:
    payload = {
        "image": _b64(encode_rgb8(response.image)),
        "backend_id": response.backend_id,
        "elapsed_ms": float(response.elapsed_ms),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def deserialize_response(data: bytes) -> InpaintResponse:
    try:
        payload = json.loads(data)
    except ValueError as exc:  # JSONDecodeError or undecodable bytes
        raise WireProtocolError(f"response body is not JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise WireProtocolError("response body must be a JSON object")
    if "image" not in payload:
        raise WireProtocolError("missing field 'image'")
    image = decode_rgb8(_unb64(payload["image"], "image"))
    if image.shape != (PROTOCOL_RES, PROTOCOL_RES, 3):
        raise WireProtocolError(
            f"backend returned {image.shape[1]}x{image.shape[0]}, "
            f"expected {PROTOCOL_RES}x{PROTOCOL_RES}")
    return InpaintResponse(
        image=image,
        backend_id=str(payload.get("backend_id", "unknown")),
        elapsed_ms=float(payload.get("elapsed_ms", 0.0)),
    )


def remote_inpaint(endpoint: str, request: InpaintRequest,
                   timeout: float = 120.0) -> InpaintResponse:
    """POST the request to a backend server and decode its reply.

    `endpoint` is the server base URL; /inpaint is appended unless
    already present.
    """
    url = endpoint.rstrip("/")
    if not url.endswith("/inpaint"):
        url += "/inpaint"
    body = serialize_request(request)
    try:
        resp = httpx.post(url, content=body,
                          headers={"content-type": "application/json"},
                          timeout=timeout)
    except httpx.TimeoutException as exc:
        raise BackendTimeout(f"backend at {url} timed out after {timeout}s") from exc
    except httpx.HTTPError as exc:
        raise BackendUnreachable(f"backend at {url} unreachable: {exc}") from exc
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("error", resp.text)
        except Exception:
            detail = resp.text
        raise RemoteBackendError(f"backend error {resp.status_code}: {detail}")
    return deserialize_response(resp.content)
