"""PNG codecs and image resampling helpers.

All in-memory images are numpy arrays: float32 in [0, 1] shaped (H, W) or
(H, W, C) with row 0 at the top, or boolean masks shaped (H, W).
"""

import io

import numpy as np
from PIL import Image


def encode_rgb8(img: np.ndarray) -> bytes:
    """Encode a float (H, W, 3) image in [0, 1] as an 8-bit RGB PNG."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3), got {img.shape}")
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray8(mask: np.ndarray) -> bytes:
    """Encode a boolean (H, W) mask as an 8-bit gray PNG with values {0, 255}."""
    q = np.where(mask, 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, "L").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray16(img: np.ndarray) -> bytes:
    """Encode a float (H, W) image in [0, 1] as a 16-bit gray PNG."""
    q = np.clip(np.rint(img * 65535.0), 0, 65535).astype(np.uint16)
    buf = io.BytesIO()
    Image.fromarray(q).save(buf, format="PNG")
    return buf.getvalue()


def decode_rgb8(data: bytes) -> np.ndarray:
    """Decode an 8-bit RGB PNG to float32 (H, W, 3) in [0, 1]."""
    arr = np.array(Image.open(io.BytesIO(data)).convert("RGB"))
    return (arr.astype(np.float32) / 255.0).astype(np.float32)


def decode_gray8_mask(data: bytes) -> np.ndarray:
    """Decode an 8-bit gray PNG to a boolean mask (nonzero = True)."""
    img = Image.open(io.BytesIO(data))
    if img.mode != "L":
        img = img.convert("L")
    return np.array(img) > 0


def decode_gray16(data: bytes) -> np.ndarray:
    """Decode an 8- or 16-bit gray PNG to float32 (H, W) in [0, 1]."""
    img = Image.open(io.BytesIO(data))
    arr = np.array(img)
    if arr.ndim != 2:
        raise ValueError(f"expected single-channel image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        return (arr.astype(np.float32) / 255.0).astype(np.float32)
    return (arr.astype(np.float32) / 65535.0).astype(np.float32)


def png_size(data: bytes) -> tuple[int, int]:
    """Return (width, height) of a PNG without fully decoding it."""
    img = Image.open(io.BytesIO(data))
    return img.size


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an (H, W) or (H, W, C) float array.

    Uses half-pixel-center source coordinates with edge clamping, so the
    identity size is an exact no-op.
    """
    h, w = img.shape[:2]
    if (h, w) == (height, width):
        return img.copy()
    out_dtype = img.dtype
    src = img.astype(np.float64)
    ys = (np.arange(height, dtype=np.float64) + 0.5) * (h / height) - 0.5
    xs = (np.arange(width, dtype=np.float64) + 0.5) * (w / width) - 0.5
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    fy = ys - y0
    fx = xs - x0
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    if src.ndim == 2:
        fy_ = fy[:, None]
        fx_ = fx[None, :]
    else:
        fy_ = fy[:, None, None]
        fx_ = fx[None, :, None]
    top = src[y0c][:, x0c] * (1 - fx_) + src[y0c][:, x1c] * fx_
    bot = src[y1c][:, x0c] * (1 - fx_) + src[y1c][:, x1c] * fx_
    out = top * (1 - fy_) + bot * fy_
    return out.astype(out_dtype)


def resize_nearest(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor resize; preserves dtype, exact for masks."""
    h, w = img.shape[:2]
    if (h, w) == (height, width):
        return img.copy()
    ys = np.minimum((np.floor((np.arange(height) + 0.5) * (h / height))).astype(np.int64), h - 1)
    xs = np.minimum((np.floor((np.arange(width) + 0.5) * (w / width))).astype(np.int64), w - 1)
    return img[ys][:, xs].copy()
