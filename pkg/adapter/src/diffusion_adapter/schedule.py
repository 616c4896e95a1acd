"""Denoising mask schedule and latent-resolution mask handling.

mask_for_step must agree bit-for-bit with the orchestrator's schedule:
steps up to and including (1 - alpha) * total_steps use the generate
mask alone, later steps the generate/refine union. The boundary check
carries a small epsilon so an exact integer boundary cannot flip from
float rounding; the shared test vectors pin this behavior against the
orchestrator's implementation.
"""

import numpy as np

BOUNDARY_EPS = 1e-9


def mask_for_step(step: int, total_steps: int, alpha: float,
                  generate_mask: np.ndarray, refine_mask: np.ndarray) -> np.ndarray:
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    boundary = (1.0 - alpha) * total_steps
    if step <= boundary + BOUNDARY_EPS:
        return generate_mask.copy()
    return generate_mask | refine_mask


def downsample_mask(mask: np.ndarray, size: int) -> np.ndarray:
    """Reduce a square boolean mask to size x size: area-average, then
    threshold at 0.5. A latent texel is masked when at least half of the
    image pixels it covers are masked."""
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
        raise ValueError(f"mask must be square 2D, got {mask.shape}")
    side = mask.shape[0]
    if size < 1 or side % size != 0:
        raise ValueError(f"cannot reduce {side} to {size}: not an integer factor")
    f = side // size
    frac = mask.astype(np.float32).reshape(size, f, size, f).mean(axis=(1, 3))
    return frac >= 0.5
