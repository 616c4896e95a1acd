"""Training-time hybrid inpainting-mask generation.

Draws one of four strategies uniformly: the whole object, a left or
right half, the overlap with a random ellipse or rectangle, or the
pixels below a random depth threshold. Every result is a subset of the
object mask.
"""

import numpy as np

STRATEGIES = (1, 2, 3, 4)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def hybrid_mask_generator(object_mask: np.ndarray, depth: np.ndarray, rng,
                          strategy=None, threshold=None) -> np.ndarray:
    """Sample an inpainting mask over the object.

    rng is a seed or Generator; strategy forces one of 1..4, and
    threshold overrides strategy 4's random depth cut.
    """
    if object_mask.ndim != 2 or object_mask.dtype != np.bool_:
        raise ValueError("object_mask must be a 2D boolean array")
    if depth.shape != object_mask.shape:
        raise ValueError(f"depth shape {depth.shape} != mask shape {object_mask.shape}")
    if not object_mask.any():
        raise ValueError("object_mask is empty")
    rng = _as_rng(rng)
    if strategy is None:
        strategy = int(rng.integers(1, len(STRATEGIES) + 1))
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy}")

    if strategy == 1:
        return object_mask.copy()

    h, w = object_mask.shape
    ys = np.where(object_mask.any(axis=1))[0]
    xs = np.where(object_mask.any(axis=0))[0]

    if strategy == 2:
        mid = (int(xs.min()) + int(xs.max()) + 1) // 2
        cols = np.arange(w)
        half = cols < mid if rng.integers(2) == 0 else cols >= mid
        return object_mask & half[None, :]

    if strategy == 3:
        cy = rng.uniform(ys.min(), ys.max())
        cx = rng.uniform(xs.min(), xs.max())
        ry = rng.uniform(0.15, 0.6) * max(1, ys.max() - ys.min())
        rx = rng.uniform(0.15, 0.6) * max(1, xs.max() - xs.min())
        yy, xx = np.mgrid[0:h, 0:w]
        if rng.integers(2) == 0:
            region = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        else:
            region = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
        return object_mask & region

    values = depth[object_mask]
    if threshold is None:
        threshold = rng.uniform(float(values.min()), float(values.max()))
    return object_mask & (depth < threshold)
