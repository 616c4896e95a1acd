"""Shared wire-request builder for adapter tests."""

import numpy as np
import pytest
from texpaint import InpaintRequest, PROTOCOL_RES


def _build(gen_box=None, ref_box=None, image=None, **overrides):
    res = PROTOCOL_RES
    if image is None:
        image = np.full((res, res, 3), 0.5, dtype=np.float32)
    gen = np.zeros((res, res), dtype=bool)
    if gen_box is not None:
        y0, y1, x0, x1 = gen_box
        gen[y0:y1, x0:x1] = True
    ref = np.zeros((res, res), dtype=bool)
    if ref_box is not None:
        y0, y1, x0, x1 = ref_box
        ref[y0:y1, x0:x1] = True
    depth = np.repeat(
        np.linspace(0.0, 1.0, res, dtype=np.float32)[:, None], res, axis=1)
    kwargs = dict(prompt="rusty bronze statue", seed=5)
    kwargs.update(overrides)
    return InpaintRequest(image_masked=image, generate_mask=gen,
                          refine_mask=ref, depth=depth, **kwargs)


@pytest.fixture(scope="session")
def build_request():
    """Factory for protocol-resolution requests with box-shaped masks."""
    return _build
