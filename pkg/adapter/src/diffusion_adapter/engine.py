"""Inpainting engines behind the wire protocol.

ToyLatentEngine realizes the protocol semantics on CPU with a lossless
identity latent space: it reconstructs the six-channel control input
(RGB with a -1 sentinel across the generate region, plus the depth map
repeated three times), runs L denoising steps, and blends the scheduled
mask into the latent at every step, so pixels outside the mask pass
through untouched. The model prediction is a procedural field seeded by
prompt and seed and shaped by the control channels; deterministic, so
fixed inputs give byte-identical outputs.

DiffusersEngine is the slot for a real checkpoint; constructing it
without the diffusion stack installed raises ModelLoadError, which the
server reports over the wire.
"""

import hashlib
import time

import numpy as np
from texpaint import InpaintRequest, InpaintResponse

from .config import AdapterConfig
from .schedule import downsample_mask, mask_for_step

# the toy latent space is the image itself: lossless, factor 1; a real
# VAE would sit here with factor 8
TOY_LATENT_FACTOR = 1
_PATTERN_GRID = 9


class ModelLoadError(RuntimeError):
    pass


def build_control(request: InpaintRequest) -> np.ndarray:
    """Six-channel conditioning: masked RGB in [-1, 1] with -1 marking
    the generate region, then the depth map duplicated per channel."""
    rgb = request.image_masked.astype(np.float32) * 2.0 - 1.0
    rgb[request.generate_mask] = -1.0
    depth = np.repeat(request.depth.astype(np.float32)[:, :, None], 3, axis=2)
    return np.concatenate([rgb, depth], axis=2)


def _prompt_pattern(prompt: str, negative_prompt: str, seed: int,
                    height: int, width: int) -> np.ndarray:
    """Smooth seeded RGB field: a coarse random grid, bilinearly sampled."""
    digest = hashlib.blake2b(
        prompt.encode() + b"\x00" + negative_prompt.encode(), digest_size=8).digest()
    rng = np.random.default_rng((int.from_bytes(digest, "big"), seed & 0xFFFFFFFF))
    coarse = rng.random((_PATTERN_GRID, _PATTERN_GRID, 3)).astype(np.float32)

    ys = np.linspace(0.0, _PATTERN_GRID - 1.0, height)
    xs = np.linspace(0.0, _PATTERN_GRID - 1.0, width)
    y0 = np.minimum(ys.astype(np.int64), _PATTERN_GRID - 2)
    x0 = np.minimum(xs.astype(np.int64), _PATTERN_GRID - 2)
    fy = (ys - y0).astype(np.float32)[:, None, None]
    fx = (xs - x0).astype(np.float32)[None, :, None]
    a = coarse[y0[:, None], x0[None, :]]
    b = coarse[y0[:, None], x0[None, :] + 1]
    c = coarse[y0[:, None] + 1, x0[None, :]]
    d = coarse[y0[:, None] + 1, x0[None, :] + 1]
    return (a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx
            + c * fy * (1 - fx) + d * fy * fx).astype(np.float32)


class ToyLatentEngine:
    def __init__(self, config: AdapterConfig):
        self.config = config
        self.backend_id = f"adapter-toy:{config.sampler}"

    def run(self, request: InpaintRequest) -> InpaintResponse:
        request.validate()
        started = time.perf_counter()
        h, w = request.depth.shape
        control = build_control(request)
        depth = control[:, :, 3]
        luma01 = (control[:, :, :3].mean(axis=2) + 1.0) * 0.5  # 0 in generate region
        pattern = _prompt_pattern(request.prompt, request.negative_prompt,
                                  request.seed, h, w)
        target = np.clip(
            0.4 * pattern + (0.4 * depth + 0.2 * luma01)[:, :, None], 0.0, 1.0)

        latent_size = h // TOY_LATENT_FACTOR
        total = request.steps
        pred = request.image_masked.astype(np.float32).copy()
        # the generate region starts from neutral gray, standing in for
        # the noise init: its content must come from conditioning alone,
        # never from whatever the caller left under the mask
        pred[request.generate_mask] = 0.5
        gain = 1.0 / total
        for step in range(total):
            mask = mask_for_step(step, total, request.refine_strength,
                                 request.generate_mask, request.refine_mask)
            m = downsample_mask(mask, latent_size)
            pred = np.where(m[:, :, None], pred + (target - pred) * gain, pred)

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return InpaintResponse(image=np.clip(pred, 0.0, 1.0).astype(np.float32),
                               backend_id=self.backend_id, elapsed_ms=elapsed_ms)


class DiffusersEngine:
    """Real-checkpoint slot: loads base + control models via diffusers."""

    def __init__(self, config: AdapterConfig):
        try:
            import diffusers  # noqa: F401
        except ImportError as exc:
            raise ModelLoadError(
                f"cannot load {config.base_model!r}: the diffusers stack is "
                f"not installed on this host") from exc
        # weights for the unified depth+inpaint control model are not
        # bundled; loading arbitrary checkpoints is deployment-specific
        raise ModelLoadError(
            f"no loader configured for checkpoint {config.base_model!r}")

    def run(self, request: InpaintRequest) -> InpaintResponse:
        raise NotImplementedError


def create_engine(config: AdapterConfig):
    if config.base_model.startswith("toy/"):
        return ToyLatentEngine(config)
    return DiffusersEngine(config)


def serve_inpaint(request: InpaintRequest, config: AdapterConfig = None,
                  engine=None) -> InpaintResponse:
    """Answer one protocol request in-process, without the HTTP layer."""
    if engine is None:
        engine = create_engine(config if config is not None else AdapterConfig())
    return engine.run(request)
