"""Diffusion inpainting backend for texpaint.

Serves POST /inpaint over the texpaint wire protocol, with a toy latent
engine for development and a loader hook for real diffusion weights.
"""

from .config import AdapterConfig, config_from_file, resolve_config
from .engine import (
    DiffusersEngine,
    ModelLoadError,
    ToyLatentEngine,
    build_control,
    create_engine,
    serve_inpaint,
)
from .masks import hybrid_mask_generator
from .schedule import downsample_mask, mask_for_step
from .server import create_app, main

__all__ = [
    "AdapterConfig",
    "DiffusersEngine",
    "ModelLoadError",
    "ToyLatentEngine",
    "build_control",
    "config_from_file",
    "create_app",
    "create_engine",
    "downsample_mask",
    "hybrid_mask_generator",
    "main",
    "mask_for_step",
    "resolve_config",
    "serve_inpaint",
]
