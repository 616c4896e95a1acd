"""Adapter configuration: model ids, sampler, step count, device.

Resolution order is defaults < config file < environment, so a deployed
server can pin models in a file and still override the device per host.
"""

import json
import os
from dataclasses import asdict, dataclass, fields

CONFIG_FILE_ENV = "ADAPTER_CONFIG"
ENV_PREFIX = "ADAPTER_"

# model ids under toy/ run the built-in CPU engine; anything else is
# treated as a diffusers checkpoint reference
DEFAULT_BASE_MODEL = "toy/latent-identity"
DEFAULT_CONTROL_MODELS = ("toy/depth-inpaint-control",)


@dataclass(frozen=True)
class AdapterConfig:
    base_model: str = DEFAULT_BASE_MODEL
    control_models: tuple = DEFAULT_CONTROL_MODELS
    sampler: str = "unipc"
    steps: int = 20
    device: str = "cpu"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.base_model:
            raise ValueError("base_model must be non-empty")
        object.__setattr__(self, "control_models", tuple(self.control_models))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["control_models"] = list(self.control_models)
        return d


def config_from_file(path) -> AdapterConfig:
    with open(path) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError(f"config file {path!r} must hold a JSON object")
    return _build(payload, source=f"config file {path!r}")


def _build(overrides: dict, source: str) -> AdapterConfig:
    known = {f.name for f in fields(AdapterConfig)}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown fields in {source}: {sorted(bad)}")
    return AdapterConfig(**overrides)


def resolve_config(path=None, env=None) -> AdapterConfig:
    """Merge defaults, an optional config file, and ADAPTER_* variables."""
    env = os.environ if env is None else env
    merged: dict = {}
    file_path = path or env.get(CONFIG_FILE_ENV)
    if file_path:
        merged.update(config_from_file(file_path).to_dict())
    for field in fields(AdapterConfig):
        raw = env.get(ENV_PREFIX + field.name.upper())
        if raw is None:
            continue
        if field.name == "steps":
            merged[field.name] = int(raw)
        elif field.name == "control_models":
            merged[field.name] = tuple(s.strip() for s in raw.split(",") if s.strip())
        else:
            merged[field.name] = raw
    return _build(merged, source="environment")
