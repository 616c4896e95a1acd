"""Command-line entry points: batch synthesis, the server, and the
splat-reconstruction demo."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .mesh import load_mesh, normalize_mesh
from .service import (
    Session,
    SynthesisConfig,
    default_backend,
    inpaint_view,
    run_auto,
    save_session,
    serve,
)
from .synthesis import dilate_texture, grid_put


def _parse_views(text: str):
    views = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            elevation, azimuth = (float(x) for x in part.split(","))
        except ValueError as exc:
            raise ValueError(f"bad view {part!r}, expected 'elevation,azimuth'") from exc
        views.append((elevation, azimuth))
    if not views:
        raise ValueError("no views parsed")
    return views


def _cmd_synth(args) -> int:
    data = Path(args.mesh).read_bytes()
    mesh = normalize_mesh(load_mesh(data, name=Path(args.mesh).stem))
    config = SynthesisConfig(texture_resolution=args.texture_res)
    session = Session(mesh, config, backend=args.backend)
    if args.views == "preset":
        report = run_auto(session, prompt=args.prompt, seed=args.seed)
    else:
        views = []
        for elevation, azimuth in _parse_views(args.views):
            views.append(inpaint_view(session, session.camera(elevation, azimuth),
                                      prompt=args.prompt, seed=args.seed))
        dilate_texture(session.texture_state, config.dilate_iterations)
        report = {"views": views, "coverage": session.coverage()}
    files = save_session(session, args.out)
    for view in report["views"]:
        print(f"view ({view['elevation']:g}, {view['azimuth']:g}): "
              f"generate={view['generate_px']} refine={view['refine_px']} "
              f"keep={view['keep_px']} texels={view['texels_updated']}"
              + (" [skipped]" if view["skipped"] else ""))
    print(f"coverage: {report['coverage']:.4f}")
    print(f"saved: {', '.join(files)}")
    return 0


def _cmd_serve(args) -> int:
    serve(port=args.port, host=args.host, backend=args.backend, ui_dir=args.ui_dir)
    return 0


def _psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


def gridput_experiment(image: np.ndarray, keep_fraction: float, seed: int = 0,
                       levels: int = 4) -> dict:
    """Drop all but a random fraction of pixels, reconstruct two ways.

    Baseline: nearest-texel scatter (holes stay black). Mipmap path:
    grid_put with pull-push fill. Returns images and hole/PSNR stats.
    """
    size = image.shape[0]
    total = size * size
    rng = np.random.default_rng(seed)
    idx = rng.choice(total, size=max(1, int(round(total * keep_fraction))), replace=False)
    ys, xs = np.divmod(idx, size)
    u = (xs + 0.5) / size
    v = 1.0 - (ys + 0.5) / size
    vals = image[ys, xs].astype(np.float64)

    naive = np.zeros_like(image)
    naive[ys, xs] = image[ys, xs]
    naive_filled = np.zeros((size, size), dtype=bool)
    naive_filled[ys, xs] = True

    mip, _, cov = grid_put(np.stack([u, v], axis=1), vals, np.ones(len(idx)),
                           size, levels=levels, return_coverage=True)

    return {
        "sampled_fraction": len(idx) / total,
        "naive": naive,
        "mip": mip,
        "filled_mask": cov,
        "unfilled_naive": float(1.0 - naive_filled.mean()),
        "unfilled_mip": float(1.0 - cov.mean()),
        "psnr_naive": _psnr(naive, image),
        "psnr_mip": _psnr(mip, image),
    }


def _cmd_gridput_demo(args) -> int:
    from .imgio import encode_rgb8, resize_bilinear
    from PIL import Image

    img = np.asarray(Image.open(args.image).convert("RGB"), dtype=np.float32) / 255.0
    img = resize_bilinear(img, args.size, args.size)
    stats = gridput_experiment(img, args.keep_fraction, seed=args.seed, levels=args.levels)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "original.png").write_bytes(encode_rgb8(img))
    (out / "naive.png").write_bytes(encode_rgb8(stats["naive"]))
    (out / "mip.png").write_bytes(encode_rgb8(stats["mip"]))
    report = {k: stats[k] for k in
              ("sampled_fraction", "unfilled_naive", "unfilled_mip",
               "psnr_naive", "psnr_mip")}
    (out / "stats.json").write_text(json.dumps(report, indent=2))
    print(f"sampled {report['sampled_fraction']:.3f} of pixels")
    print(f"unfilled: naive {report['unfilled_naive']:.4f} "
          f"-> mipmap {report['unfilled_mip']:.6f}")
    print(f"psnr: naive {report['psnr_naive']:.2f} dB "
          f"-> mipmap {report['psnr_mip']:.2f} dB")
    print(f"wrote {out}/original.png, naive.png, mip.png, stats.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texpaint",
                                     description="Text-driven mesh texture painting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="batch-texture a mesh and save the result")
    p.add_argument("--mesh", required=True, help="input OBJ path")
    p.add_argument("--prompt", default="", help="text prompt")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default=default_backend(),
                   help="'mock' or a backend base URL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--texture-res", type=int, default=1024)
    p.add_argument("--views", default="preset",
                   help="'preset' or 'e,a;e,a;...' pairs in degrees")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--backend", default=None)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("gridput-demo",
                       help="sparse-sample an image and compare reconstructions")
    p.add_argument("--image", required=True)
    p.add_argument("--keep-fraction", type=float, default=0.1)
    p.add_argument("--out", default="gridput_demo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--size", type=int, default=512)
    p.set_defaults(func=_cmd_gridput_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
