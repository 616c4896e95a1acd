"""Acceptance suite: the package's headline guarantees, one test per
criterion, each printing a single PASS line with the measured numbers.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines live.
"""

import base64
import itertools
import threading
import time

import numpy as np
from fastapi.testclient import TestClient

from texpaint.backend import mask_at_step
from texpaint.camera import OrbitCamera
from texpaint.cli import gridput_experiment
from texpaint.imgio import decode_rgb8, encode_gray8
from texpaint.mesh import export_obj
from texpaint.primitives import make_quad, make_sphere
from texpaint.rasterizer import EmptyRenderError, render
from texpaint.service import (
    Session,
    SynthesisConfig,
    create_app,
    erase_view,
    inpaint_view,
    preset_cameras,
    run_auto,
    save_session,
)
from texpaint.synthesis import (
    TextureState,
    blend_keep,
    can_undo,
    compute_trimap,
    dilate_texture,
    grid_put,
    undo,
)

from conftest import StubBackend, make_random_state


def _report(name: str, detail: str) -> None:
    print(f"[PASS] {name}: {detail}")


# 1 ------------------------------------------------------------------------

def test_trimap_partition_suite(quad, small_sphere, two_squares):
    """1,000 randomized (mesh, camera, synthetic W/V) cases: generate/
    refine/keep pairwise disjoint, union == object_mask, under 60 s."""
    meshes = (quad, small_sphere, two_squares)
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    cases = 0
    while cases < 1000:
        mesh = meshes[cases % 3]
        state = make_random_state(64, rng, painted_fraction=float(rng.uniform(0, 1)))
        cam = OrbitCamera(elevation=float(rng.uniform(-90, 90)),
                          azimuth=float(rng.uniform(-180, 180)),
                          radius=float(rng.uniform(1.5, 4.0)), resolution=64)
        try:
            gb = render(mesh, state, cam)
        except EmptyRenderError:
            continue  # edge-on sliver view: no pixels, no trimap to check
        tri = compute_trimap(gb)
        assert not (tri.generate & tri.refine).any()
        assert not (tri.generate & tri.keep).any()
        assert not (tri.refine & tri.keep).any()
        assert np.array_equal(tri.generate | tri.refine | tri.keep, gb.object_mask)
        cases += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"partition suite took {elapsed:.1f}s"
    _report("trimap-partition", f"1000/1000 cases disjoint and covering, {elapsed:.1f}s")


# 2 ------------------------------------------------------------------------

def test_mask_schedule_vectors():
    """L=20, alpha=0.4: steps 0-12 generate-only, 13-19 union; mask growth
    monotone over the step index for 100 random (L, alpha). Exact."""
    gen = np.array([[True, False], [False, False]])
    ref = np.array([[False, True], [True, False]])
    union = gen | ref
    for step in range(20):
        m = mask_at_step(step, 20, 0.4, gen, ref)
        expect = gen if step <= 12 else union
        assert np.array_equal(m, expect), f"step {step} mismatched"

    rng = np.random.default_rng(7)
    for _ in range(100):
        total = int(rng.integers(1, 64))
        alpha = float(rng.uniform(0, 1))
        prev = None
        for step in range(total):
            m = mask_at_step(step, total, alpha, gen, ref)
            assert np.array_equal(m, gen) or np.array_equal(m, union)
            if prev is not None:
                assert np.all(prev <= m), f"mask shrank at step {step} (L={total}, a={alpha})"
            prev = m
    _report("mask-schedule", "L=20 a=0.4 vectors exact; monotone over 100 random (L, a)")


# 3 ------------------------------------------------------------------------

def test_keep_blending_against_scalar_oracle():
    """100 random mask/image triples match a per-pixel loop bit-exactly."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        h = int(rng.integers(4, 24))
        w = int(rng.integers(4, 24))
        inp = rng.random((h, w, 3)).astype(np.float32)
        orig = rng.random((h, w, 3)).astype(np.float32)
        keep = rng.random((h, w)) < rng.uniform(0, 1)
        out = blend_keep(inp, orig, keep)
        oracle = np.empty_like(inp)
        for y in range(h):
            for x in range(w):
                oracle[y, x] = orig[y, x] if keep[y, x] else inp[y, x]
        assert np.array_equal(out, oracle)
    _report("keep-blending", "100/100 triples bit-exact vs scalar oracle")


# 4 ------------------------------------------------------------------------

def test_grid_put_exact_inversion_and_conservation():
    """Texel-centered full-coverage splats reproduce sources 64^2-512^2
    within 1e-6 max error; scattered weight totals conserved within 1e-4."""
    rng = np.random.default_rng(13)
    worst_err = 0.0
    worst_cons = 0.0
    for size in (64, 128, 256, 512):
        jj, ii = np.meshgrid(np.arange(size), np.arange(size))
        uv = np.stack([(jj.ravel() + 0.5) / size,
                       1.0 - (ii.ravel() + 0.5) / size], axis=1)
        src = rng.random((size * size, 3))
        img, w = grid_put(uv, src, np.ones(len(uv)), size, levels=4)
        err = float(np.abs(img - src.reshape(size, size, 3)).max())
        worst_err = max(worst_err, err)
        assert err < 1e-6, f"inversion error {err:.2e} at {size}^2"
        cons = abs(float(w.sum()) - len(uv))
        worst_cons = max(worst_cons, cons)

        n = size * size // 4
        pts = rng.uniform(0, 1, (n, 2))
        weights = rng.uniform(0, 2, n)
        _, wmap = grid_put(pts, rng.random((n, 3)), weights, size, levels=4)
        cons = abs(float(wmap.sum()) - float(weights.sum()))
        worst_cons = max(worst_cons, cons)
        assert cons < 1e-4, f"weight drift {cons:.2e} at {size}^2"
    _report("grid-put-inversion",
            f"64-512 max err {worst_err:.2e} (<1e-6), weight drift {worst_cons:.2e} (<1e-4)")


# 5 ------------------------------------------------------------------------

def _synthetic_photo(size=512):
    """Deterministic photo-like test image: smooth multi-frequency bands."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    r = 0.5 + 0.35 * np.sin(2 * np.pi * (3 * xx + 0.4 * np.sin(2 * np.pi * yy)))
    g = 0.5 + 0.30 * np.sin(2 * np.pi * (2 * yy + 1.3 * xx))
    b = 0.5 + 0.25 * np.cos(2 * np.pi * (xx * xx + yy))
    return np.clip(np.stack([r, g, b], axis=2), 0, 1).astype(np.float32)


def test_sparse_reconstruction_beats_naive_splat():
    """10% samples of a 512^2 image: mipmap extrapolation leaves < 20% of
    the naive splat's unfilled texels and wins filled-region PSNR."""
    image = _synthetic_photo(512)
    stats = gridput_experiment(image, keep_fraction=0.10, seed=0, levels=4)
    assert 0.095 < stats["sampled_fraction"] < 0.105
    ratio = stats["unfilled_mip"] / stats["unfilled_naive"]
    assert ratio < 0.20, f"unfilled ratio {ratio:.4f}"

    filled = stats["filled_mask"]

    def psnr_on(recon):
        mse = float(np.mean((recon[filled].astype(np.float64)
                             - image[filled].astype(np.float64)) ** 2))
        return 10.0 * np.log10(1.0 / mse) if mse > 0 else float("inf")

    psnr_mip = psnr_on(stats["mip"])
    psnr_naive = psnr_on(stats["naive"])
    assert psnr_mip > psnr_naive, f"mip {psnr_mip:.2f} dB vs naive {psnr_naive:.2f} dB"
    _report("sparse-reconstruction",
            f"unfilled {stats['unfilled_mip']:.4f} vs naive {stats['unfilled_naive']:.4f} "
            f"(ratio {ratio:.4f} < 0.2), filled-region PSNR {psnr_mip:.1f} "
            f"> {psnr_naive:.1f} dB")


# 6 ------------------------------------------------------------------------

def _footprint(uv, resolution):
    """Texels a set of pixels can touch through the bilinear splat."""
    if len(uv) == 0:
        return np.zeros((resolution, resolution), dtype=bool)
    ones = np.ones(len(uv))
    _, w = grid_put(uv, ones[:, None], ones, resolution, levels=1)
    return w > 0.0


def test_keep_region_immutability_over_preset_run():
    """Sphere, 10 preset views: texels reachable only from keep pixels are
    byte-identical across each view's update. Zero violations."""
    config = SynthesisConfig(view_resolution=256, texture_resolution=256, mip_levels=4)
    session = Session(make_sphere(16), config, backend="mock")
    res = config.texture_resolution
    violations = 0
    checked = 0
    for k, (elevation, azimuth) in enumerate(preset_cameras()):
        cam = session.camera(elevation, azimuth)
        gb = render(session.mesh, session.texture_state, cam)
        tri = compute_trimap(gb, config.refine_margin)
        keep_uv = gb.uv[tri.keep].astype(np.float64)
        write_px = (tri.generate | tri.refine) & (gb.view_cos > 0)
        write_uv = gb.uv[write_px].astype(np.float64)
        keep_only = _footprint(keep_uv, res) & ~_footprint(write_uv, res)

        t_before = session.texture_state.T.copy()
        inpaint_view(session, cam, prompt="immutability", seed=k)
        t_after = session.texture_state.T
        bad = int((t_before[keep_only] != t_after[keep_only]).any(axis=-1).sum())
        violations += bad
        checked += int(keep_only.sum())
        assert bad == 0, f"view {k} ({elevation},{azimuth}): {bad} keep texels changed"
    assert violations == 0
    _report("keep-immutability",
            f"10 views, {checked} keep-only texel checks, {violations} violations")


# 7 ------------------------------------------------------------------------

def test_end_to_end_determinism_and_coverage(tmp_path):
    """Default config + mock backend, fixed seed: two runs byte-identical
    albedo.png, UV-referenced coverage >= 95%, both runs inside 30 s."""
    start = time.perf_counter()
    albedo = []
    coverage = []
    for run in range(2):
        session = Session(make_sphere(), SynthesisConfig(), backend="mock")
        result = run_auto(session, prompt="weathered bronze statue", seed=123)
        out = tmp_path / f"run{run}"
        save_session(session, out)
        albedo.append((out / "albedo.png").read_bytes())
        coverage.append(result["coverage"])
    elapsed = time.perf_counter() - start
    assert albedo[0] == albedo[1], "albedo.png differs between identical runs"
    assert coverage[0] >= 0.95, f"coverage {coverage[0]:.4f} < 0.95"
    assert elapsed < 30.0, f"two runs took {elapsed:.1f}s"
    _report("e2e-determinism",
            f"albedo byte-identical, coverage {coverage[0]:.4f} >= 0.95, "
            f"two runs in {elapsed:.1f}s < 30s")


# 8 ------------------------------------------------------------------------

def test_undo_restores_every_op_sequence():
    """Every op sequence of length <= 5 over {inpaint, erase, dilate}:
    N ops then N undos restore (T, W, V) byte-exactly."""
    config = SynthesisConfig(view_resolution=48, texture_resolution=64,
                             mip_levels=3, dilate_iterations=1)
    session = Session(make_sphere(6), config, backend="mock")
    inpaint_view(session, session.camera(0, 0), prompt="base coat", seed=999)
    session.texture_state.history.clear()
    initial = session.texture_state.snapshot()
    cams = preset_cameras()

    def op_inpaint(i):
        elevation, azimuth = cams[(i + 1) % len(cams)]
        inpaint_view(session, session.camera(elevation, azimuth),
                     prompt="sequence", seed=i)

    def op_erase(i):
        mask = np.zeros((48, 48), dtype=bool)
        start = (7 * i) % 36
        mask[start:start + 12, start:start + 12] = True
        erase_view(session, session.camera(0, 0), mask)

    def op_dilate(i):
        dilate_texture(session.texture_state, 1)

    ops = (op_inpaint, op_erase, op_dilate)
    sequences = 0
    for length in range(1, 6):
        for combo in itertools.product(range(3), repeat=length):
            session.texture_state = TextureState(*initial)
            for pos, which in enumerate(combo):
                ops[which](pos)
            assert len(session.texture_state.history) == length
            for _ in range(length):
                undo(session.texture_state)
            after = session.texture_state.snapshot()
            for name, a, b in zip("TWV", after, initial):
                assert np.array_equal(a, b), \
                    f"{name} not restored by sequence {combo}"
            assert not can_undo(session.texture_state)
            sequences += 1
    assert sequences == 363
    _report("undo-suite", f"{sequences}/363 op sequences restored byte-exactly")


# 9 ------------------------------------------------------------------------

def test_preset_camera_list_exact():
    """The preset view list matches the published order exactly."""
    expected = [
        (0, 0), (0, 45), (0, -45), (0, 90), (0, -90),
        (0, 135), (0, -135), (0, 180), (90, 0), (-90, 0),
    ]
    assert preset_cameras() == expected
    _report("preset-cameras", "10 poses, exact order")


# 10 -----------------------------------------------------------------------

def _upload(client, config=None):
    import json as _json
    data = {"config": _json.dumps(config)} if config else {}
    files = {"mesh": ("sphere.obj", export_obj(make_sphere(6)), "text/plain")}
    resp = client.post("/sessions", files=files, data=data)
    assert resp.status_code == 200, resp.text
    return resp.json()["id"]


def test_service_api_conformance(tmp_path):
    """Every endpoint behaves per contract with the mock backend alone,
    including 409 while busy and rollback on injected backend failure."""
    small = SynthesisConfig(view_resolution=64, texture_resolution=64, mip_levels=3,
                            dilate_iterations=2)
    app = create_app(backend="mock", config=small, ui_dir="/nonexistent")
    client = TestClient(app, raise_server_exceptions=False)

    sid = _upload(client, config={"steps": 10})
    state = client.get(f"/sessions/{sid}/state").json()
    assert state["config"]["steps"] == 10
    assert state["coverage"] == 0.0 and state["history"] == 0 and state["busy"] is False

    assert client.get("/sessions/missing/state").status_code == 404
    files = {"mesh": ("bad.obj", b"v 0 0\nf 1 2 3\n", "text/plain")}
    assert client.post("/sessions", files=files).status_code == 422

    for mode in ("rgb", "depth", "alpha", "normal", "viewcos"):
        r = client.get(f"/sessions/{sid}/render", params={"mode": mode})
        assert r.status_code == 200 and r.headers["content-type"] == "image/png"
        assert decode_rgb8(r.content).shape == (64, 64, 3)
    assert client.get(f"/sessions/{sid}/render", params={"mode": "x"}).status_code == 422

    before = client.get(f"/sessions/{sid}/render").content
    report = client.post(f"/sessions/{sid}/inpaint",
                         json={"elevation": 0, "azimuth": 0,
                               "prompt": "api", "seed": 3}).json()
    assert report["texels_updated"] > 0 and report["skipped"] is False

    mask = np.zeros((64, 64), dtype=bool)
    mask[16:48, 16:48] = True
    erased = client.post(f"/sessions/{sid}/erase", json={
        "elevation": 0, "azimuth": 0,
        "mask": base64.b64encode(encode_gray8(mask)).decode()}).json()
    assert erased["erased_texels"] > 0

    assert client.post(f"/sessions/{sid}/undo").json()["undone"] is True
    assert client.post(f"/sessions/{sid}/undo").json()["undone"] is True
    assert client.post(f"/sessions/{sid}/undo").json()["undone"] is False
    assert client.get(f"/sessions/{sid}/render").content == before

    auto = client.post(f"/sessions/{sid}/auto", json={"prompt": "api", "seed": 1}).json()
    assert len(auto["views"]) == 10 and auto["coverage"] > 0.9

    saved = client.post(f"/sessions/{sid}/save",
                        json={"path": str(tmp_path / "sess")}).json()
    import os
    assert all(os.path.exists(f) for f in saved["files"])

    assert client.post(f"/sessions/{sid}/init").status_code == 200
    assert client.get(f"/sessions/{sid}/state").json()["coverage"] == 0.0

    # concurrent mutation: second writer sees 409 while the first holds the lock
    slow = StubBackend("slow", delay=1.2)
    try:
        slow_app = create_app(backend=slow.url, config=small, ui_dir="/nonexistent")
        c1 = TestClient(slow_app, raise_server_exceptions=False)
        c2 = TestClient(slow_app, raise_server_exceptions=False)
        bsid = _upload(c1)
        first = {}

        def post_first():
            first["resp"] = c1.post(f"/sessions/{bsid}/inpaint", json={"seed": 1})

        t = threading.Thread(target=post_first)
        t.start()
        time.sleep(0.4)  # backend holds the first request for 1.2s
        blocked = c2.post(f"/sessions/{bsid}/inpaint", json={"seed": 2})
        assert blocked.status_code == 409, blocked.text
        assert c2.get(f"/sessions/{bsid}/state").json()["busy"] is True
        t.join()
        assert first["resp"].status_code == 200
    finally:
        slow.close()

    # injected backend failure: 502 and no partial state
    fail = StubBackend("fail")
    try:
        fail_app = create_app(backend=fail.url, config=small, ui_dir="/nonexistent")
        fc = TestClient(fail_app, raise_server_exceptions=False)
        fsid = _upload(fc)
        fc.post = fc.post
        before = fc.get(f"/sessions/{fsid}/render").content
        resp = fc.post(f"/sessions/{fsid}/inpaint", json={"seed": 1})
        assert resp.status_code == 502
        assert "injected backend failure" in resp.json()["error"]
        after_state = fc.get(f"/sessions/{fsid}/state").json()
        assert fc.get(f"/sessions/{fsid}/render").content == before
        assert after_state["history"] == 0 and after_state["busy"] is False
    finally:
        fail.close()

    _report("service-contract",
            "all endpoints conform; 409 while busy; 502 rollback left state untouched")
