"""Wire conformance of the adapter service, checked with texpaint codecs."""

import json
import threading
import time

import numpy as np
import pytest
import texpaint
from fastapi.testclient import TestClient
from hypothesis import given, settings
from hypothesis import strategies as st
from texpaint import InpaintResponse, PROTOCOL_RES

from diffusion_adapter import AdapterConfig, create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(AdapterConfig())) as c:
        yield c


def test_wire_round_trip(client, build_request):
    req = build_request(gen_box=(40, 200, 40, 200),
                        ref_box=(300, 400, 100, 300),
                        prompt="weathered copper", seed=11)
    raw = client.post("/inpaint", content=texpaint.serialize_request(req),
                      headers={"content-type": "application/json"})
    assert raw.status_code == 200
    resp = texpaint.deserialize_response(raw.content)
    assert resp.image.shape == (PROTOCOL_RES, PROTOCOL_RES, 3)
    assert resp.backend_id == "adapter-toy:unipc"
    assert resp.elapsed_ms > 0
    payload = json.loads(raw.content)
    assert payload["queue_depth"] == 0
    # canonical body: sorted keys, no whitespace
    assert raw.content == json.dumps(
        payload, sort_keys=True, separators=(",", ":")).encode()


def test_empty_masks_wire_identity(client, build_request):
    # with nothing to paint, the image survives the full encode, HTTP,
    # decode, engine, re-encode path byte-for-byte
    rng = np.random.default_rng(8)
    image = rng.random((PROTOCOL_RES, PROTOCOL_RES, 3)).astype(np.float32)
    body = texpaint.serialize_request(build_request(image=image))
    raw = client.post("/inpaint", content=body)
    assert raw.status_code == 200
    sent = json.loads(body)
    got = json.loads(raw.content)
    assert got["image"] == sent["image_masked"]


@pytest.mark.parametrize("body", [
    b"",
    b"not json",
    b"[1,2,3]",
    b'{"prompt":"x"}',
    b'{"image_masked":"@@","generate_mask":"","refine_mask":"","depth":"","prompt":""}',
])
def test_rejects_malformed_variants(client, body):
    raw = client.post("/inpaint", content=body)
    assert raw.status_code == 422
    assert "error" in raw.json()


@settings(max_examples=60, deadline=None)
@given(data=st.binary(max_size=200))
def test_malformed_bodies_always_rejected(client, data):
    # nothing under 200 bytes can hold a valid request (the PNGs alone
    # are larger), so every draw must map to a clean protocol error
    raw = client.post("/inpaint", content=data)
    assert raw.status_code == 422
    assert "error" in raw.json()


def test_health_reports_queue(client):
    payload = client.get("/health").json()
    assert payload["ok"] is True
    assert payload["queue_depth"] == 0
    assert payload["backend"] in (None, "adapter-toy:unipc")


class _SlowStub:
    backend_id = "stub:slow"

    def __init__(self, delay=0.4):
        self.delay = delay
        self.runs = []

    def run(self, request):
        self.runs.append(request.prompt)
        time.sleep(self.delay)
        return InpaintResponse(
            image=np.zeros((PROTOCOL_RES, PROTOCOL_RES, 3), dtype=np.float32),
            backend_id=self.backend_id)


def test_single_worker_fifo_and_queue_depth(build_request):
    stub = _SlowStub()
    app = create_app(AdapterConfig(), engine=stub)
    bodies = [texpaint.serialize_request(build_request(prompt=f"job {i}"))
              for i in range(3)]
    results = [None] * 3

    with TestClient(app) as client:
        def post(i):
            results[i] = client.post("/inpaint", content=bodies[i])

        threads = [threading.Thread(target=post, args=(i,)) for i in range(3)]
        for t in threads:
            t.start()
            time.sleep(0.1)  # make enqueue order match submission order
        for t in threads:
            t.join()

    assert all(r.status_code == 200 for r in results)
    depths = [json.loads(r.content)["queue_depth"] for r in results]
    assert depths == [0, 1, 2]
    assert stub.runs == ["job 0", "job 1", "job 2"]


def test_unloadable_model_reports_500(build_request):
    app = create_app(AdapterConfig(base_model="sd15/depth-inpaint-unified"))
    with TestClient(app) as client:
        raw = client.post("/inpaint",
                          content=texpaint.serialize_request(build_request()))
        assert raw.status_code == 500
        assert "error" in raw.json()
        # the load failure is per-request; the service keeps answering
        assert client.post("/inpaint", content=b"junk").status_code == 422
        assert client.get("/health").json()["ok"] is True


def _start_uvicorn(app, port):
    import uvicorn

    server = uvicorn.Server(uvicorn.Config(
        app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 20
    while not server.started:
        assert time.time() < deadline, "adapter server did not start"
        time.sleep(0.05)
    return server, thread


def test_load_failure_maps_to_remote_backend_error(build_request):
    from texpaint import RemoteBackendError

    app = create_app(AdapterConfig(base_model="sd15/depth-inpaint-unified"))
    server, thread = _start_uvicorn(app, 18592)
    try:
        with pytest.raises(RemoteBackendError, match="backend error 500"):
            texpaint.remote_inpaint("http://127.0.0.1:18592", build_request())
    finally:
        server.should_exit = True
        thread.join(timeout=10)


def test_live_server_drives_texpaint_session(build_request):
    from texpaint import Session, SynthesisConfig, inpaint_view, make_sphere

    server, thread = _start_uvicorn(create_app(AdapterConfig()), 18591)
    try:
        url = "http://127.0.0.1:18591"

        direct = texpaint.remote_inpaint(url, build_request(gen_box=(0, 256, 0, 256)))
        assert direct.backend_id == "adapter-toy:unipc"
        assert direct.image.shape == (PROTOCOL_RES, PROTOCOL_RES, 3)

        cfg = SynthesisConfig(view_resolution=128, texture_resolution=128,
                              mip_levels=3, dilate_iterations=2)
        session = Session(make_sphere(12), cfg, backend=url)
        report = inpaint_view(session, session.camera(0.0, 0.0),
                              prompt="mossy stone", seed=3)
        assert not report["skipped"]
        assert report["texels_updated"] > 0
        assert report["backend_elapsed_ms"] > 0
        assert session.coverage() > 0.1
    finally:
        server.should_exit = True
        thread.join(timeout=10)
