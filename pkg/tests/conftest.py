"""Shared fixtures: meshes, texture states, and stub HTTP backends."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from texpaint.backend import deserialize_request, serialize_response, InpaintResponse
from texpaint.mesh import Mesh
from texpaint.primitives import make_quad, make_sphere
from texpaint.synthesis import TextureState, new_texture_state


@pytest.fixture(scope="session")
def quad():
    return make_quad()


@pytest.fixture(scope="session")
def small_sphere():
    return make_sphere(8)


@pytest.fixture(scope="session")
def two_squares():
    """Small near square in front of a large far square, both camera-facing
    from the default front view."""
    near = make_quad(size=1.0, z=1.0)
    far = make_quad(size=4.0, z=-1.0)
    mesh = Mesh(
        vertices=np.concatenate([near.vertices, far.vertices]),
        normals=np.concatenate([near.normals, far.normals]),
        uvs=np.concatenate([near.uvs, far.uvs]),
        faces=np.concatenate([near.faces, far.faces + np.array([4, 1, 4])]),
        name="two_squares",
    )
    mesh.validate()
    return mesh


def make_random_state(resolution: int, rng: np.random.Generator,
                      painted_fraction: float = 0.5) -> TextureState:
    """Synthetic painted state: random W support, V in (0,1] on support."""
    painted = rng.random((resolution, resolution)) < painted_fraction
    w = np.where(painted, rng.uniform(0.1, 3.0, (resolution, resolution)), 0.0)
    v = np.where(painted, rng.uniform(0.01, 1.0, (resolution, resolution)), 0.0)
    t = rng.random((resolution, resolution, 3))
    state = new_texture_state(resolution)
    state._data = (t.astype(np.float32), w.astype(np.float32), v.astype(np.float32))
    return state


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        behavior = self.server.behavior
        body = self.rfile.read(int(self.headers.get("content-length", 0)))
        if behavior == "slow":
            time.sleep(self.server.delay)
            behavior = "echo"
        if behavior == "fail":
            payload = json.dumps({"error": "injected backend failure"}).encode()
            self.send_response(500)
            self.send_header("content-type", "application/json")
            self.send_header("content-length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        if behavior == "bad-shape":
            from texpaint.imgio import encode_rgb8
            import base64
            img = np.zeros((256, 256, 3), dtype=np.float32)
            payload = json.dumps({
                "image": base64.b64encode(encode_rgb8(img)).decode(),
                "backend_id": "bad", "elapsed_ms": 0.0,
            }).encode()
        else:  # echo: return the masked image unchanged
            request = deserialize_request(body)
            payload = serialize_response(
                InpaintResponse(image=request.image_masked, backend_id="echo"))
        self.send_response(200)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class StubBackend:
    """Tiny real HTTP server with selectable behavior, for client tests."""

    def __init__(self, behavior: str = "echo", delay: float = 0.0):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.behavior = behavior
        self.server.delay = delay
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def echo_backend():
    stub = StubBackend("echo")
    yield stub
    stub.close()


@pytest.fixture
def failing_backend():
    stub = StubBackend("fail")
    yield stub
    stub.close()
