import threading
import time

import numpy as np
import pytest
import uvicorn

from gesturelog.datasets import prototype_model
from gesturelog.server import create_app
from gesturelog.skeleton import DEGENERATE_EPS, HandSkeleton, Handedness


def make_random_skeleton(rng: np.random.Generator, spread: float = 1.0) -> HandSkeleton:
    """A random, non-degenerate skeleton with coordinates in [0, spread]."""
    while True:
        pts = rng.uniform(0.0, spread, size=(21, 3))
        if np.linalg.norm(pts[9] - pts[0]) > 100 * DEGENERATE_EPS:
            return HandSkeleton(pts, Handedness.UNKNOWN)


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


def run_live_server(app):
    """Boot the app in a uvicorn thread on a free port; yields the base URL."""
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning", lifespan="off")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("test server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    return server, thread, f"http://127.0.0.1:{port}"


@pytest.fixture
def live_server(tmp_path):
    app = create_app(prototype_model(), tmp_path / "sessions")
    server, thread, url = run_live_server(app)
    yield url
    server.should_exit = True
    thread.join(timeout=10)
