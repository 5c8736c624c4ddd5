import contextlib
import shutil
import threading
import time
from pathlib import Path

import pytest

from foleysim.acquisition import LibraryIndex
from foleysim.audio import tone_burst, write_wav
from foleysim.config import Config
from foleysim.engine import read_trace
from foleysim.scene import load_scene
from foleysim.session import resolve_materials

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[{'PASS' if report.passed else 'FAIL'}] {name}")

# The three-file library named after well-known stock sound effects; several
# tests pin behavior against exactly this set.
SMALL_LIBRARY_NAMES = [
    "Crash Aluminum Tray Bang",
    "Footsteps Wood Creak",
    "Liquid Mud Suction",
]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def robot_scene():
    return load_scene(FIXTURES / "scenes" / "robot.json")


@pytest.fixture(scope="session")
def robot_materials(robot_scene):
    return resolve_materials(robot_scene, FIXTURES / "scenes")


@pytest.fixture(scope="session")
def robot_trace():
    return read_trace(FIXTURES / "traces" / "robot.jsonl")


@pytest.fixture(scope="session")
def slope_scene():
    return load_scene(FIXTURES / "scenes" / "slope.json")


@pytest.fixture(scope="session")
def slope_trace():
    return read_trace(FIXTURES / "traces" / "slope.jsonl")


@pytest.fixture(scope="session")
def fixture_library() -> LibraryIndex:
    return LibraryIndex.from_dir(FIXTURES / "library")


@pytest.fixture()
def small_library(tmp_path) -> LibraryIndex:
    lib = tmp_path / "library"
    lib.mkdir()
    for i, name in enumerate(SMALL_LIBRARY_NAMES):
        write_wav(lib / f"{name}.wav", tone_burst(220.0 + 50 * i, 0.2))
    return LibraryIndex.from_dir(lib)


@pytest.fixture()
def batch_config() -> Config:
    config = Config()
    config.session.library_dir = str(FIXTURES / "library")
    return config


def copy_fixture_tree(src: Path, dst: Path) -> Path:
    shutil.copytree(src, dst)
    return dst


@contextlib.contextmanager
def live_server(app):
    """Serve a FastAPI app on an ephemeral port for real-socket tests."""
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise TimeoutError("uvicorn did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)
