"""The CLI against a real server over TCP, exercising the --server path."""

import socket
import subprocess
import sys
import time

import httpx
import pytest

from temposnn.cli import main


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def server():
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "uvicorn", "temposnn.service.app:app",
         "--host", "127.0.0.1", "--port", str(port), "--log-level", "warning"],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(f"{base}/v1/health", timeout=1.0).status_code == 200:
                    break
            except httpx.TransportError:
                time.sleep(0.1)
        else:
            pytest.fail("server did not come up")
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_health_over_tcp(server):
    assert httpx.get(f"{server}/v1/health").json() == {"status": "ok"}


def test_cli_against_remote_server(server, tmp_path):
    rc = main(["--server", server, "synth", "--task", "timing-classification",
               "--out", str(tmp_path / "data"), "--channels", "16", "--steps", "40",
               "--train-per-class", "3", "--test-per-class", "1", "--seed", "1"])
    assert rc == 0
    rc = main(["--server", server, "train",
               "--manifest", str(tmp_path / "data" / "train" / "manifest.json"),
               "--out", str(tmp_path / "run"), "--arch", "16,8,4",
               "--epochs", "1", "--steps", "40", "--seed", "0"])
    assert rc == 0
    assert (tmp_path / "run" / "checkpoint.snnc").exists()


def test_remote_error_mapping(server, tmp_path, capsys):
    # a missing checkpoint is a data error and must map to exit code 2
    with pytest.raises(SystemExit) as exc:
        main(["--server", server, "eval", "--checkpoint", str(tmp_path / "nope.snnc"),
              "--manifest", str(tmp_path / "nope.json"), "--steps", "40"])
    assert exc.value.code == 2
    assert "data" in capsys.readouterr().err
