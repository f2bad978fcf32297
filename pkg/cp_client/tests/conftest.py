import subprocess
import sys
from select import select

import pytest


@pytest.fixture(scope="session")
def server(tmp_path_factory):
    """A live `switchcrypt serve` subprocess; yields its (host, port).

    The server side is exercised strictly over TCP — switchcrypt is
    never imported into this test process.
    """
    proc = subprocess.Popen(
        [sys.executable, "-m", "switchcrypt", "serve",
         "--listen", "127.0.0.1:0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    ready, _, _ = select([proc.stdout], [], [], 15)
    assert ready, "server never printed its endpoint"
    line = proc.stdout.readline().strip()
    assert line.startswith("control-plane listening on ")
    host, _, port = line.rsplit(None, 1)[-1].rpartition(":")
    yield host, int(port)
    proc.terminate()
    proc.wait(timeout=10)
