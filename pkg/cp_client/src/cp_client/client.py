"""Synchronous line-protocol client for the switch control plane.

One request outstanding at a time per session; every call writes one
line and reads one line.  Error surface is a small exception tree with
distinct exit codes so the CLI can map failures onto them directly.
"""

import socket
from dataclasses import dataclass

from cp_client import tables


class ClientError(Exception):
    exit_code = 1


class MalformedKeyError(ClientError):
    """Bad key material, rejected client-side before any network I/O."""
    exit_code = 2


class ConnectFailed(ClientError):
    exit_code = 3


class ServerRefused(ClientError):
    """The server answered `err <code> <message>`."""
    exit_code = 4

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class DigestMismatch(ClientError):
    exit_code = 5


def parse_key_hex(key_hex: str) -> bytes:
    text = key_hex.strip()
    try:
        key = bytes.fromhex(text)
    except ValueError:
        raise MalformedKeyError(f"{text!r} is not valid hex") from None
    if len(key) != 16:
        raise MalformedKeyError(f"key must be 16 bytes, got {len(key)}")
    return key


def parse_endpoint(value: str | tuple[str, int]) -> tuple[str, int]:
    if isinstance(value, tuple):
        return value
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise ClientError(f"endpoint must be host:port, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ClientError(f"bad port in endpoint {value!r}") from None


class ClientSession:
    """One TCP connection speaking the line protocol."""

    def __init__(self, endpoint: str | tuple[str, int], timeout: float = 5.0):
        self.endpoint = parse_endpoint(endpoint)
        self.last_key_id: str | None = None
        try:
            self._sock = socket.create_connection(self.endpoint,
                                                  timeout=timeout)
        except OSError as exc:
            raise ConnectFailed(
                f"cannot connect to {self.endpoint[0]}:{self.endpoint[1]}"
                f" ({exc})") from exc
        self._io = self._sock.makefile("rwb")

    def close(self) -> None:
        self._io.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def request(self, line: str) -> str:
        """Send one request line, return the ok-payload (may be empty)."""
        self._io.write(line.encode("ascii") + b"\n")
        self._io.flush()
        raw = self._io.readline()
        if not raw:
            raise ConnectFailed("server closed the connection")
        reply = raw.decode("utf-8", errors="replace").strip()
        if reply == "ok":
            return ""
        if reply.startswith("ok "):
            return reply[3:]
        if reply.startswith("err "):
            code, _, message = reply[4:].partition(" ")
            raise ServerRefused(code, message)
        raise ClientError(f"unparseable reply {reply!r}")

    def ping(self) -> None:
        self.request("PING")

    def set_key(self, key: bytes) -> str:
        self.last_key_id = self.request("SETKEY " + key.hex())
        return self.last_key_id

    def get_key_id(self) -> str:
        return self.request("GETKEYID")

    def get_table_digest(self, round_index: int) -> str:
        return self.request(f"GETTABLEDIGEST {round_index}")


@dataclass(frozen=True)
class VerifyReport:
    key_id: str
    rounds_checked: int
    mismatched_rounds: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatched_rounds


def upload_key(endpoint: str | tuple[str, int], key_hex: str) -> str:
    """Install a key on the switch; returns the server's key id.

    The returned id must equal the locally computed one — a different
    answer means the server is not running the construction we think
    it is, which is reported as a digest mismatch.
    """
    key = parse_key_hex(key_hex)
    expected = tables.key_id(key)
    with ClientSession(endpoint) as session:
        got = session.set_key(key)
    if got != expected:
        raise DigestMismatch(
            f"server key id {got} != locally computed {expected}")
    return got


def verify_tables(endpoint: str | tuple[str, int],
                  key_hex: str) -> VerifyReport:
    """Compare all 10 installed round-table digests with local math.

    Does not upload anything: it checks whatever the server currently
    has against the key we *believe* is installed.
    """
    key = parse_key_hex(key_hex)
    expected = tables.all_round_digests(key)
    mismatched = []
    with ClientSession(endpoint) as session:
        key_id = session.get_key_id()
        for round_index in range(1, 11):
            if session.get_table_digest(round_index) != expected[round_index - 1]:
                mismatched.append(round_index)
    return VerifyReport(key_id=key_id, rounds_checked=10,
                        mismatched_rounds=tuple(mismatched))
