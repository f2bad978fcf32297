"""Key management plane and its TCP control protocol.

The protocol is line-delimited text: one request per line, one response
per line, UTF-8.  Responses are ``ok`` (optionally followed by a
payload) or ``err <code> <message>``.  Requests:

    PING
    SETKEY <32 hex chars>
    GETKEYID
    GETTABLEDIGEST <round 1..10>
    GETSTATS
    ADDFWD <in-port> <out-port|cpu|drop>

A malformed request earns an err response; the connection stays open.
Key material travels in the clear — the control channel has no
authentication or transport protection, matching the deployment it
models, and the README says so prominently.  Nothing in the protocol
can read key bytes back out: SETKEY returns only a hash-derived id,
and table digests are hashes of the (key-folded) tables.

All request handling is serialized through one lock, so the pipeline
only ever sees a single ordered stream of commands.  SETKEY builds the
new tables first and swaps them in as its final step: until the swap,
every query answers from the old tables.
"""

from __future__ import annotations

import hashlib
import socketserver
import threading

from .aes_core import Aes128Key, expand_key
from .pipeline import (ConfigError, Drop, Pipeline, SendToCpu, SetEgressPort)
from .ttables import build_scrambled_tables, round_table_bytes

DEFAULT_PORT = 9559


def install_key(pipeline: Pipeline, key: Aes128Key | bytes) -> str:
    """Build scrambled tables for `key` and swap them into the pipeline.

    The swap is the last step: a failure (bad key length) leaves the
    previous tables untouched.  If the pipeline was in crypto-verify
    mode it stays there, now checking against the new key.  Returns the
    key id (hash-derived identifier, never key bytes).
    """
    if not isinstance(key, Aes128Key):
        key = Aes128Key(bytes(key))
    tables = build_scrambled_tables(expand_key(key))
    verify = key if pipeline.reference_key is not None else None
    pipeline.set_tables(tables, reference_key=verify)
    return tables.key_id


def table_digest(pipeline: Pipeline, round_index: int) -> str:
    """SHA-256 over the canonical serialization of one round's tables."""
    return hashlib.sha256(
        round_table_bytes(pipeline.tables, round_index)).hexdigest()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: ControlServer = self.server  # type: ignore[assignment]
        for raw in self.rfile:
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError:
                self._reply("err badencoding request is not UTF-8")
                continue
            self._reply(server.handle_line(line))

    def _reply(self, response: str) -> None:
        self.wfile.write(response.encode("utf-8") + b"\n")
        self.wfile.flush()


class ControlServer(socketserver.ThreadingTCPServer):
    """Control protocol endpoint bound to a pipeline instance."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], pipeline: Pipeline):
        super().__init__(address, _Handler)
        self.pipeline = pipeline
        self._lock = threading.Lock()

    @property
    def endpoint(self) -> tuple[str, int]:
        return self.server_address[:2]

    def handle_line(self, line: str) -> str:
        with self._lock:
            return self._dispatch(line)

    def _dispatch(self, line: str) -> str:
        parts = line.split()
        if not parts:
            return "err malformed empty request"
        verb, args = parts[0].upper(), parts[1:]
        if verb == "PING":
            return "ok" if not args else "err malformed PING takes no arguments"
        if verb == "SETKEY":
            if len(args) != 1:
                return "err malformed SETKEY takes one argument"
            try:
                key = bytes.fromhex(args[0])
            except ValueError:
                return "err badkey key must be hex"
            if len(key) != 16:
                return "err badkey key must be 32 hex characters (16 octets)"
            return "ok " + install_key(self.pipeline, key)
        if verb == "GETKEYID":
            if args:
                return "err malformed GETKEYID takes no arguments"
            return "ok " + self.pipeline.tables.key_id
        if verb == "GETTABLEDIGEST":
            if len(args) != 1:
                return "err malformed GETTABLEDIGEST takes one argument"
            try:
                round_index = int(args[0])
            except ValueError:
                return "err badround round must be an integer"
            if not 1 <= round_index <= 10:
                return "err badround round must be in 1..10"
            return "ok " + table_digest(self.pipeline, round_index)
        if verb == "GETSTATS":
            if args:
                return "err malformed GETSTATS takes no arguments"
            summary = self.pipeline.stats.summary()
            return "ok " + " ".join(f"{k}={v}" for k, v in summary.items())
        if verb == "ADDFWD":
            if len(args) != 2:
                return "err malformed ADDFWD takes two arguments"
            try:
                in_port = int(args[0])
            except ValueError:
                return "err badport in-port must be an integer"
            target = args[1].lower()
            try:
                if target == "cpu":
                    self.pipeline.forwarding.add(in_port, SendToCpu())
                elif target == "drop":
                    self.pipeline.forwarding.add(in_port, Drop())
                else:
                    self.pipeline.forwarding.add(
                        in_port, SetEgressPort(int(target)))
            except ConfigError as exc:
                return f"err badport {exc}"
            except ValueError:
                return "err badport target must be a port number, cpu, or drop"
            return "ok"
        return f"err badverb unknown request {verb}"


def serve(pipeline: Pipeline, host: str = "127.0.0.1",
          port: int = DEFAULT_PORT) -> None:
    """Run the control server until interrupted.

    The bound endpoint is printed once on startup (port 0 binds an
    ephemeral port, so discovery needs the printed line).
    """
    with ControlServer((host, port), pipeline) as server:
        bound_host, bound_port = server.endpoint
        print(f"control-plane listening on {bound_host}:{bound_port}",
              flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
