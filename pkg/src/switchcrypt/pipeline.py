"""Single-pipeline switch model: parse, match-action forward, encrypt by
recirculation, deparse.

Encryption happens one table round per recirculation pass (configurable
via rounds_per_pass), so a packet with N payload blocks costs
N * ceil(10 / rounds_per_pass) passes — 10N with the default of one
round per pass.  Blocks are processed sequentially: block j completes
all ten rounds before block j+1 starts.  ECB independence makes the
order unobservable, which the test suite checks rather than assumes.

Capacity is a two-token-bucket model: a source bucket in packets/second
(what the traffic generator can actually emit — non-admitted packets
are never transmitted and are invisible to loss accounting) and a
recirculation bucket in passes/second.  A packet reserves its entire
pass budget at its first recirculation step; if the budget is not
available the packet is dropped with reason ``capacity_exceeded``.
Reserving up front keeps the model work-conserving — a packet either
gets all its passes or none, so passes are never wasted on packets
that would die mid-flight.

The forwarding decision is latched at first ingress and carried in the
flight state; recirculated packets do not re-consult the table.  The
alternative (re-matching each pass) would behave identically for any
table that is not mutated mid-packet.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import packet as pkt
from .aes_core import Aes128Key, encrypt_ecb
from .ttables import RoundState, ScrambledTables, apply_round

PortId = int

# Front-panel ports are 0..63.  The CPU punt port and the two internal
# recirculation ports live outside that range and cannot be forwarded to.
FRONT_PANEL_PORTS = range(0, 64)
CPU_PORT: PortId = 255
RECIRC_PORTS: tuple[PortId, PortId] = (68, 196)


class ConfigError(ValueError):
    """A pipeline configuration that cannot be realized."""


class CryptoMismatchError(RuntimeError):
    """Test-mode check failed: table path disagreed with the reference."""


# --------------------------------------------------------------------------
# Forwarding

@dataclass(frozen=True)
class SetEgressPort:
    port: PortId


@dataclass(frozen=True)
class SendToCpu:
    pass


@dataclass(frozen=True)
class Drop:
    pass


Action = SetEgressPort | SendToCpu | Drop


class ForwardingTable:
    """Exact-match ingress-port table with an implicit default of Drop.

    lookup() is total: unconfigured ports map to Drop.  Both the default
    and explicit Drop entries surface as drop reason ``no_match`` — the
    table produced no forwarding match.
    """

    def __init__(self):
        self._actions: dict[PortId, Action] = {}

    def add(self, in_port: PortId, action: Action) -> None:
        if in_port not in FRONT_PANEL_PORTS:
            raise ConfigError(f"ingress port {in_port} is not a front-panel port")
        if isinstance(action, SetEgressPort) and action.port not in FRONT_PANEL_PORTS:
            raise ConfigError(f"egress port {action.port} is not a front-panel port")
        self._actions[in_port] = action

    def remove(self, in_port: PortId) -> None:
        self._actions.pop(in_port, None)

    def lookup(self, in_port: PortId) -> Action:
        return self._actions.get(in_port, Drop())

    def entries(self) -> dict[PortId, Action]:
        return dict(self._actions)

    def __len__(self) -> int:
        return len(self._actions)


# --------------------------------------------------------------------------
# Configuration

@dataclass(frozen=True)
class PipelineConfig:
    """Capacity and resource parameters of the modeled switch.

    max_blocks bounds the payload the encryption path accepts (8 blocks
    = 128 bytes by default); compile_limit_blocks is the hard resource
    ceiling past which a configuration cannot be built at all.  The two
    rates calibrate the token buckets; bursts are in the same unit as
    the respective bucket (packets / passes).
    """

    max_blocks: int = 8
    compile_limit_blocks: int = 24
    rounds_per_pass: int = 1
    source_pps_cap: float = 25_000.0
    source_burst: float = 32.0
    recirc_pass_rate: float = 1_280_000.0
    recirc_burst: float = 100.0

    def passes_per_block(self) -> int:
        return math.ceil(10 / self.rounds_per_pass)

    def passes_per_packet(self, n_blocks: int) -> int:
        return n_blocks * self.passes_per_block()


def validate_config(cfg: PipelineConfig,
                    traffic_blocks: int | None = None) -> None:
    """Raise ConfigError for configurations that cannot be realized.

    traffic_blocks, when given, is the block count the workload declares
    it will carry; a count at or past compile_limit_blocks models the
    build failing to fit the pipeline, and one past max_blocks would
    only ever produce over_max_blocks drops, so both are rejected here
    rather than at runtime.
    """
    problems = []
    if cfg.max_blocks < 1:
        problems.append("max_blocks must be >= 1")
    if not 1 <= cfg.rounds_per_pass <= 10:
        problems.append("rounds_per_pass must be in 1..10")
    if cfg.max_blocks >= cfg.compile_limit_blocks:
        problems.append(
            f"max_blocks {cfg.max_blocks} exceeds pipeline resources "
            f"(limit {cfg.compile_limit_blocks} blocks)")
    for name in ("source_pps_cap", "source_burst",
                 "recirc_pass_rate", "recirc_burst"):
        if getattr(cfg, name) <= 0:
            problems.append(f"{name} must be positive")
    if traffic_blocks is not None:
        if traffic_blocks >= cfg.compile_limit_blocks:
            problems.append(
                f"traffic of {traffic_blocks} blocks "
                f"({traffic_blocks * 16} B) exceeds pipeline resources "
                f"(limit {cfg.compile_limit_blocks} blocks)")
        elif traffic_blocks > cfg.max_blocks:
            problems.append(
                f"traffic of {traffic_blocks} blocks exceeds max_blocks "
                f"{cfg.max_blocks}")
    if problems:
        raise ConfigError("; ".join(problems))


class TokenBucket:
    """Plain token bucket; model time is supplied by the caller."""

    def __init__(self, rate: float, burst: float):
        self.rate = rate
        self.burst = burst
        self.tokens = burst
        self.stamp = 0.0

    def try_take(self, amount: float, now: float) -> bool:
        if now > self.stamp:
            self.tokens = min(self.burst,
                              self.tokens + (now - self.stamp) * self.rate)
            self.stamp = now
        if self.tokens + 1e-9 >= amount:
            self.tokens -= amount
            return True
        return False


# --------------------------------------------------------------------------
# Events and statistics

@dataclass(frozen=True)
class Egressed:
    port: PortId
    frame: bytes
    passes: int
    encrypted: bool
    payload_octets: int = 0


@dataclass(frozen=True)
class ToCpu:
    frame: bytes


@dataclass(frozen=True)
class Dropped:
    reason: str  # no_match | parse_error | over_max_blocks | capacity_exceeded


@dataclass
class Flight:
    """A packet in the encryption path, between recirculation passes."""

    packet: pkt.Packet
    action: SetEgressPort
    blocks: list[bytes]
    block_index: int = 0
    rounds_done: int = 0
    passes: int = 0

    @property
    def total_blocks(self) -> int:
        return len(self.blocks)

    @property
    def recirc_port(self) -> PortId:
        return RECIRC_PORTS[self.passes % 2]


PipelineEvent = Egressed | ToCpu | Dropped | Flight


def flight_wire_frame(flight: Flight) -> bytes:
    """Serialize the in-flight packet as it would appear on a
    recirculation port: progress header attached, payload mid-round."""
    header = pkt.RecircHeader(round=flight.rounds_done,
                              block=flight.block_index,
                              total_blocks=flight.total_blocks)
    q = replace(flight.packet, recirc=header, blocks=tuple(flight.blocks))
    return pkt.serialize(q)


@dataclass
class PipelineStats:
    """Per-port packet/octet counters plus drop and pass accounting.

    Conservation invariant: every front-panel ingress packet appears
    exactly once as egressed, punted to CPU, or dropped-with-reason.
    source_suppressed counts arrivals the modeled source could not emit
    at all; they never reached ingress and sit outside conservation.
    """

    rx_packets: Counter = field(default_factory=Counter)
    rx_octets: Counter = field(default_factory=Counter)
    tx_packets: Counter = field(default_factory=Counter)
    tx_octets: Counter = field(default_factory=Counter)
    cpu_packets: int = 0
    cpu_octets: int = 0
    recirculations: int = 0
    drops_by_reason: Counter = field(default_factory=Counter)
    source_suppressed: int = 0
    payload_octets_tx: int = 0

    @property
    def ingress_total(self) -> int:
        return sum(self.rx_packets.values())

    @property
    def egress_total(self) -> int:
        return sum(self.tx_packets.values())

    @property
    def drop_total(self) -> int:
        return sum(self.drops_by_reason.values())

    @property
    def conserved(self) -> bool:
        return self.ingress_total == (self.egress_total + self.cpu_packets
                                      + self.drop_total)

    def summary(self) -> dict[str, int]:
        out = {
            "rx": self.ingress_total,
            "tx": self.egress_total,
            "cpu": self.cpu_packets,
            "dropped": self.drop_total,
            "recirculations": self.recirculations,
            "source_suppressed": self.source_suppressed,
        }
        for reason in sorted(self.drops_by_reason):
            out[f"drop.{reason}"] = self.drops_by_reason[reason]
        return out


# --------------------------------------------------------------------------
# The pipeline

class Pipeline:
    """Deterministic single-threaded switch model.

    `tables` must be installed before traffic can be processed; key
    changes go through set_tables (the control plane swaps atomically).
    With `reference_key` set, every completed encryption is compared
    against the straight-line cipher and a disagreement raises
    CryptoMismatchError — test mode, off in benchmarks.

    CPU-punted frames always accumulate in cpu_frames; egress frames
    are captured in egress_frames only when capture=True.
    """

    def __init__(self, tables: ScrambledTables,
                 forwarding: ForwardingTable | None = None,
                 config: PipelineConfig | None = None, *,
                 reference_key: Aes128Key | None = None,
                 capture: bool = False):
        self.config = config or PipelineConfig()
        validate_config(self.config)
        self.tables = tables
        self.forwarding = forwarding or ForwardingTable()
        self.reference_key = reference_key
        self.capture = capture
        self.cpu_frames: list[bytes] = []
        self.egress_frames: list[bytes] = []
        self.stats = PipelineStats()
        self._source = TokenBucket(self.config.source_pps_cap,
                                   self.config.source_burst)
        self._recirc = TokenBucket(self.config.recirc_pass_rate,
                                   self.config.recirc_burst)

    def reset_state(self) -> None:
        """Fresh counters, sinks, and full token buckets."""
        self.cpu_frames = []
        self.egress_frames = []
        self.stats = PipelineStats()
        self._source = TokenBucket(self.config.source_pps_cap,
                                   self.config.source_burst)
        self._recirc = TokenBucket(self.config.recirc_pass_rate,
                                   self.config.recirc_burst)

    def set_tables(self, tables: ScrambledTables,
                   reference_key: Aes128Key | None = None) -> None:
        self.tables = tables
        self.reference_key = reference_key

    # -- per-packet path ---------------------------------------------------

    def ingress(self, frame: bytes | pkt.Packet,
                in_port: PortId) -> PipelineEvent:
        """Parse, match, and classify one packet.

        Returns a terminal event, or a Flight if the packet enters the
        encryption path (whole-block UDP/RoCE payload within max_blocks).
        UDP packets with a partial trailing block and non-UDP packets
        forward unencrypted.
        """
        if isinstance(frame, pkt.Packet):
            p = frame
        else:
            try:
                p = pkt.parse(frame)
            except pkt.ParseError:
                return Dropped("parse_error")
        action = self.forwarding.lookup(in_port)
        if isinstance(action, Drop):
            return Dropped("no_match")
        if isinstance(action, SendToCpu):
            return ToCpu(pkt.serialize(p))
        if not p.encryptable:
            return Egressed(action.port, pkt.serialize(p), passes=0,
                            encrypted=False, payload_octets=len(p.payload))
        if len(p.blocks) > self.config.max_blocks:
            return Dropped("over_max_blocks")
        return Flight(packet=p, action=action, blocks=list(p.blocks))

    def recirculate_step(self, flight: Flight, now: float = 0.0, *,
                         enforce_rates: bool = False) -> PipelineEvent:
        """One recirculation pass: up to rounds_per_pass table rounds on
        the current block.  The full pass budget is reserved at the
        first step; a reservation failure drops the packet before any
        round is applied."""
        if flight.passes == 0 and enforce_rates:
            budget = self.config.passes_per_packet(flight.total_blocks)
            if not self._recirc.try_take(float(budget), now):
                return Dropped("capacity_exceeded")
        state = RoundState(flight.blocks[flight.block_index],
                           flight.rounds_done)
        for _ in range(self.config.rounds_per_pass):
            state = apply_round(state, self.tables)
            if state.round_index == 10:
                break
        flight.blocks[flight.block_index] = state.block
        flight.rounds_done = state.round_index
        flight.passes += 1
        if state.round_index == 10:
            flight.block_index += 1
            flight.rounds_done = 0
        if flight.block_index == flight.total_blocks:
            return self._egress_encrypted(flight)
        return flight

    def _egress_encrypted(self, flight: Flight) -> Egressed:
        cipher = b"".join(flight.blocks)
        if self.reference_key is not None:
            expected = encrypt_ecb(self.reference_key, flight.packet.payload)
            if cipher != expected:
                raise CryptoMismatchError(
                    "recirculation result disagrees with reference cipher")
        q = pkt.with_payload(flight.packet, tuple(flight.blocks))
        return Egressed(flight.action.port, pkt.serialize(q),
                        passes=flight.passes, encrypted=True,
                        payload_octets=len(cipher))

    def process(self, frame: bytes | pkt.Packet, in_port: PortId,
                now: float = 0.0, *, enforce_rates: bool = False) -> PipelineEvent:
        """Run one packet to its terminal event, recording stats."""
        wire_len = len(frame) if isinstance(frame, bytes) else frame.wire_len
        self.stats.rx_packets[in_port] += 1
        self.stats.rx_octets[in_port] += wire_len
        event = self.ingress(frame, in_port)
        while isinstance(event, Flight):
            flight = event
            event = self.recirculate_step(flight, now,
                                          enforce_rates=enforce_rates)
            if not isinstance(event, Dropped):
                self.stats.recirculations += 1
        self._record(event)
        return event

    def _record(self, event: PipelineEvent) -> None:
        if isinstance(event, Egressed):
            self.stats.tx_packets[event.port] += 1
            self.stats.tx_octets[event.port] += len(event.frame)
            self.stats.payload_octets_tx += event.payload_octets
            if self.capture:
                self.egress_frames.append(event.frame)
        elif isinstance(event, ToCpu):
            self.stats.cpu_packets += 1
            self.stats.cpu_octets += len(event.frame)
            self.cpu_frames.append(event.frame)
        elif isinstance(event, Dropped):
            self.stats.drops_by_reason[event.reason] += 1

    def offer(self, frame: bytes, in_port: PortId, now: float, *,
              enforce_rates: bool = True) -> PipelineEvent | None:
        """Source-admission plus process(); None means the modeled
        source could not emit the packet (it never reached the wire)."""
        if enforce_rates and not self._source.try_take(1.0, now):
            self.stats.source_suppressed += 1
            return None
        return self.process(frame, in_port, now, enforce_rates=enforce_rates)

    def run(self, arrivals: Iterable[tuple[float, bytes, PortId]], *,
            enforce_rates: bool = True,
            reset: bool = True) -> PipelineStats:
        """Drive a timed workload (time, frame, in_port) through the
        pipeline.  Arrivals must be in non-decreasing time order."""
        if reset:
            self.reset_state()
        for when, frame, in_port in arrivals:
            self.offer(frame, in_port, when, enforce_rates=enforce_rates)
        return self.stats


# --------------------------------------------------------------------------
# Configuration files

@dataclass
class FileConfig:
    """Parsed pipeline configuration file."""

    pipeline: PipelineConfig
    forwarding: ForwardingTable
    key_hex: str | None = None
    traffic_blocks: int | None = None


_INT_FIELDS = {"max_blocks", "compile_limit_blocks", "rounds_per_pass"}
_FLOAT_FIELDS = {"source_pps_cap", "source_burst",
                 "recirc_pass_rate", "recirc_burst"}


def read_config_file(path: str | Path) -> FileConfig:
    """Parse the human-editable config format.

    Lines are either ``name = value`` settings, ``port <in> -> <target>``
    forwarding entries (target: a front-panel port number, ``cpu``, or
    ``drop``), comments starting with ``#``, or blank.  Recognized
    settings: the PipelineConfig fields, ``key`` (32 hex chars), and
    ``traffic_blocks`` (declared workload size, checked by
    validate_config).
    """
    values: dict[str, float | int] = {}
    forwarding = ForwardingTable()
    key_hex: str | None = None
    traffic_blocks: int | None = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("port "):
            parts = line.split()
            if len(parts) != 4 or parts[2] != "->":
                raise ConfigError(f"line {lineno}: expected 'port <in> -> <target>'")
            try:
                in_port = int(parts[1])
            except ValueError:
                raise ConfigError(f"line {lineno}: bad port {parts[1]!r}") from None
            target = parts[3]
            if target == "cpu":
                forwarding.add(in_port, SendToCpu())
            elif target == "drop":
                forwarding.add(in_port, Drop())
            else:
                try:
                    egress = int(target)
                except ValueError:
                    raise ConfigError(
                        f"line {lineno}: bad target {target!r}") from None
                forwarding.add(in_port, SetEgressPort(egress))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'name = value'")
        name, _, value = (s.strip() for s in line.partition("="))
        if name == "key":
            try:
                if len(bytes.fromhex(value)) != 16:
                    raise ValueError
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: key must be 32 hex characters") from None
            key_hex = value
        elif name == "traffic_blocks" or name in _INT_FIELDS or name in _FLOAT_FIELDS:
            cast = float if name in _FLOAT_FIELDS else int
            try:
                parsed = cast(value)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: bad value {value!r} for {name}") from None
            if name == "traffic_blocks":
                traffic_blocks = parsed
            else:
                values[name] = parsed
        else:
            raise ConfigError(f"line {lineno}: unknown setting {name!r}")
    cfg = PipelineConfig(**values)  # type: ignore[arg-type]
    return FileConfig(pipeline=cfg, forwarding=forwarding,
                      key_hex=key_hex, traffic_blocks=traffic_blocks)
