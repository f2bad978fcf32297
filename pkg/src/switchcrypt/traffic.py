"""Workload generation and the measurement harness.

Two rate axes appear here and are easy to conflate:

* TrafficSpec offered rates are wire rates — packets/second, or bits/
  second counting every emitted octet (headers included, FCS excluded).
* Throughput results are goodput — payload bits per second, computed as
  payload_bits_received / elapsed.  Headers never count toward
  throughput, and the sustainable-rate search below runs on this
  payload-bits axis so its bounds and its result share a unit.

Loss is 1 - rx/tx where tx counts packets the modeled source actually
emitted (source-suppressed packets never reached the wire and are
excluded) and rx counts packets that egressed the switch.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
import time
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import fmean
from typing import NamedTuple

from . import packet as pkt
from .aes_core import Aes128Key, encrypt_ecb
from .pipeline import Pipeline, PipelineConfig, PortId


class Arrival(NamedTuple):
    time: float
    frame: bytes
    in_port: PortId


@dataclass(frozen=True)
class TrafficSpec:
    """One workload: packet kind/size, offered rate, schedule, seed.

    Exactly one of rate_pps / rate_bps must be set; exactly one of
    count / duration_s.  Payload bytes come from a PRNG seeded with
    `seed`, so a spec pins the byte-exact workload.
    """

    kind: str = "roce"              # "udp" | "roce"
    payload_bytes: int = 16
    rate_pps: float | None = None
    rate_bps: float | None = None   # wire bits/second
    burst: int = 1
    count: int | None = None
    duration_s: float | None = None
    seed: int = 0
    in_port: PortId = 1

    def __post_init__(self):
        if self.kind not in ("udp", "roce"):
            raise ValueError(f"kind must be udp or roce, not {self.kind!r}")
        if self.payload_bytes < 16 or self.payload_bytes % 16:
            raise ValueError("payload_bytes must be a positive multiple of 16")
        if (self.rate_pps is None) == (self.rate_bps is None):
            raise ValueError("set exactly one of rate_pps / rate_bps")
        rate = self.rate_pps if self.rate_pps is not None else self.rate_bps
        if rate <= 0:
            raise ValueError("offered rate must be positive")
        if self.burst < 1:
            raise ValueError("burst must be >= 1")
        if (self.count is None) == (self.duration_s is None):
            raise ValueError("set exactly one of count / duration_s")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be >= 0")

    @property
    def wire_len(self) -> int:
        overhead = (pkt.ROCE_HEADER_TOTAL if self.kind == "roce"
                    else pkt.UDP_HEADER_TOTAL)
        return overhead + self.payload_bytes

    @property
    def pps(self) -> float:
        if self.rate_pps is not None:
            return self.rate_pps
        return self.rate_bps / (self.wire_len * 8)

    @property
    def n_packets(self) -> int:
        if self.count is not None:
            return self.count
        return math.ceil(self.duration_s * self.pps)


def _schedule_time(i: int, burst: int, pps: float) -> float:
    return (i // burst) * burst / pps


def generate_frames(spec: TrafficSpec, count: int) -> list[bytes]:
    """The first `count` wire frames of a spec's packet stream.

    Frames depend only on (kind, payload_bytes, seed) — never on the
    offered rate — and the stream is prefix-stable: the first k frames
    are identical for any count >= k.  PSN and IP identification count
    up from zero; payload bytes come from the seeded PRNG one packet at
    a time.
    """
    rng = random.Random(spec.seed)
    base_spec = pkt.PacketSpec(payload=bytes(spec.payload_bytes))
    if spec.kind == "roce":
        base = pkt.build_roce_packet(base_spec)
    else:
        base = pkt.build_udp_packet(base_spec)

    frames: list[bytes] = []
    for i in range(count):
        payload = rng.randbytes(spec.payload_bytes)
        blocks = tuple(payload[j:j + 16] for j in range(0, len(payload), 16))
        q = replace(base, ipv4=replace(base.ipv4, identification=i & 0xFFFF))
        if q.roce is not None:
            q = replace(q, roce=pkt.RoceHeaders(
                bth=replace(q.roce.bth, psn=i & 0xFFFFFF), icrc=0))
        q = pkt.with_payload(q, blocks)
        frames.append(pkt.serialize(q))
    return frames


def generate(spec: TrafficSpec) -> list[Arrival]:
    """Deterministic arrival schedule for a spec.

    Packets go out in bursts of `burst` back-to-back (same timestamp);
    burst b starts at b*burst/pps, so the long-run rate is pps.
    """
    pps = spec.pps
    return [Arrival(_schedule_time(i, spec.burst, pps), frame, spec.in_port)
            for i, frame in enumerate(generate_frames(spec, spec.n_packets))]


@dataclass(frozen=True)
class BenchmarkReport:
    """Raw counters plus the two derived metrics.

    throughput_bps = payload_bits_rx / elapsed_s (payload bits only);
    loss_fraction = 1 - rx/tx.  elapsed_s is the offered-schedule
    window count/pps, not wall time.
    """

    spec: TrafficSpec
    config: PipelineConfig
    tx_packets: int
    rx_packets: int
    payload_bits_rx: int
    elapsed_s: float
    throughput_bps: float
    loss_fraction: float
    drops_by_reason: dict[str, int]
    source_suppressed: int

    def self_consistent(self) -> bool:
        ok_tp = math.isclose(self.throughput_bps,
                             self.payload_bits_rx / self.elapsed_s)
        expect_loss = (0.0 if self.tx_packets == 0
                       else 1.0 - self.rx_packets / self.tx_packets)
        return ok_tp and math.isclose(self.loss_fraction, expect_loss)


def measure(pipeline: Pipeline, spec: TrafficSpec, *,
            enforce_rates: bool = True,
            arrivals: list[Arrival] | None = None) -> BenchmarkReport:
    """Run a workload through a pipeline and report both metrics.

    `arrivals` lets a caller supply a pre-generated schedule; it must
    equal generate(spec) (the sustainable-rate search uses this to
    reuse one frame stream across many retimed probes).
    """
    if arrivals is None:
        arrivals = generate(spec)
    stats = pipeline.run(arrivals, enforce_rates=enforce_rates)
    tx = stats.ingress_total
    rx = stats.egress_total
    elapsed = spec.n_packets / spec.pps if spec.n_packets else 1.0
    payload_bits = stats.payload_octets_tx * 8
    return BenchmarkReport(
        spec=spec,
        config=pipeline.config,
        tx_packets=tx,
        rx_packets=rx,
        payload_bits_rx=payload_bits,
        elapsed_s=elapsed,
        throughput_bps=payload_bits / elapsed,
        loss_fraction=0.0 if tx == 0 else 1.0 - rx / tx,
        drops_by_reason=dict(stats.drops_by_reason),
        source_suppressed=stats.source_suppressed,
    )


class SeedOutcome(NamedTuple):
    seed: int
    offered_bps: float      # payload-bits axis
    goodput_bps: float
    loss_fraction: float
    range_limited: bool


@dataclass(frozen=True)
class SustainableResult:
    """Mean maximum sustainable throughput under the loss cap.

    offered_bps is the highest offered rate (payload-bits axis) whose
    measured loss stayed at or under loss_cap; goodput_bps is the
    throughput measured at that rate.  They differ when the modeled
    source, not the switch, is the binding constraint.  range_limited
    means the search never found a failing rate below its upper bound.
    """

    payload_bytes: int
    offered_bps: float
    goodput_bps: float
    loss_fraction: float
    range_limited: bool
    loss_cap: float
    per_seed: tuple[SeedOutcome, ...]
    note: str = ""


def find_max_sustainable(pipeline: Pipeline, template: TrafficSpec, *,
                         loss_cap: float = 1e-5,
                         lo_bps: float = 1e4,
                         hi_bps: float = 1e9,
                         seeds: tuple[int, ...] = (0, 1, 2),
                         probe_duration_s: float = 0.05,
                         max_probe_packets: int = 20_000,
                         tolerance: float = 0.01) -> SustainableResult:
    """Binary-search the highest offered rate whose loss stays under cap.

    The search runs per seed on the payload-bits/second axis between
    lo_bps and hi_bps to 1% relative tolerance, then averages the
    per-seed maxima.  Probes are short fixed-duration runs (capped in
    packet count at absurd rates, where gross loss shows immediately).
    If even lo_bps loses too much, the result is zero with a note.
    """
    if len(seeds) < 3:
        raise ValueError("need at least 3 seeds for a mean")
    payload_bits = template.payload_bytes * 8

    frames: list[bytes] = []  # per-seed cache, rate-independent

    def probe(offered_payload_bps: float, seed: int) -> BenchmarkReport:
        pps = offered_payload_bps / payload_bits
        count = min(math.ceil(probe_duration_s * pps), max_probe_packets)
        count = max(count, 1)
        spec = replace(template, rate_pps=pps, rate_bps=None,
                       count=count, duration_s=None, seed=seed)
        if len(frames) < count:
            frames[:] = generate_frames(spec, count)
        arrivals = [Arrival(_schedule_time(i, spec.burst, pps),
                            frames[i], spec.in_port)
                    for i in range(count)]
        return measure(pipeline, spec, arrivals=arrivals)

    outcomes: list[SeedOutcome] = []
    for seed in seeds:
        frames.clear()
        top = probe(hi_bps, seed)
        if top.loss_fraction <= loss_cap:
            outcomes.append(SeedOutcome(seed, hi_bps, top.throughput_bps,
                                        top.loss_fraction, True))
            continue
        bottom = probe(lo_bps, seed)
        if bottom.loss_fraction > loss_cap:
            outcomes.append(SeedOutcome(seed, 0.0, 0.0,
                                        bottom.loss_fraction, False))
            continue
        lo, hi = lo_bps, hi_bps
        best = bottom
        while hi / lo > 1.0 + tolerance:
            mid = math.sqrt(lo * hi)
            report = probe(mid, seed)
            if report.loss_fraction <= loss_cap:
                lo, best = mid, report
            else:
                hi = mid
        outcomes.append(SeedOutcome(seed, lo, best.throughput_bps,
                                    best.loss_fraction, False))

    note = ""
    if all(o.offered_bps == 0.0 for o in outcomes):
        note = "loss above cap even at the minimum search rate"
    return SustainableResult(
        payload_bytes=template.payload_bytes,
        offered_bps=fmean(o.offered_bps for o in outcomes),
        goodput_bps=fmean(o.goodput_bps for o in outcomes),
        loss_fraction=fmean(o.loss_fraction for o in outcomes),
        range_limited=any(o.range_limited for o in outcomes),
        loss_cap=loss_cap,
        per_seed=tuple(outcomes),
        note=note,
    )


def config_digest(config: PipelineConfig) -> str:
    """Short stable identifier of a calibration (12 hex chars)."""
    canon = ",".join(f"{k}={v!r}" for k, v in sorted(vars(config).items()))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def cpu_baseline_bps(key: Aes128Key, payloads: list[bytes]) -> float:
    """Wall-clock goodput of the straight-line cipher on this host.

    This is a measurement, not a simulation: the number varies run to
    run and machine to machine, and is excluded from determinism
    guarantees.
    """
    start = time.perf_counter()
    for payload in payloads:
        encrypt_ecb(key, payload)
    elapsed = time.perf_counter() - start
    total_bits = sum(len(p) for p in payloads) * 8
    return total_bits / elapsed if elapsed > 0 else float("inf")


def _write_csv(path: Path, fieldnames: list[str],
               rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def sweep_report(pipeline: Pipeline, payload_sizes: list[int],
                 csv_path: str | Path, *,
                 template: TrafficSpec | None = None,
                 seeds: tuple[int, ...] = (0, 1, 2),
                 loss_cap: float = 1e-5,
                 lo_bps: float = 1e4,
                 hi_bps: float = 1e9,
                 cpu_key: Aes128Key | None = None,
                 cpu_sample_packets: int = 400,
                 rxtx_points: int = 8) -> list[SustainableResult]:
    """Sweep payload sizes and emit the three plot-ready CSV series.

    <csv_path>           goodput vs payload (columns: payload_bytes,
                         offered_bps, rx_bps, loss, seeds, config_digest)
    <stem>.cpu.csv       switch goodput vs host-oracle goodput per
                         payload (only when cpu_key is given; the
                         cpu_bps column is wall-clock, not simulated)
    <stem>.rxtx.csv      RX-vs-TX curve for the largest payload, offered
                         rates spanning 0.25x..2x of its sustainable rate

    Returns the per-payload search results.  The pipeline's counters
    are reset repeatedly while sweeping.
    """
    csv_path = Path(csv_path)
    template = template or TrafficSpec(rate_pps=1.0, count=1)
    digest = config_digest(pipeline.config)
    seed_label = ";".join(str(s) for s in seeds)

    results = []
    main_rows = []
    for size in payload_sizes:
        spec = replace(template, payload_bytes=size)
        result = find_max_sustainable(
            pipeline, spec, loss_cap=loss_cap, lo_bps=lo_bps, hi_bps=hi_bps,
            seeds=seeds)
        results.append(result)
        main_rows.append({
            "payload_bytes": str(size),
            "offered_bps": f"{result.offered_bps:.3f}",
            "rx_bps": f"{result.goodput_bps:.3f}",
            "loss": f"{result.loss_fraction:.9f}",
            "seeds": seed_label,
            "config_digest": digest,
        })
    _write_csv(csv_path, ["payload_bytes", "offered_bps", "rx_bps",
                          "loss", "seeds", "config_digest"], main_rows)

    if cpu_key is not None:
        cpu_rows = []
        for size, result in zip(payload_sizes, results):
            rng = random.Random(0)
            payloads = [rng.randbytes(size) for _ in range(cpu_sample_packets)]
            cpu_rows.append({
                "payload_bytes": str(size),
                "switch_bps": f"{result.goodput_bps:.3f}",
                "cpu_bps": f"{cpu_baseline_bps(cpu_key, payloads):.3f}",
            })
        _write_csv(csv_path.with_suffix(".cpu.csv"),
                   ["payload_bytes", "switch_bps", "cpu_bps"], cpu_rows)

    largest = max(payload_sizes)
    anchor = next(r for r in results if r.payload_bytes == largest)
    anchor_bps = anchor.offered_bps or lo_bps
    rxtx_rows = []
    payload_bits = largest * 8
    for i in range(1, rxtx_points + 1):
        offered = anchor_bps * (2.0 * i / rxtx_points)
        pps = offered / payload_bits
        count = min(math.ceil(0.05 * pps), 20_000)
        spec = replace(template, payload_bytes=largest, rate_pps=pps,
                       rate_bps=None, count=max(count, 1), duration_s=None,
                       seed=seeds[0])
        report = measure(pipeline, spec)
        rxtx_rows.append({
            "payload_bytes": str(largest),
            "tx_bps": f"{offered:.3f}",
            "rx_bps": f"{report.throughput_bps:.3f}",
            "loss": f"{report.loss_fraction:.9f}",
        })
    _write_csv(csv_path.with_suffix(".rxtx.csv"),
               ["payload_bytes", "tx_bps", "rx_bps", "loss"], rxtx_rows)
    return results
