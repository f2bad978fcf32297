"""Pipeline behavior: forwarding, recirculation, capacity, conservation."""

import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import aes_oracle as oracle
from switchcrypt import packet as pkt
from switchcrypt.aes_core import Aes128Key, encrypt_ecb, expand_key
from switchcrypt.packet import PacketSpec, build_roce_packet, build_udp_packet
from switchcrypt.pipeline import (CPU_PORT, FRONT_PANEL_PORTS, RECIRC_PORTS,
                                  ConfigError, CryptoMismatchError, Drop,
                                  Dropped, Egressed, Flight, ForwardingTable,
                                  Pipeline, PipelineConfig, SendToCpu,
                                  SetEgressPort, ToCpu, TokenBucket,
                                  flight_wire_frame, read_config_file,
                                  validate_config)
from switchcrypt.ttables import build_scrambled_tables

KEY = Aes128Key(oracle.KAT_KEY)


def roce_frame(n_bytes=32, **kw) -> bytes:
    payload = bytes(i % 256 for i in range(n_bytes))
    return pkt.serialize(build_roce_packet(PacketSpec(payload=payload, **kw)))


def udp_frame(payload: bytes, **kw) -> bytes:
    return pkt.serialize(build_udp_packet(PacketSpec(payload=payload, **kw)))


def make_pipeline(kat_tables, key=KEY, config=None, capture=False,
                  routes=((1, SetEgressPort(2)),)):
    fwd = ForwardingTable()
    for in_port, action in routes:
        fwd.add(in_port, action)
    return Pipeline(kat_tables, fwd, config, reference_key=key,
                    capture=capture)


class TestPortSpace:
    def test_reserved_ports_are_outside_front_panel(self):
        assert CPU_PORT not in FRONT_PANEL_PORTS
        for p in RECIRC_PORTS:
            assert p not in FRONT_PANEL_PORTS
        assert len(set(RECIRC_PORTS) | {CPU_PORT}) == 3

    def test_front_panel_is_64_ports(self):
        assert list(FRONT_PANEL_PORTS) == list(range(64))


class TestValidateConfig:
    def test_default_is_valid(self):
        validate_config(PipelineConfig())

    def test_max_blocks_at_compile_limit_rejected(self):
        with pytest.raises(ConfigError, match="exceeds pipeline resources"):
            validate_config(PipelineConfig(max_blocks=24))

    def test_traffic_at_compile_limit_rejected(self):
        with pytest.raises(ConfigError, match="exceeds pipeline resources"):
            validate_config(PipelineConfig(), traffic_blocks=24)

    def test_traffic_block_message_names_the_byte_count(self):
        with pytest.raises(ConfigError, match="384 B"):
            validate_config(PipelineConfig(), traffic_blocks=24)

    def test_traffic_over_max_blocks_rejected_separately(self):
        with pytest.raises(ConfigError, match="exceeds max_blocks"):
            validate_config(PipelineConfig(), traffic_blocks=16)

    @pytest.mark.parametrize("blocks", [1, 4, 8])
    def test_traffic_within_limits_accepted(self, blocks):
        validate_config(PipelineConfig(), traffic_blocks=blocks)

    @pytest.mark.parametrize("rpp", [0, 11, -1])
    def test_rounds_per_pass_bounds(self, rpp):
        with pytest.raises(ConfigError, match="rounds_per_pass"):
            validate_config(PipelineConfig(rounds_per_pass=rpp))

    def test_rates_must_be_positive(self):
        with pytest.raises(ConfigError, match="source_pps_cap"):
            validate_config(PipelineConfig(source_pps_cap=0))
        with pytest.raises(ConfigError, match="recirc_burst"):
            validate_config(PipelineConfig(recirc_burst=-1))

    def test_problems_are_aggregated(self):
        with pytest.raises(ConfigError) as e:
            validate_config(PipelineConfig(max_blocks=0, rounds_per_pass=0))
        assert "max_blocks" in str(e.value)
        assert "rounds_per_pass" in str(e.value)

    def test_pass_arithmetic(self):
        cfg = PipelineConfig()
        assert cfg.passes_per_block() == 10
        assert cfg.passes_per_packet(8) == 80
        assert PipelineConfig(rounds_per_pass=3).passes_per_block() == 4
        assert PipelineConfig(rounds_per_pass=10).passes_per_packet(2) == 2


class TestForwardingTable:
    def test_lookup_is_total_with_drop_default(self):
        t = ForwardingTable()
        assert t.lookup(0) == Drop()
        assert t.lookup(63) == Drop()
        assert len(t) == 0

    def test_add_lookup_remove(self):
        t = ForwardingTable()
        t.add(1, SetEgressPort(2))
        t.add(3, SendToCpu())
        t.add(4, Drop())
        assert t.lookup(1) == SetEgressPort(2)
        assert t.lookup(3) == SendToCpu()
        assert t.lookup(4) == Drop()
        assert len(t) == 3
        t.remove(1)
        assert t.lookup(1) == Drop()
        assert t.entries() == {3: SendToCpu(), 4: Drop()}

    @pytest.mark.parametrize("port", [-1, 64, CPU_PORT, RECIRC_PORTS[0]])
    def test_reserved_or_out_of_range_ingress_rejected(self, port):
        with pytest.raises(ConfigError):
            ForwardingTable().add(port, SetEgressPort(2))

    @pytest.mark.parametrize("port", [64, CPU_PORT, *RECIRC_PORTS])
    def test_reserved_egress_rejected(self, port):
        with pytest.raises(ConfigError):
            ForwardingTable().add(1, SetEgressPort(port))


class TestTokenBucket:
    def test_burst_then_starvation(self):
        b = TokenBucket(rate=10.0, burst=2.0)
        assert b.try_take(1.0, 0.0)
        assert b.try_take(1.0, 0.0)
        assert not b.try_take(1.0, 0.0)

    def test_refill_with_time(self):
        b = TokenBucket(rate=10.0, burst=2.0)
        assert b.try_take(2.0, 0.0)
        assert not b.try_take(1.0, 0.05)  # only 0.5 tokens back
        assert b.try_take(1.0, 0.1)       # a full token at 100 ms

    def test_refill_caps_at_burst(self):
        b = TokenBucket(rate=1000.0, burst=3.0)
        assert b.try_take(3.0, 0.0)
        assert not b.try_take(3.5, 100.0)
        assert b.try_take(3.0, 100.0)


class TestIngress:
    def test_unparseable_frame_drops_with_parse_error(self, kat_tables):
        p = make_pipeline(kat_tables)
        assert p.ingress(b"\x00" * 13, 1) == Dropped("parse_error")

    def test_unmatched_port_drops_with_no_match(self, kat_tables):
        p = make_pipeline(kat_tables)
        assert p.ingress(roce_frame(), 5) == Dropped("no_match")

    def test_explicit_drop_action_reports_no_match(self, kat_tables):
        p = make_pipeline(kat_tables, routes=((1, Drop()),))
        assert p.ingress(roce_frame(), 1) == Dropped("no_match")

    def test_cpu_action_punts_serialized_frame(self, kat_tables):
        p = make_pipeline(kat_tables, routes=((1, SendToCpu()),))
        frame = roce_frame()
        event = p.ingress(frame, 1)
        assert isinstance(event, ToCpu)
        assert event.frame == frame

    def test_opaque_frame_forwards_unencrypted(self, kat_tables):
        p = make_pipeline(kat_tables)
        frame = bytes(12) + b"\x08\x06" + bytes(28)
        event = p.ingress(frame, 1)
        assert isinstance(event, Egressed)
        assert not event.encrypted
        assert event.port == 2
        assert event.frame == frame
        assert event.passes == 0

    def test_partial_tail_forwards_unencrypted(self, kat_tables):
        p = make_pipeline(kat_tables)
        base = build_udp_packet(PacketSpec(payload=bytes(32)))
        frame = pkt.serialize(replace(base, blocks=base.blocks[:1],
                                      tail=bytes(5)))
        event = p.ingress(frame, 1)
        assert isinstance(event, Egressed)
        assert not event.encrypted

    def test_oversized_payload_drops(self, kat_tables):
        p = make_pipeline(kat_tables)
        frame = udp_frame(bytes(144))  # 9 blocks > max 8
        assert p.ingress(frame, 1) == Dropped("over_max_blocks")

    def test_256_byte_payload_drops(self, kat_tables):
        p = make_pipeline(kat_tables)
        assert p.ingress(udp_frame(bytes(256)), 1) == Dropped("over_max_blocks")

    def test_encryptable_packet_becomes_a_flight(self, kat_tables):
        p = make_pipeline(kat_tables)
        event = p.ingress(udp_frame(bytes(range(64))), 1)
        assert isinstance(event, Flight)
        assert event.total_blocks == 4
        assert event.action == SetEgressPort(2)
        assert event.passes == 0

    def test_pre_parsed_packets_are_accepted(self, kat_tables):
        p = make_pipeline(kat_tables)
        packet = build_udp_packet(PacketSpec(payload=bytes(16)))
        assert isinstance(p.ingress(packet, 1), Flight)


class TestPassAccounting:
    @pytest.mark.parametrize("blocks", [1, 2, 4, 8])
    def test_one_round_per_pass_needs_10n_passes(self, kat_tables, blocks):
        p = make_pipeline(kat_tables)
        event = p.process(udp_frame(bytes(16 * blocks)), 1)
        assert isinstance(event, Egressed)
        assert event.passes == 10 * blocks
        assert p.stats.recirculations == 10 * blocks

    @pytest.mark.parametrize("rpp,per_block", [(2, 5), (3, 4), (5, 2), (10, 1)])
    def test_more_rounds_per_pass_needs_fewer(self, kat_tables, rpp, per_block):
        cfg = PipelineConfig(rounds_per_pass=rpp)
        p = make_pipeline(kat_tables, config=cfg)
        event = p.process(udp_frame(bytes(32)), 1)
        assert event.passes == 2 * per_block

    def test_ciphertext_is_independent_of_pass_grouping(self, kat_tables):
        frames = {}
        for rpp in (1, 2, 3, 5, 10):
            p = make_pipeline(kat_tables,
                              config=PipelineConfig(rounds_per_pass=rpp))
            event = p.process(udp_frame(bytes(range(64))), 1)
            frames[rpp] = event.frame
        assert len(set(frames.values())) == 1

    def test_flights_alternate_recirc_ports(self, kat_tables):
        p = make_pipeline(kat_tables)
        flight = p.ingress(udp_frame(bytes(16)), 1)
        seen = []
        for _ in range(9):
            seen.append(flight.recirc_port)
            flight = p.recirculate_step(flight)
            assert isinstance(flight, Flight)
        assert seen == [RECIRC_PORTS[i % 2] for i in range(9)]


class TestEncryptionPath:
    def test_udp_payload_is_ecb_of_plaintext(self, kat_tables):
        payload = bytes(range(128))
        p = make_pipeline(kat_tables)
        event = p.process(udp_frame(payload), 1)
        out = pkt.parse(event.frame)
        assert out.payload == encrypt_ecb(KEY, payload)
        assert out.payload != payload

    def test_roce_egress_has_fresh_valid_icrc(self, kat_tables):
        p = make_pipeline(kat_tables)
        event = p.process(roce_frame(32), 1)
        out = pkt.parse(event.frame)
        assert out.kind == "roce"
        assert pkt.verify_icrc(out)
        assert out.payload == encrypt_ecb(KEY, bytes(range(32)))

    def test_egress_carries_no_recirc_header(self, kat_tables):
        p = make_pipeline(kat_tables)
        ingress_frame = roce_frame(32)
        event = p.process(ingress_frame, 1)
        out = pkt.parse(event.frame)
        assert out.recirc is None
        # headers untouched: same wire length, same header bytes
        assert len(event.frame) == len(ingress_frame)
        assert event.frame[:54] == ingress_frame[:54]

    def test_headers_except_icrc_are_preserved(self, kat_tables):
        p = make_pipeline(kat_tables)
        spec = PacketSpec(payload=bytes(range(48)), ttl=17,
                          identification=77, qp=0x99, psn=1234)
        event = p.process(pkt.serialize(build_roce_packet(spec)), 1)
        out = pkt.parse(event.frame)
        assert out.ipv4.ttl == 17
        assert out.ipv4.identification == 77
        assert out.roce.bth.dst_qp == 0x99
        assert out.roce.bth.psn == 1234

    def test_egress_port_is_latched_at_ingress(self, kat_tables):
        p = make_pipeline(kat_tables)
        flight = p.ingress(udp_frame(bytes(16)), 1)
        # rule changes mid-flight must not affect packets already matched
        p.forwarding.add(1, SetEgressPort(7))
        event = flight
        while isinstance(event, Flight):
            event = p.recirculate_step(event)
        assert event.port == 2

    def test_mismatched_tables_raise_in_verify_mode(self, kat_tables):
        tampered_schedule = expand_key(KEY)
        keys = list(tampered_schedule.round_keys)
        keys[10] = bytes(16)
        bad_tables = build_scrambled_tables(
            type(tampered_schedule)(tuple(keys)))
        p = make_pipeline(bad_tables, key=KEY)
        with pytest.raises(CryptoMismatchError):
            p.process(udp_frame(bytes(16)), 1)

    def test_verification_can_be_disabled(self, kat_tables):
        p = make_pipeline(kat_tables, key=None)
        assert isinstance(p.process(udp_frame(bytes(16)), 1), Egressed)


class TestMidFlightWireFormat:
    def test_recirc_frame_reflects_progress(self, kat_tables):
        p = make_pipeline(kat_tables)
        payload = bytes(range(32))
        flight = p.ingress(udp_frame(payload), 1)
        trace = oracle.table_pass_trace(oracle.KAT_KEY, payload[:16])
        for step in range(1, 4):
            flight = p.recirculate_step(flight)
            wire = flight_wire_frame(flight)
            mid = pkt.parse(wire, recirc=True)
            assert mid.recirc.round == step
            assert mid.recirc.block == 0
            assert mid.recirc.total_blocks == 2
            # first block is mid-encryption, second still plaintext
            assert mid.blocks[0] == trace[step]
            assert mid.blocks[1] == payload[16:]

    def test_block_rollover_resets_round_counter(self, kat_tables):
        p = make_pipeline(kat_tables)
        flight = p.ingress(udp_frame(bytes(32)), 1)
        for _ in range(10):
            flight = p.recirculate_step(flight)
        assert isinstance(flight, Flight)
        mid = pkt.parse(flight_wire_frame(flight), recirc=True)
        assert mid.recirc.block == 1
        assert mid.recirc.round == 0


class TestCapacity:
    def test_uncontended_run_has_no_drops(self, kat_tables):
        p = make_pipeline(kat_tables)
        frame = udp_frame(bytes(16))
        # 100 packets at 1 kpps: well under both caps
        stats = p.run((i / 1000.0, frame, 1) for i in range(100))
        assert stats.drop_total == 0
        assert stats.source_suppressed == 0
        assert stats.egress_total == 100
        assert stats.recirculations == 1000

    def test_double_demand_drops_about_half(self, kat_tables):
        # 1 block/packet, 10 passes each; recirc sustains 10k passes/s.
        # Offering 2000 pps demands 20k passes/s: every other packet
        # must fail its budget reservation once the burst drains.
        cfg = PipelineConfig(source_pps_cap=1e9, source_burst=1e9,
                             recirc_pass_rate=10_000.0, recirc_burst=10.0)
        p = make_pipeline(kat_tables, config=cfg)
        frame = udp_frame(bytes(16))
        stats = p.run((i / 2000.0, frame, 1) for i in range(2000))
        drops = stats.drops_by_reason["capacity_exceeded"]
        assert abs(drops - 1000) <= 2
        assert stats.conserved

    def test_capacity_drop_consumes_no_passes(self, kat_tables):
        cfg = PipelineConfig(source_pps_cap=1e9, source_burst=1e9,
                             recirc_pass_rate=10_000.0, recirc_burst=10.0)
        p = make_pipeline(kat_tables, config=cfg)
        frame = udp_frame(bytes(16))
        stats = p.run((0.0, frame, 1) for _ in range(5))
        # burst covers exactly one packet at t=0; the rest drop whole
        assert stats.egress_total == 1
        assert stats.drops_by_reason["capacity_exceeded"] == 4
        assert stats.recirculations == 10

    def test_source_cap_suppresses_before_ingress(self, kat_tables):
        cfg = PipelineConfig(source_pps_cap=1000.0, source_burst=1.0,
                             recirc_pass_rate=1e9, recirc_burst=1e9)
        p = make_pipeline(kat_tables, config=cfg)
        frame = udp_frame(bytes(16))
        stats = p.run((i / 2000.0, frame, 1) for i in range(200))
        assert abs(stats.source_suppressed - 100) <= 2
        # suppressed packets never reached ingress: conservation holds
        # over admitted packets only
        assert stats.ingress_total == 200 - stats.source_suppressed
        assert stats.conserved
        assert stats.drop_total == 0

    def test_rates_off_ignores_both_buckets(self, kat_tables):
        cfg = PipelineConfig(source_pps_cap=1.0, source_burst=1.0,
                             recirc_pass_rate=1.0, recirc_burst=1.0)
        p = make_pipeline(kat_tables, config=cfg)
        frame = udp_frame(bytes(16))
        stats = p.run(((0.0, frame, 1) for _ in range(50)),
                      enforce_rates=False)
        assert stats.egress_total == 50
        assert stats.drop_total == 0

    def test_empty_workload(self, kat_tables):
        p = make_pipeline(kat_tables)
        stats = p.run([])
        assert stats.ingress_total == 0
        assert stats.egress_total == 0
        assert stats.conserved


class TestStats:
    def test_per_port_counters(self, kat_tables):
        p = make_pipeline(kat_tables, capture=True,
                          routes=((1, SetEgressPort(2)), (3, SendToCpu())))
        f1 = udp_frame(bytes(16))
        f2 = roce_frame(32)
        p.process(f1, 1)
        p.process(f2, 3)
        assert p.stats.rx_packets[1] == 1
        assert p.stats.rx_packets[3] == 1
        assert p.stats.rx_octets[1] == len(f1)
        assert p.stats.rx_octets[3] == len(f2)
        assert p.stats.tx_packets[2] == 1
        assert p.stats.tx_octets[2] == len(f1)
        assert p.stats.cpu_packets == 1
        assert p.stats.cpu_octets == len(f2)
        assert p.cpu_frames == [f2]
        assert p.stats.payload_octets_tx == 16

    def test_summary_lists_drop_reasons(self, kat_tables):
        p = make_pipeline(kat_tables)
        p.process(b"\x00" * 13, 1)
        p.process(udp_frame(bytes(16)), 9)
        s = p.stats.summary()
        assert s["drop.parse_error"] == 1
        assert s["drop.no_match"] == 1
        assert s["dropped"] == 2
        assert s["rx"] == 2

    def test_reset_state_clears_everything(self, kat_tables):
        p = make_pipeline(kat_tables, capture=True)
        p.process(udp_frame(bytes(16)), 1)
        assert p.stats.ingress_total == 1
        p.reset_state()
        assert p.stats.ingress_total == 0
        assert p.stats.recirculations == 0
        assert p.egress_frames == []
        assert p.cpu_frames == []

    def test_capture_flag_gates_egress_recording(self, kat_tables):
        recording = make_pipeline(kat_tables, capture=True)
        silent = make_pipeline(kat_tables, capture=False)
        frame = udp_frame(bytes(16))
        recording.process(frame, 1)
        silent.process(frame, 1)
        assert len(recording.egress_frames) == 1
        assert silent.egress_frames == []


@st.composite
def workloads(draw):
    """Mixed traffic over a fixed 4-route table, any port 0..7."""
    n = draw(st.integers(min_value=0, max_value=30))
    items = []
    for i in range(n):
        kind = draw(st.sampled_from(
            ["udp16", "udp64", "roce32", "oversize", "partial", "opaque",
             "garbage"]))
        port = draw(st.integers(min_value=0, max_value=7))
        items.append((kind, port, i))
    return items


_FRAME_CACHE = {}


def _workload_frame(kind: str, i: int) -> bytes:
    key = (kind, i)
    if key not in _FRAME_CACHE:
        if kind == "udp16":
            f = udp_frame(bytes(16), identification=i)
        elif kind == "udp64":
            f = udp_frame(bytes(range(64)), identification=i)
        elif kind == "roce32":
            f = pkt.serialize(build_roce_packet(
                PacketSpec(payload=bytes(range(32)), psn=i)))
        elif kind == "oversize":
            f = udp_frame(bytes(160), identification=i)
        elif kind == "partial":
            base = build_udp_packet(PacketSpec(payload=bytes(32),
                                               identification=i))
            f = pkt.serialize(replace(base, blocks=base.blocks[:1],
                                      tail=bytes(3)))
        elif kind == "opaque":
            f = bytes(12) + b"\x08\x06" + bytes(i % 40)
        else:
            f = bytes(i % 13)  # runt: parse error
        _FRAME_CACHE[key] = f
    return _FRAME_CACHE[key]


class TestConservation:
    @given(workloads())
    @settings(max_examples=40, deadline=None)
    def test_every_admitted_packet_is_accounted_once(self, kat_tables, items):
        p = make_pipeline(kat_tables, key=None, routes=(
            (1, SetEgressPort(2)), (2, SetEgressPort(1)),
            (3, SendToCpu()), (4, Drop())))
        for kind, port, i in items:
            p.process(_workload_frame(kind, i), port)
        s = p.stats
        assert s.ingress_total == len(items)
        assert s.conserved
        assert s.egress_total + s.cpu_packets + s.drop_total == len(items)

    def test_overload_still_conserves(self, kat_tables):
        # 64 B = 4 blocks = 40 passes/packet; burst must cover at least
        # one packet or nothing ever completes
        cfg = PipelineConfig(source_pps_cap=5000.0, source_burst=4.0,
                             recirc_pass_rate=40_000.0, recirc_burst=80.0)
        p = make_pipeline(kat_tables, key=None, config=cfg)
        frame = udp_frame(bytes(64))
        stats = p.run((i / 10_000.0, frame, 1) for i in range(500))
        assert stats.conserved
        assert stats.source_suppressed > 0
        assert stats.drops_by_reason["capacity_exceeded"] > 0
        assert stats.egress_total > 0


class TestDeterminism:
    def test_identical_runs_produce_identical_results(self, kat_tables):
        cfg = PipelineConfig(source_pps_cap=5000.0,
                             recirc_pass_rate=50_000.0)
        rng = random.Random(42)
        arrivals = [(i / 8000.0,
                     udp_frame(rng.randbytes(16) + bytes(16)), 1)
                    for i in range(200)]
        p = make_pipeline(kat_tables, key=None, config=cfg, capture=True)
        first = p.run(arrivals)
        first_summary = dict(first.summary())
        first_frames = list(p.egress_frames)
        second = p.run(arrivals)
        assert second.summary() == first_summary
        assert p.egress_frames == first_frames


class TestConfigFile:
    def test_full_round_trip(self, tmp_path):
        text = """\
# capacity calibration
max_blocks = 8
rounds_per_pass = 2
source_pps_cap = 12500    # packets per second
recirc_pass_rate = 640000
recirc_burst = 64

key = 000102030405060708090a0b0c0d0e0f
traffic_blocks = 4

port 1 -> 2
port 3 -> cpu
port 5 -> drop
"""
        path = tmp_path / "switch.conf"
        path.write_text(text)
        fc = read_config_file(path)
        assert fc.pipeline.max_blocks == 8
        assert fc.pipeline.rounds_per_pass == 2
        assert fc.pipeline.source_pps_cap == 12500.0
        assert fc.pipeline.recirc_pass_rate == 640_000.0
        assert fc.pipeline.recirc_burst == 64.0
        assert fc.pipeline.compile_limit_blocks == 24  # default retained
        assert fc.key_hex == "000102030405060708090a0b0c0d0e0f"
        assert fc.traffic_blocks == 4
        assert fc.forwarding.lookup(1) == SetEgressPort(2)
        assert fc.forwarding.lookup(3) == SendToCpu()
        assert fc.forwarding.lookup(5) == Drop()
        validate_config(fc.pipeline, fc.traffic_blocks)

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.conf"
        path.write_text("\n# nothing here\n")
        fc = read_config_file(path)
        assert fc.pipeline == PipelineConfig()
        assert fc.key_hex is None
        assert len(fc.forwarding) == 0

    @pytest.mark.parametrize("line,fragment", [
        ("port 1 2", "port"),
        ("port 1 -> nowhere", "target"),
        ("port x -> 2", "port"),
        ("port 99 -> 2", "front-panel"),
        ("max_blocks", "name = value"),
        ("max_blocks = soon", "bad value"),
        ("key = zz", "hex"),
        ("key = 0011", "hex"),
        ("warp_factor = 9", "unknown"),
    ])
    def test_bad_lines_name_the_line(self, tmp_path, line, fragment):
        path = tmp_path / "bad.conf"
        path.write_text("max_blocks = 8\n" + line + "\n")
        with pytest.raises(ConfigError) as e:
            read_config_file(path)
        assert fragment in str(e.value)
        if "front-panel" not in fragment:
            assert "line 2" in str(e.value)
