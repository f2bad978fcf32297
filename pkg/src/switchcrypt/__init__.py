"""Deterministic model of in-switch AES payload encryption.

A programmable-pipeline switch cannot run AES the conventional way, but
it can do table lookups, byte permutations, and XOR — so the cipher is
restructured into per-round key-folded lookup tables and each packet is
recirculated through the pipeline once per round.  This package models
that data plane end to end: the reference cipher, the table synthesis,
UDP/RoCEv2 packet handling, the capacity-constrained pipeline, a
control-plane protocol for key upload, and the benchmark harness.
"""

from .aes_core import Aes128Key, RoundKeySchedule, encrypt_block, encrypt_ecb, expand_key
from .control_plane import ControlServer, install_key, serve
from .packet import Packet, PacketSpec, build_roce_packet, build_udp_packet, parse, serialize
from .pcapio import read as pcap_read, read_bytes as pcap_read_bytes
from .pcapio import write as pcap_write, write_bytes as pcap_write_bytes
from .pipeline import (ForwardingTable, Pipeline, PipelineConfig,
                       PipelineStats, validate_config)
from .traffic import (BenchmarkReport, TrafficSpec, find_max_sustainable,
                      generate, measure, sweep_report)
from .ttables import ScrambledTables, apply_round, build_scrambled_tables, encrypt_block_tabular

__all__ = [
    "Aes128Key", "RoundKeySchedule", "encrypt_block", "encrypt_ecb",
    "expand_key", "ControlServer", "install_key", "serve", "Packet",
    "PacketSpec", "build_roce_packet", "build_udp_packet", "parse",
    "serialize", "pcap_read", "pcap_read_bytes", "pcap_write",
    "pcap_write_bytes", "ForwardingTable", "Pipeline", "PipelineConfig",
    "PipelineStats", "validate_config", "BenchmarkReport", "TrafficSpec",
    "find_max_sustainable", "generate", "measure", "sweep_report",
    "ScrambledTables", "apply_round", "build_scrambled_tables",
    "encrypt_block_tabular",
]
