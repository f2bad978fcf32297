"""Command-line front end.

Subcommands: encrypt (offline capture transform), serve (control-plane
server around a live pipeline), bench (single measurement), sweep
(payload-size sweep with CSV/plot series), verify (check an encrypted
capture against the straight-line cipher), keygen (new key file).

Keys always live in hex files, never on the command line, so they stay
out of shell history.  Exit codes: 0 success, 1 verification mismatch,
2 configuration/key/file errors or bad usage.
"""

from __future__ import annotations

import argparse
import secrets
import sys
from pathlib import Path
from random import Random

from . import control_plane, packet as pkt, pcapio, traffic
from .aes_core import Aes128Key, encrypt_ecb, expand_key
from .pipeline import (ConfigError, Egressed, FileConfig, ForwardingTable,
                       Pipeline, PipelineConfig, SetEgressPort,
                       read_config_file, validate_config)
from .ttables import build_scrambled_tables

ZERO_KEY = Aes128Key(bytes(16))


class CliError(Exception):
    pass


def _read_key_file(path: str) -> Aes128Key:
    try:
        text = Path(path).read_text().split()
    except OSError as exc:
        raise CliError(f"cannot read key file: {exc}") from exc
    if len(text) != 1:
        raise CliError(f"key file {path} must hold one hex string")
    try:
        key = bytes.fromhex(text[0])
    except ValueError:
        raise CliError(f"key file {path} is not valid hex") from None
    if len(key) != 16:
        raise CliError(f"key must be 16 octets, got {len(key)}")
    return Aes128Key(key)


def _load_file_config(path: str | None) -> FileConfig:
    if path is None:
        return FileConfig(pipeline=PipelineConfig(),
                          forwarding=ForwardingTable())
    try:
        return read_config_file(path)
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from exc


def _resolve_key(key_path: str | None, file_cfg: FileConfig) -> Aes128Key:
    """--key file wins over a config-file key; fall back to all-zero."""
    if key_path is not None:
        return _read_key_file(key_path)
    if file_cfg.key_hex is not None:
        return Aes128Key(bytes.fromhex(file_cfg.key_hex))
    return ZERO_KEY


def _build_pipeline(args, *, default_route: bool,
                    reference_key: bool = False,
                    capture: bool = False) -> tuple[Pipeline, FileConfig]:
    file_cfg = _load_file_config(getattr(args, "config", None))
    validate_config(file_cfg.pipeline, traffic_blocks=file_cfg.traffic_blocks)
    key = _resolve_key(getattr(args, "key", None), file_cfg)
    tables = build_scrambled_tables(expand_key(key))
    forwarding = file_cfg.forwarding
    if default_route and len(forwarding) == 0:
        forwarding.add(1, SetEgressPort(2))
    pipe = Pipeline(tables, forwarding, file_cfg.pipeline,
                    reference_key=key if reference_key else None,
                    capture=capture)
    return pipe, file_cfg


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


# --------------------------------------------------------------------------
# Subcommands

def cmd_encrypt(args) -> int:
    pipe, _ = _build_pipeline(args, default_route=True, reference_key=True,
                              capture=True)
    counts = {"packets": 0, "encrypted": 0, "forwarded_plain": 0}
    for frame in pcapio.read_bytes(args.infile):
        counts["packets"] += 1
        event = pipe.process(frame, in_port=1)
        if isinstance(event, Egressed):
            counts["encrypted" if event.encrypted else "forwarded_plain"] += 1
    pcapio.write_bytes(args.outfile, pipe.egress_frames)
    print(f"packets: {counts['packets']}  encrypted: {counts['encrypted']}  "
          f"forwarded-plain: {counts['forwarded_plain']}  "
          f"dropped: {pipe.stats.drop_total}")
    for reason in sorted(pipe.stats.drops_by_reason):
        print(f"  drop.{reason}: {pipe.stats.drops_by_reason[reason]}")
    return 0


def cmd_serve(args) -> int:
    host, _, port_text = args.listen.rpartition(":")
    if not host:
        raise CliError("--listen must be host:port")
    try:
        port = int(port_text)
    except ValueError:
        raise CliError(f"bad port {port_text!r}") from None
    pipe, _ = _build_pipeline(args, default_route=False)
    control_plane.serve(pipe, host, port)
    return 0


def cmd_bench(args) -> int:
    pipe, _ = _build_pipeline(args, default_route=True)
    rate = {"rate_pps": float(args.rate)} if args.rate_bps is None \
        else {"rate_bps": float(args.rate_bps)}
    spec = traffic.TrafficSpec(
        kind=args.kind, payload_bytes=args.payload, burst=args.burst,
        count=args.count, duration_s=args.duration, seed=args.seed,
        **rate)
    report = traffic.measure(pipe, spec)
    print(f"payload={spec.payload_bytes}B kind={spec.kind} "
          f"offered={spec.pps:.1f}pps tx={report.tx_packets} "
          f"rx={report.rx_packets} loss={report.loss_fraction:.9f} "
          f"goodput={report.throughput_bps:.0f}bps")
    for reason, n in sorted(report.drops_by_reason.items()):
        print(f"  drop.{reason}: {n}")
    if args.csv:
        traffic._write_csv(Path(args.csv), [
            "payload_bytes", "kind", "offered_pps", "tx_packets",
            "rx_packets", "loss", "throughput_bps", "seed", "config_digest",
        ], [{
            "payload_bytes": str(spec.payload_bytes),
            "kind": spec.kind,
            "offered_pps": f"{spec.pps:.3f}",
            "tx_packets": str(report.tx_packets),
            "rx_packets": str(report.rx_packets),
            "loss": f"{report.loss_fraction:.9f}",
            "throughput_bps": f"{report.throughput_bps:.3f}",
            "seed": str(spec.seed),
            "config_digest": traffic.config_digest(pipe.config),
        }])
    return 0


def cmd_sweep(args) -> int:
    pipe, file_cfg = _build_pipeline(args, default_route=True)
    key = _resolve_key(args.key, file_cfg)
    template = traffic.TrafficSpec(kind=args.kind, rate_pps=1.0, count=1,
                                   burst=args.burst)
    results = traffic.sweep_report(
        pipe, args.payloads, args.csv, template=template,
        seeds=tuple(args.seeds), loss_cap=args.loss_cap, cpu_key=key)
    for r in results:
        tag = " (range-limited)" if r.range_limited else ""
        print(f"payload={r.payload_bytes}B sustainable={r.goodput_bps:.0f}bps"
              f" loss={r.loss_fraction:.9f}{tag}")
    return 0


def cmd_verify(args) -> int:
    key = _read_key_file(args.key)
    originals = list(pcapio.read_bytes(args.infile))
    encrypted = list(pcapio.read_bytes(args.encrypted))
    if not originals and not encrypted:
        print("warning: both captures are empty", file=sys.stderr)
        return 0
    if len(originals) != len(encrypted):
        print(f"capture sizes differ: {len(originals)} original vs "
              f"{len(encrypted)} encrypted", file=sys.stderr)
        return 1
    for i, (alpha, beta) in enumerate(zip(originals, encrypted)):
        p = pkt.parse(alpha)
        q = pkt.parse(beta)
        if not p.encryptable:
            if alpha != beta:
                print(f"packet {i}: non-encryptable packet was modified",
                      file=sys.stderr)
                return 1
            continue
        expected = encrypt_ecb(key, p.payload)
        if q.payload != expected:
            print(f"packet {i}: ciphertext does not match the reference "
                  f"cipher", file=sys.stderr)
            return 1
        if q.roce is not None and not pkt.verify_icrc(q):
            print(f"packet {i}: bad ICRC on encrypted packet",
                  file=sys.stderr)
            return 1
    print(f"verified {len(originals)} packets")
    return 0


def cmd_keygen(args) -> int:
    key = Random(args.seed).randbytes(16) if args.seed is not None \
        else secrets.token_bytes(16)
    path = Path(args.out)
    path.write_text(key.hex() + "\n")
    tables = build_scrambled_tables(expand_key(Aes128Key(key)))
    print(f"wrote {path} (key id {tables.key_id})")
    return 0


# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchcrypt",
        description="Switch data-plane AES model: encrypt captures, serve "
                    "the control plane, and run capacity benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encrypt", help="encrypt a pcap through the pipeline")
    p.add_argument("--in", dest="infile", required=True, metavar="PCAP")
    p.add_argument("--out", dest="outfile", required=True, metavar="PCAP")
    p.add_argument("--key", required=True, metavar="HEXFILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("serve", help="run the control-plane server")
    p.add_argument("--listen", default=f"127.0.0.1:{control_plane.DEFAULT_PORT}",
                   metavar="HOST:PORT")
    p.add_argument("--key", metavar="HEXFILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="one benchmark run")
    p.add_argument("--payload", type=int, default=16, metavar="BYTES")
    rate = p.add_mutually_exclusive_group()
    rate.add_argument("--rate", type=float, default=1000.0, metavar="PPS")
    rate.add_argument("--rate-bps", type=float, metavar="BPS",
                      help="offered wire bits/second instead of --rate")
    p.add_argument("--burst", type=int, default=1)
    length = p.add_mutually_exclusive_group()
    length.add_argument("--count", type=int, default=None)
    length.add_argument("--duration", type=float, default=None,
                        metavar="SECONDS")
    p.add_argument("--kind", choices=("udp", "roce"), default="roce")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key", metavar="HEXFILE")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="payload sweep with CSV series")
    p.add_argument("--payloads", type=_int_list, default=[16, 32, 64, 128])
    p.add_argument("--csv", required=True, metavar="PATH")
    p.add_argument("--kind", choices=("udp", "roce"), default="roce")
    p.add_argument("--burst", type=int, default=1)
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    p.add_argument("--loss-cap", type=float, default=1e-5)
    p.add_argument("--key", metavar="HEXFILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check ciphertexts against the oracle")
    p.add_argument("--in", dest="infile", required=True, metavar="PCAP")
    p.add_argument("--encrypted", required=True, metavar="PCAP")
    p.add_argument("--key", required=True, metavar="HEXFILE")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("keygen", help="write a fresh key hex file")
    p.add_argument("--out", required=True, metavar="HEXFILE")
    p.add_argument("--seed", type=int, default=None,
                   help="deterministic key for tests; omit for a random one")
    p.set_defaults(func=cmd_keygen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "bench" and args.count is None and args.duration is None:
        args.count = 1000
    try:
        return args.func(args)
    except (CliError, ConfigError, pcapio.PcapFormatError,
            pkt.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
