#!/usr/bin/env python3
"""Run the payload-size throughput sweep and write plot-ready CSVs.

This is the headline experiment: for each payload size, binary-search
the highest offered rate the modeled switch sustains with loss <= the
cap, and record goodput.  Three files land next to --csv:

    sweep.csv        goodput vs payload size
    sweep.cpu.csv    switch goodput vs single-core host cipher goodput
    sweep.rxtx.csv   rx vs tx saturation curve for the largest payload

With the default calibration the full run takes about a minute.
"""

import argparse
import time
from pathlib import Path

from switchcrypt.aes_core import Aes128Key, expand_key
from switchcrypt.pipeline import (ForwardingTable, Pipeline, PipelineConfig,
                                  SetEgressPort, read_config_file)
from switchcrypt.traffic import TrafficSpec, config_digest, sweep_report
from switchcrypt.ttables import build_scrambled_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", default="sweep.csv", help="main output path")
    ap.add_argument("--payloads", default="16,32,64,128",
                    help="comma-separated payload sizes (16-byte multiples)")
    ap.add_argument("--kind", choices=("udp", "roce"), default="roce")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--loss-cap", type=float, default=1e-5)
    ap.add_argument("--key", default="00" * 16, help="AES key, hex")
    ap.add_argument("--config", help="optional pipeline config file")
    ap.add_argument("--no-cpu", action="store_true",
                    help="skip the host-cipher comparison series")
    args = ap.parse_args()

    key = Aes128Key(bytes.fromhex(args.key))
    tables = build_scrambled_tables(expand_key(key))
    config = PipelineConfig()
    if args.config:
        config = read_config_file(args.config).pipeline
    fwd = ForwardingTable()
    fwd.add(1, SetEgressPort(2))
    pipeline = Pipeline(tables, fwd, config)

    payloads = [int(p) for p in args.payloads.split(",")]
    seeds = tuple(int(s) for s in args.seeds.split(","))
    out = Path(args.csv)
    out.parent.mkdir(parents=True, exist_ok=True)

    print(f"config digest {config_digest(config)}  "
          f"source {config.source_pps_cap:.0f} pps  "
          f"recirc {config.recirc_pass_rate:.0f} passes/s")
    started = time.perf_counter()
    results = sweep_report(
        pipeline, payloads, out,
        template=TrafficSpec(kind=args.kind, rate_pps=1.0, count=1),
        seeds=seeds, loss_cap=args.loss_cap,
        cpu_key=None if args.no_cpu else key)
    elapsed = time.perf_counter() - started

    for r in results:
        tag = " (range-limited)" if r.range_limited else ""
        print(f"payload={r.payload_bytes:>3}B  offered={r.offered_bps:>12.0f}bps"
              f"  goodput={r.goodput_bps:>12.0f}bps  loss={r.loss_fraction:.2e}"
              f"{tag}")
    print(f"wrote {out} (+ .cpu.csv, .rxtx.csv) in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
