#!/usr/bin/env python3
"""Plot the sweep CSVs produced by run_sweep.py.

Left panel: sustainable goodput vs payload size (switch model, plus the
single-core host cipher series when sweep.cpu.csv exists).  Right
panel: the rx-vs-tx saturation curve for the largest payload, which
shows where the recirculation budget runs out.
"""

import argparse
import csv
import sys
from pathlib import Path

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("plotting needs matplotlib (pip install matplotlib)")


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", help="main sweep CSV (from run_sweep.py)")
    ap.add_argument("--out", default="sweep.png")
    args = ap.parse_args()

    main_path = Path(args.csv)
    rows = read_rows(main_path)
    if not rows:
        sys.exit(f"{main_path} has no data rows")
    sizes = [int(r["payload_bytes"]) for r in rows]
    goodput = [float(r["rx_bps"]) / 1e6 for r in rows]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))

    ax1.plot(sizes, goodput, "o-", label="switch model")
    cpu_path = main_path.with_suffix(".cpu.csv")
    if cpu_path.exists():
        cpu_rows = read_rows(cpu_path)
        ax1.plot([int(r["payload_bytes"]) for r in cpu_rows],
                 [float(r["cpu_bps"]) / 1e6 for r in cpu_rows],
                 "s--", label="host cipher (1 core)")
    ax1.set_xlabel("payload size (bytes)")
    ax1.set_ylabel("sustainable goodput (Mbit/s)")
    ax1.set_xscale("log", base=2)
    ax1.set_xticks(sizes, [str(s) for s in sizes])
    ax1.legend()
    ax1.grid(True, alpha=0.3)

    rxtx_path = main_path.with_suffix(".rxtx.csv")
    if rxtx_path.exists():
        points = read_rows(rxtx_path)
        tx = [float(r["tx_bps"]) / 1e6 for r in points]
        rx = [float(r["rx_bps"]) / 1e6 for r in points]
        ax2.plot(tx, rx, "o-", label=f"{points[0]['payload_bytes']} B payload")
        lim = max(tx) * 1.05
        ax2.plot([0, lim], [0, lim], ":", color="gray", label="lossless")
        ax2.set_xlabel("offered (Mbit/s)")
        ax2.set_ylabel("delivered (Mbit/s)")
        ax2.legend()
        ax2.grid(True, alpha=0.3)
    else:
        ax2.set_axis_off()

    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
