"""Minimal classic-pcap reader/writer (no libpcap dependency).

Writes the original (non-ng) file format: 24-byte global header with
magic 0xA1B2C3D4, version 2.4, linktype 1 (Ethernet), little-endian.
Reading accepts either byte order and rejects nanosecond-resolution
magics, which this toolkit never produces.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Iterator
from pathlib import Path

from . import packet as pkt

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1
LINKTYPE_ETHERNET = 1
_GLOBAL_FMT = "IHHiIII"
_RECORD_FMT = "IIII"


class PcapFormatError(ValueError):
    pass


def write_bytes(path: str | Path, frames: Iterable[bytes],
                *, snaplen: int = 65535) -> int:
    """Write raw Ethernet frames; returns the number of records written."""
    count = 0
    with open(path, "wb") as f:
        f.write(struct.pack("<" + _GLOBAL_FMT, PCAP_MAGIC, 2, 4, 0, 0,
                            snaplen, LINKTYPE_ETHERNET))
        for i, frame in enumerate(frames):
            # Synthetic capture clock: 1 microsecond per packet.
            f.write(struct.pack("<" + _RECORD_FMT, 0, i,
                                len(frame), len(frame)))
            f.write(frame)
            count += 1
    return count


def read_bytes(path: str | Path) -> Iterator[bytes]:
    """Yield raw Ethernet frames from a classic pcap file."""
    with open(path, "rb") as f:
        header = f.read(24)
        if len(header) < 24:
            raise PcapFormatError("truncated global header")
        magic = struct.unpack("<I", header[:4])[0]
        if magic == PCAP_MAGIC:
            endian = "<"
        elif magic == PCAP_MAGIC_SWAPPED:
            endian = ">"
        else:
            raise PcapFormatError(f"bad magic 0x{magic:08x}")
        _, _, _, _, _, _, linktype = struct.unpack(endian + _GLOBAL_FMT, header)
        if linktype != LINKTYPE_ETHERNET:
            raise PcapFormatError(f"unsupported linktype {linktype}")
        while True:
            rec = f.read(16)
            if not rec:
                return
            if len(rec) < 16:
                raise PcapFormatError("truncated record header")
            _, _, incl_len, orig_len = struct.unpack(endian + _RECORD_FMT, rec)
            if incl_len != orig_len:
                raise PcapFormatError("partial captures are not supported")
            frame = f.read(incl_len)
            if len(frame) < incl_len:
                raise PcapFormatError("truncated packet record")
            yield frame


def write(path: str | Path, packets: Iterable[pkt.Packet]) -> int:
    return write_bytes(path, (pkt.serialize(p) for p in packets))


def read(path: str | Path) -> Iterator[pkt.Packet]:
    for frame in read_bytes(path):
        yield pkt.parse(frame)
