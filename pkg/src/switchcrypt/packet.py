"""Packet model: Ethernet/IPv4/UDP/RoCEv2 parsing, building, ICRC.

Two packet kinds are first-class: plain UDP (42 header bytes) and
RoCEv2, i.e. UDP destination port 4791 with a 12-byte base transport
header before the payload and a 4-byte invariant CRC after it (16 extra
bytes total).  Payloads are held as whole 16-byte blocks plus an
optional unencryptable partial tail; anything that is not IPv4/UDP is
carried opaquely and can be forwarded but never encrypted.

A 4-byte recirculation-state header may sit immediately before the
payload while a packet loops through the pipeline.  It never appears on
wire packets; the parser only expects it when told the bytes came off a
recirculation port (`recirc=True`), mirroring a parser branching on
ingress-port metadata.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, replace

BLOCK_SIZE = 16
ETHERTYPE_IPV4 = 0x0800
IPPROTO_UDP = 17
ROCE_UDP_PORT = 4791
UD_SEND_ONLY = 0x64

ETH_LEN = 14
IPV4_LEN = 20
UDP_LEN = 8
BTH_LEN = 12
ICRC_LEN = 4
RECIRC_LEN = 4

UDP_HEADER_TOTAL = ETH_LEN + IPV4_LEN + UDP_LEN            # 42
ROCE_HEADER_TOTAL = UDP_HEADER_TOTAL + BTH_LEN + ICRC_LEN  # 58

RECIRC_IN_PROGRESS = 0x01


class ParseError(ValueError):
    """Input bytes could not be parsed; `layer` names where it failed."""

    def __init__(self, layer: str, message: str):
        super().__init__(f"{layer}: {message}")
        self.layer = layer


class SerializeError(ValueError):
    """The header stack is inconsistent and cannot be emitted."""


class NotRoceError(ValueError):
    """Operation requires a RoCEv2 packet."""


def mac_bytes(mac: str) -> bytes:
    return bytes.fromhex(mac.replace(":", ""))


def ip_bytes(ip: str) -> bytes:
    return bytes(int(p) for p in ip.split("."))


@dataclass(frozen=True)
class EthernetHeader:
    dst_mac: bytes
    src_mac: bytes
    ethertype: int

    def pack(self) -> bytes:
        return self.dst_mac + self.src_mac + struct.pack("!H", self.ethertype)


@dataclass(frozen=True)
class Ipv4Header:
    version_ihl: int
    dscp_ecn: int
    total_length: int
    identification: int
    flags_fragment: int
    ttl: int
    protocol: int
    checksum: int
    src_ip: bytes
    dst_ip: bytes

    def pack(self) -> bytes:
        return struct.pack(
            "!BBHHHBBH4s4s",
            self.version_ihl, self.dscp_ecn, self.total_length,
            self.identification, self.flags_fragment, self.ttl,
            self.protocol, self.checksum, self.src_ip, self.dst_ip,
        )


@dataclass(frozen=True)
class UdpHeader:
    src_port: int
    dst_port: int
    length: int
    checksum: int

    def pack(self) -> bytes:
        return struct.pack("!HHHH", self.src_port, self.dst_port,
                           self.length, self.checksum)


@dataclass(frozen=True)
class BthHeader:
    """RoCEv2 base transport header (12 bytes)."""

    opcode: int
    flags: int        # SE | M | PadCnt(2) | TVer(4)
    pkey: int
    resv8a: int
    dst_qp: int       # 24-bit
    ack_flags: int    # AckReq | 7 reserved bits
    psn: int          # 24-bit

    def pack(self) -> bytes:
        return (bytes((self.opcode, self.flags))
                + struct.pack("!H", self.pkey)
                + bytes((self.resv8a,))
                + self.dst_qp.to_bytes(3, "big")
                + bytes((self.ack_flags,))
                + self.psn.to_bytes(3, "big"))

    @classmethod
    def unpack(cls, data: bytes) -> "BthHeader":
        return cls(
            opcode=data[0], flags=data[1],
            pkey=struct.unpack("!H", data[2:4])[0],
            resv8a=data[4],
            dst_qp=int.from_bytes(data[5:8], "big"),
            ack_flags=data[8],
            psn=int.from_bytes(data[9:12], "big"),
        )


@dataclass(frozen=True)
class RoceHeaders:
    """BTH before the payload plus the 32-bit invariant CRC after it."""

    bth: BthHeader
    icrc: int


@dataclass(frozen=True)
class RecircHeader:
    """Encryption-progress state carried only inside the pipeline."""

    round: int         # rounds completed on the current block
    block: int         # index of the payload block currently in flight
    total_blocks: int
    flags: int = RECIRC_IN_PROGRESS

    def __post_init__(self):
        if not 0 <= self.round <= 10:
            raise ValueError("round must be 0..10")
        if self.total_blocks > 0 and not self.block < self.total_blocks:
            raise ValueError("block index must be < total_blocks")

    def pack(self) -> bytes:
        return bytes((self.round, self.block, self.total_blocks, self.flags))

    @classmethod
    def unpack(cls, data: bytes) -> "RecircHeader":
        return cls(round=data[0], block=data[1],
                   total_blocks=data[2], flags=data[3])


@dataclass(frozen=True)
class Packet:
    """A parsed packet: header stack plus block-structured payload.

    blocks holds the whole 16-byte payload blocks; tail holds any
    trailing partial block (UDP/RoCE) or the entire body of an opaque
    packet.  Values are treated as immutable once built.
    """

    eth: EthernetHeader
    ipv4: Ipv4Header | None = None
    udp: UdpHeader | None = None
    roce: RoceHeaders | None = None
    recirc: RecircHeader | None = None
    blocks: tuple[bytes, ...] = ()
    tail: bytes = b""

    @property
    def payload(self) -> bytes:
        return b"".join(self.blocks) + self.tail

    @property
    def kind(self) -> str:
        if self.roce is not None:
            return "roce"
        if self.udp is not None:
            return "udp"
        return "opaque"

    @property
    def encryptable(self) -> bool:
        """Whole-block UDP/RoCE payloads only; partial tails disqualify."""
        return self.udp is not None and len(self.blocks) >= 1 and not self.tail

    @property
    def header_len(self) -> int:
        n = ETH_LEN
        if self.ipv4 is not None:
            n += IPV4_LEN
        if self.udp is not None:
            n += UDP_LEN
        if self.roce is not None:
            n += BTH_LEN + ICRC_LEN
        if self.recirc is not None:
            n += RECIRC_LEN
        return n

    @property
    def wire_len(self) -> int:
        return self.header_len + len(self.payload)


def _ipv4_checksum(header: bytes) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _split_blocks(data: bytes) -> tuple[tuple[bytes, ...], bytes]:
    whole = len(data) - len(data) % BLOCK_SIZE
    blocks = tuple(data[i:i + BLOCK_SIZE] for i in range(0, whole, BLOCK_SIZE))
    return blocks, data[whole:]


def parse(data: bytes, *, recirc: bool = False) -> Packet:
    """Parse wire bytes into a Packet.

    recirc=True tells the parser the bytes arrived on a recirculation
    port and carry a recirculation-state header before the payload.
    """
    if len(data) < ETH_LEN:
        raise ParseError("ethernet", f"need {ETH_LEN} bytes, have {len(data)}")
    eth = EthernetHeader(dst_mac=data[0:6], src_mac=data[6:12],
                         ethertype=struct.unpack("!H", data[12:14])[0])
    if eth.ethertype != ETHERTYPE_IPV4:
        return Packet(eth=eth, tail=data[ETH_LEN:])

    if len(data) < ETH_LEN + IPV4_LEN:
        raise ParseError("ipv4", "truncated header")
    (version_ihl, dscp_ecn, total_length, identification, flags_fragment,
     ttl, protocol, checksum, src_ip, dst_ip) = struct.unpack(
        "!BBHHHBBH4s4s", data[ETH_LEN:ETH_LEN + IPV4_LEN])
    if version_ihl != 0x45:
        raise ParseError("ipv4", f"unsupported version/IHL 0x{version_ihl:02x}")
    if ETH_LEN + total_length != len(data):
        raise ParseError(
            "ipv4", f"total_length {total_length} does not match frame size")
    ipv4 = Ipv4Header(version_ihl, dscp_ecn, total_length, identification,
                      flags_fragment, ttl, protocol, checksum, src_ip, dst_ip)
    body = data[ETH_LEN + IPV4_LEN:]
    if protocol != IPPROTO_UDP:
        return Packet(eth=eth, ipv4=ipv4, tail=body)

    if len(body) < UDP_LEN:
        raise ParseError("udp", "truncated header")
    src_port, dst_port, udp_length, udp_checksum = struct.unpack(
        "!HHHH", body[:UDP_LEN])
    if udp_length != len(body):
        raise ParseError("udp", f"length {udp_length} does not match datagram")
    udp = UdpHeader(src_port, dst_port, udp_length, udp_checksum)
    rest = body[UDP_LEN:]

    if dst_port == ROCE_UDP_PORT:
        need = BTH_LEN + ICRC_LEN + (RECIRC_LEN if recirc else 0)
        if len(rest) < need:
            raise ParseError("bth", "truncated transport header")
        bth = BthHeader.unpack(rest[:BTH_LEN])
        icrc = int.from_bytes(rest[-ICRC_LEN:], "little")
        middle = rest[BTH_LEN:-ICRC_LEN]
        rec = None
        if recirc:
            rec = RecircHeader.unpack(middle[:RECIRC_LEN])
            middle = middle[RECIRC_LEN:]
        blocks, tail = _split_blocks(middle)
        return Packet(eth=eth, ipv4=ipv4, udp=udp,
                      roce=RoceHeaders(bth=bth, icrc=icrc),
                      recirc=rec, blocks=blocks, tail=tail)

    rec = None
    if recirc:
        if len(rest) < RECIRC_LEN:
            raise ParseError("recirc", "truncated recirculation header")
        rec = RecircHeader.unpack(rest[:RECIRC_LEN])
        rest = rest[RECIRC_LEN:]
    blocks, tail = _split_blocks(rest)
    return Packet(eth=eth, ipv4=ipv4, udp=udp, recirc=rec,
                  blocks=blocks, tail=tail)


def serialize(p: Packet) -> bytes:
    """Emit wire bytes; IPv4 checksum and UDP/IP lengths are recomputed."""
    if p.roce is not None and p.udp is None:
        raise SerializeError("RoCE headers require a UDP header")
    if p.roce is not None and p.udp.dst_port != ROCE_UDP_PORT:
        raise SerializeError(
            f"RoCE packets must use UDP destination port {ROCE_UDP_PORT}")
    if p.recirc is not None and p.udp is None:
        raise SerializeError("recirculation header requires a UDP packet")
    if p.ipv4 is None and (p.udp is not None or p.blocks):
        raise SerializeError("UDP or block payload without an IPv4 header")

    payload = p.payload
    out = bytearray(p.eth.pack())
    if p.ipv4 is None:
        return bytes(out + payload)

    body = bytearray()
    if p.udp is not None:
        udp_length = UDP_LEN + len(payload)
        if p.roce is not None:
            udp_length += BTH_LEN + ICRC_LEN
        if p.recirc is not None:
            udp_length += RECIRC_LEN
        body += replace(p.udp, length=udp_length).pack()
        if p.roce is not None:
            body += p.roce.bth.pack()
        if p.recirc is not None:
            body += p.recirc.pack()
        body += payload
        if p.roce is not None:
            body += p.roce.icrc.to_bytes(4, "little")
    else:
        body += payload

    total_length = IPV4_LEN + len(body)
    ip = replace(p.ipv4, total_length=total_length, checksum=0)
    raw_ip = bytearray(ip.pack())
    csum = _ipv4_checksum(raw_ip)
    raw_ip[10:12] = struct.pack("!H", csum)
    return bytes(out + raw_ip + body)


def compute_icrc(p: Packet) -> int:
    """Invariant CRC over the masked IPv4/UDP/BTH headers plus payload.

    CRC-32, polynomial 0x04C11DB7 with the usual Ethernet bit-reflection
    and final inversion.  Variant fields (TTL, DSCP/ECN, both checksums,
    BTH resv8a) are replaced by all-ones before hashing; a recirculation
    header, if present, is excluded (the CRC always describes the final
    wire form).
    """
    if p.roce is None:
        raise NotRoceError("ICRC applies only to RoCEv2 packets")
    payload = p.payload
    udp_length = UDP_LEN + BTH_LEN + len(payload) + ICRC_LEN
    total_length = IPV4_LEN + udp_length

    ip = replace(p.ipv4, total_length=total_length,
                 dscp_ecn=0xFF, ttl=0xFF, checksum=0xFFFF)
    udp = replace(p.udp, length=udp_length, checksum=0xFFFF)
    bth = replace(p.roce.bth, resv8a=0xFF)
    masked = ip.pack() + udp.pack() + bth.pack() + payload
    return zlib.crc32(masked) & 0xFFFFFFFF


def verify_icrc(p: Packet) -> bool:
    return p.roce is not None and p.roce.icrc == compute_icrc(p)


def with_payload(p: Packet, blocks: tuple[bytes, ...],
                 *, refresh_icrc: bool = True) -> Packet:
    """Copy of p with replaced payload blocks (and a fresh ICRC for RoCE)."""
    q = replace(p, blocks=blocks)
    if q.roce is not None and refresh_icrc:
        q = replace(q, roce=RoceHeaders(bth=q.roce.bth, icrc=compute_icrc(q)))
    return q


@dataclass(frozen=True)
class PacketSpec:
    """Deterministic field values for the packet builders."""

    payload: bytes
    src_mac: str = "02:00:00:00:00:01"
    dst_mac: str = "02:00:00:00:00:02"
    src_ip: str = "10.0.0.1"
    dst_ip: str = "10.0.0.2"
    src_port: int = 50000
    dst_port: int = 5000
    ttl: int = 64
    identification: int = 0
    qp: int = 0x12
    psn: int = 0
    opcode: int = UD_SEND_ONLY


def _check_spec_payload(spec: PacketSpec) -> None:
    n = len(spec.payload)
    if n < BLOCK_SIZE or n % BLOCK_SIZE != 0:
        raise ValueError(
            f"payload must be a positive multiple of {BLOCK_SIZE} bytes, got {n}")


def _base_headers(spec: PacketSpec, dst_port: int, payload_extra: int):
    udp_length = UDP_LEN + len(spec.payload) + payload_extra
    eth = EthernetHeader(dst_mac=mac_bytes(spec.dst_mac),
                         src_mac=mac_bytes(spec.src_mac),
                         ethertype=ETHERTYPE_IPV4)
    ipv4 = Ipv4Header(version_ihl=0x45, dscp_ecn=0,
                      total_length=IPV4_LEN + udp_length,
                      identification=spec.identification, flags_fragment=0,
                      ttl=spec.ttl, protocol=IPPROTO_UDP, checksum=0,
                      src_ip=ip_bytes(spec.src_ip), dst_ip=ip_bytes(spec.dst_ip))
    udp = UdpHeader(src_port=spec.src_port, dst_port=dst_port,
                    length=udp_length, checksum=0)
    return eth, ipv4, udp


def build_udp_packet(spec: PacketSpec) -> Packet:
    """Well-formed plain UDP packet with a whole-block payload."""
    _check_spec_payload(spec)
    eth, ipv4, udp = _base_headers(spec, spec.dst_port, 0)
    blocks, _ = _split_blocks(spec.payload)
    p = Packet(eth=eth, ipv4=ipv4, udp=udp, blocks=blocks)
    # Normalize stored checksum so parse(serialize(p)) == p.
    return parse(serialize(p))


def build_roce_packet(spec: PacketSpec) -> Packet:
    """Well-formed RoCEv2 packet (UDP dst 4791, BTH + payload + ICRC)."""
    _check_spec_payload(spec)
    eth, ipv4, udp = _base_headers(spec, ROCE_UDP_PORT, BTH_LEN + ICRC_LEN)
    bth = BthHeader(opcode=spec.opcode, flags=0x00, pkey=0xFFFF, resv8a=0,
                    dst_qp=spec.qp, ack_flags=0, psn=spec.psn)
    blocks, _ = _split_blocks(spec.payload)
    p = Packet(eth=eth, ipv4=ipv4, udp=udp,
               roce=RoceHeaders(bth=bth, icrc=0), blocks=blocks)
    p = replace(p, roce=RoceHeaders(bth=bth, icrc=compute_icrc(p)))
    return parse(serialize(p))
