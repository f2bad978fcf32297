"""Reference AES-128-ECB and the primitive round operations.

This module is the bit-exact reference path ("the oracle") that the
lookup-table pipeline is validated against.  State blocks are 16 raw
bytes in column-major order: byte i sits at row i % 4, column i // 4.
Encryption only; there is no decryption API here by design.
"""

from __future__ import annotations

from dataclasses import dataclass

BLOCK_SIZE = 16
NUM_ROUNDS = 10


class PaddingError(ValueError):
    """Payload length is not a whole number of 16-byte blocks."""


@dataclass(frozen=True)
class Aes128Key:
    """A 128-bit cipher key."""

    bytes: bytes

    def __post_init__(self):
        if len(self.bytes) != 16:
            raise ValueError(f"key must be 16 bytes, got {len(self.bytes)}")

    @classmethod
    def from_hex(cls, text: str) -> "Aes128Key":
        return cls(bytes.fromhex(text.strip()))


@dataclass(frozen=True)
class RoundKeySchedule:
    """The 11 expanded round keys (round 0 is the cipher key itself)."""

    round_keys: tuple[bytes, ...]

    def __post_init__(self):
        if len(self.round_keys) != 11:
            raise ValueError("schedule must hold 11 round keys")
        if any(len(rk) != 16 for rk in self.round_keys):
            raise ValueError("round keys must be 16 bytes each")


def gf_mul(a: int, b: int) -> int:
    """Multiply a and b in GF(2^8) modulo x^8 + x^4 + x^3 + x + 1."""
    p = 0
    for _ in range(8):
        if b & 1:
            p ^= a
        a = ((a << 1) ^ 0x1B) & 0xFF if a & 0x80 else (a << 1)
        b >>= 1
    return p


def _gf_inverse(a: int) -> int:
    # a^254 by square-and-multiply; 0 maps to 0.
    if a == 0:
        return 0
    result, power = 1, a
    exp = 254
    while exp:
        if exp & 1:
            result = gf_mul(result, power)
        power = gf_mul(power, power)
        exp >>= 1
    return result


def _rotl8(x: int, n: int) -> int:
    return ((x << n) | (x >> (8 - n))) & 0xFF


def _make_sbox() -> tuple[int, ...]:
    # Multiplicative inverse followed by the affine map.
    box = []
    for a in range(256):
        inv = _gf_inverse(a)
        box.append(0x63 ^ inv ^ _rotl8(inv, 1) ^ _rotl8(inv, 2)
                   ^ _rotl8(inv, 3) ^ _rotl8(inv, 4))
    return tuple(box)


SBOX = _make_sbox()

_RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)

# Memoized x2/x3 products; still the reference path, just precomputed.
_MUL2 = tuple(gf_mul(0x02, b) for b in range(256))
_MUL3 = tuple(gf_mul(0x03, b) for b in range(256))

# shift_rows permutation on the flat column-major state.
_SHIFT_ROWS = tuple((i + 4 * (i % 4)) % 16 for i in range(16))


def expand_key(key: Aes128Key) -> RoundKeySchedule:
    """Expand a 16-byte key into the 11 round keys."""
    words = [list(key.bytes[4 * i:4 * i + 4]) for i in range(4)]
    for i in range(4, 44):
        t = list(words[i - 1])
        if i % 4 == 0:
            t = t[1:] + t[:1]
            t = [SBOX[b] for b in t]
            t[0] ^= _RCON[i // 4 - 1]
        words.append([a ^ b for a, b in zip(words[i - 4], t)])
    rks = tuple(bytes(sum(words[4 * r:4 * r + 4], [])) for r in range(11))
    return RoundKeySchedule(rks)


def _check_block(s: bytes) -> None:
    if len(s) != BLOCK_SIZE:
        raise ValueError(f"state block must be {BLOCK_SIZE} bytes, got {len(s)}")


def sub_bytes(s: bytes) -> bytes:
    _check_block(s)
    return bytes(SBOX[b] for b in s)


def shift_rows(s: bytes) -> bytes:
    """Rotate row r of the state left by r positions."""
    _check_block(s)
    return bytes(s[j] for j in _SHIFT_ROWS)


def mix_columns(s: bytes) -> bytes:
    """Multiply each column by the circulant matrix (02, 03, 01, 01)."""
    _check_block(s)
    out = bytearray(16)
    for c in (0, 4, 8, 12):
        a0, a1, a2, a3 = s[c], s[c + 1], s[c + 2], s[c + 3]
        out[c] = _MUL2[a0] ^ _MUL3[a1] ^ a2 ^ a3
        out[c + 1] = a0 ^ _MUL2[a1] ^ _MUL3[a2] ^ a3
        out[c + 2] = a0 ^ a1 ^ _MUL2[a2] ^ _MUL3[a3]
        out[c + 3] = _MUL3[a0] ^ a1 ^ a2 ^ _MUL2[a3]
    return bytes(out)


def add_round_key(s: bytes, round_key: bytes) -> bytes:
    _check_block(s)
    _check_block(round_key)
    return bytes(a ^ b for a, b in zip(s, round_key))


def encrypt_block(key: Aes128Key, plaintext: bytes) -> bytes:
    """AES-128 on one block: 9 full rounds plus a final round without MixColumns."""
    _check_block(plaintext)
    rks = expand_key(key).round_keys
    s = add_round_key(plaintext, rks[0])
    for r in range(1, NUM_ROUNDS):
        s = add_round_key(mix_columns(shift_rows(sub_bytes(s))), rks[r])
    return add_round_key(shift_rows(sub_bytes(s)), rks[NUM_ROUNDS])


def encrypt_ecb(key: Aes128Key, payload: bytes) -> bytes:
    """Encrypt each 16-byte block of payload independently (ECB)."""
    if len(payload) % BLOCK_SIZE != 0:
        raise PaddingError(
            f"payload length {len(payload)} is not a multiple of {BLOCK_SIZE}")
    rks = expand_key(key).round_keys
    out = bytearray()
    for off in range(0, len(payload), BLOCK_SIZE):
        s = add_round_key(payload[off:off + BLOCK_SIZE], rks[0])
        for r in range(1, NUM_ROUNDS):
            s = add_round_key(mix_columns(shift_rows(sub_bytes(s))), rks[r])
        out += add_round_key(shift_rows(sub_bytes(s)), rks[NUM_ROUNDS])
    return bytes(out)
