"""Local AES-128 table math, implemented from scratch.

The whole point of this module is to be a second, independent
implementation of what the switch builds server-side: the key schedule
and the per-round scrambled substitution tables.  It deliberately
shares no code with the switch package — GF(2^8) is done here with
log/antilog tables over the generator 0x03, the S-box affine step as a
rotate-XOR chain — so agreeing digests mean two different derivations
of the same math, not one derivation hashed twice.

Digest convention (must match the server byte for byte):

    round r table, position i:  T[i][x] = SBOX[x ^ round_key[r-1][i]]
    canonical bytes:            T[0][0..255] .. T[15][0..255]  (4096 B)
    digest:                     sha256 over those bytes, hex

and the key id is the first 8 hex chars of sha256 over the raw key.
"""

import hashlib


def _build_log_tables():
    log = [0] * 256
    alog = [0] * 256
    x = 1
    for i in range(255):
        alog[i] = x
        log[x] = i
        # multiply by 0x03 = x * 2 ^ x in GF(2^8) mod x^8+x^4+x^3+x+1
        x ^= (x << 1) ^ (0x11B if x & 0x80 else 0)
    return log, alog


_LOG, _ALOG = _build_log_tables()


def _inverse(a: int) -> int:
    return 0 if a == 0 else _ALOG[(255 - _LOG[a]) % 255]


def _rotl(b: int, n: int) -> int:
    return ((b << n) | (b >> (8 - n))) & 0xFF


SBOX = bytes(
    _inverse(a) ^ _rotl(_inverse(a), 1) ^ _rotl(_inverse(a), 2)
    ^ _rotl(_inverse(a), 3) ^ _rotl(_inverse(a), 4) ^ 0x63
    for a in range(256)
)


def _xtime_powers(n: int) -> list[int]:
    rcon = []
    v = 1
    for _ in range(n):
        rcon.append(v)
        v = (v << 1) ^ (0x11B if v & 0x80 else 0)
    return rcon


_RCON = _xtime_powers(10)


def expand_round_keys(key: bytes) -> list[bytes]:
    """The 11 round keys (16 bytes each), index 0 being the key itself."""
    if len(key) != 16:
        raise ValueError("key must be 16 bytes")
    words = [key[i:i + 4] for i in range(0, 16, 4)]
    for i in range(4, 44):
        prev = words[i - 1]
        if i % 4 == 0:
            rotated = prev[1:] + prev[:1]
            prev = bytes(SBOX[b] for b in rotated)
            prev = bytes([prev[0] ^ _RCON[i // 4 - 1]]) + prev[1:]
        words.append(bytes(a ^ b for a, b in zip(words[i - 4], prev)))
    return [b"".join(words[i:i + 4]) for i in range(0, 44, 4)]


def key_id(key: bytes) -> str:
    return hashlib.sha256(key).hexdigest()[:8]


def round_table_bytes(key: bytes, round_index: int) -> bytes:
    """Canonical 4096-byte serialization of one round's scrambled tables."""
    if not 1 <= round_index <= 10:
        raise ValueError("round must be in 1..10")
    rk = expand_round_keys(key)[round_index - 1]
    return b"".join(
        bytes(SBOX[x ^ rk[i]] for x in range(256)) for i in range(16)
    )


def round_digest(key: bytes, round_index: int) -> str:
    return hashlib.sha256(round_table_bytes(key, round_index)).hexdigest()


def all_round_digests(key: bytes) -> list[str]:
    return [round_digest(key, r) for r in range(1, 11)]
