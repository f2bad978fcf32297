"""Key-dependent scrambled lookup tables and the lookup-only round path.

This is the encryption path a match-action pipeline can actually run:
every round is table lookups, a fixed byte permutation, and XOR.  The
key material is folded into per-round, per-position substitution tables
(AddRoundKey and SubBytes combined into one lookup); the column mixing
step uses four key-independent 32-bit-output tables shared by rounds
1-9.  No field arithmetic happens while a block is in flight.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .aes_core import BLOCK_SIZE, NUM_ROUNDS, SBOX, RoundKeySchedule, gf_mul

# All 256 XOR-translates of the S-box, built once and shared by every
# ScrambledTables instance (tables[k][x] == SBOX[x ^ k]).
_SBOX_XLAT = tuple(tuple(SBOX[x ^ k] for x in range(256)) for k in range(256))


def _make_mix_tables():
    # Column c maps to M0[c0] ^ M1[c1] ^ M2[c2] ^ M3[c3], each table packing
    # the (02,03,01,01) circulant contributions of one input byte as a
    # big-endian 32-bit word.
    m0, m1, m2, m3 = [], [], [], []
    for b in range(256):
        b2, b3 = gf_mul(0x02, b), gf_mul(0x03, b)
        m0.append((b2 << 24) | (b << 16) | (b << 8) | b3)
        m1.append((b3 << 24) | (b2 << 16) | (b << 8) | b)
        m2.append((b << 24) | (b3 << 16) | (b2 << 8) | b)
        m3.append((b << 24) | (b << 16) | (b3 << 8) | b2)
    return tuple(m0), tuple(m1), tuple(m2), tuple(m3)


_MIX0, _MIX1, _MIX2, _MIX3 = _make_mix_tables()

# shift_rows as a flat index permutation (column-major state).
_SHIFT = tuple((i + 4 * (i % 4)) % 16 for i in range(16))


class AlreadyCompleteError(ValueError):
    """All 10 rounds have been applied to this state."""


@dataclass(frozen=True)
class ScrambledTables:
    """Per-round combined AddRoundKey+SubBytes tables plus the final key.

    per_round_sub[r - 1][i][x] is the substitution for round r (1-based),
    byte position i: SBOX[x ^ round_keys[r - 1][i]].  final_key is the
    round-10 key XORed in after the last substitution.  key_id identifies
    the key the tables were built from without revealing it.
    """

    per_round_sub: tuple[tuple[tuple[int, ...], ...], ...]
    final_key: bytes
    key_id: str

    def sub_table(self, round_index: int) -> tuple[tuple[int, ...], ...]:
        """The 16 position tables for a 1-based round in 1..10."""
        if not 1 <= round_index <= NUM_ROUNDS:
            raise ValueError(f"round must be 1..{NUM_ROUNDS}, got {round_index}")
        return self.per_round_sub[round_index - 1]


@dataclass
class RoundState:
    """A block in flight plus the number of rounds already applied."""

    block: bytes
    round_index: int = 0

    def __post_init__(self):
        if len(self.block) != BLOCK_SIZE:
            raise ValueError("block must be 16 bytes")
        if not 0 <= self.round_index <= NUM_ROUNDS:
            raise ValueError("round_index must be 0..10")


def key_id_for(key_bytes: bytes) -> str:
    """Opaque 8-hex-char identifier for a key (digest prefix, never the key)."""
    return hashlib.sha256(key_bytes).hexdigest()[:8]


def build_scrambled_tables(schedule: RoundKeySchedule) -> ScrambledTables:
    """Synthesize the per-round lookup tables for an expanded key.

    Round key r-1 (applied before round r's SubBytes in the standard
    cipher) is folded into round r's substitution, so ten applications of
    apply_round reproduce encrypt_block exactly.
    """
    rks = schedule.round_keys
    rounds = tuple(
        tuple(_SBOX_XLAT[rks[r - 1][i]] for i in range(BLOCK_SIZE))
        for r in range(1, NUM_ROUNDS + 1)
    )
    return ScrambledTables(
        per_round_sub=rounds,
        final_key=rks[NUM_ROUNDS],
        key_id=key_id_for(rks[0]),
    )


def round_table_bytes(tables: ScrambledTables, round_index: int) -> bytes:
    """Canonical serialization of one round's tables.

    Position-major, index-major: 16 runs of 256 output bytes.  Control
    plane digests and external verifiers both hash exactly this string.
    """
    return b"".join(bytes(t) for t in tables.sub_table(round_index))


def _round_bytes(tables: ScrambledTables, block: bytes, round_index: int) -> bytes:
    # One round, 1-based round_index; lookups, permutation, XOR only.
    # Substitution and the row shift fuse into a single permuted lookup:
    # output position i reads table/byte position _SHIFT[i].
    sub = tables.per_round_sub[round_index - 1]
    b = [sub[j][block[j]] for j in _SHIFT]
    if round_index < NUM_ROUNDS:
        w0 = _MIX0[b[0]] ^ _MIX1[b[1]] ^ _MIX2[b[2]] ^ _MIX3[b[3]]
        w1 = _MIX0[b[4]] ^ _MIX1[b[5]] ^ _MIX2[b[6]] ^ _MIX3[b[7]]
        w2 = _MIX0[b[8]] ^ _MIX1[b[9]] ^ _MIX2[b[10]] ^ _MIX3[b[11]]
        w3 = _MIX0[b[12]] ^ _MIX1[b[13]] ^ _MIX2[b[14]] ^ _MIX3[b[15]]
        return ((w0 << 96) | (w1 << 64) | (w2 << 32) | w3).to_bytes(16, "big")
    fk = tables.final_key
    return bytes(x ^ y for x, y in zip(b, fk))


def apply_round(state: RoundState, tables: ScrambledTables) -> RoundState:
    """Execute one round via lookups; increments round_index."""
    if state.round_index >= NUM_ROUNDS:
        raise AlreadyCompleteError("block has already completed all 10 rounds")
    nxt = state.round_index + 1
    return RoundState(block=_round_bytes(tables, state.block, nxt), round_index=nxt)


def encrypt_block_tabular(tables: ScrambledTables, plaintext: bytes) -> bytes:
    """Full 10-round encryption of one block through the table path."""
    if len(plaintext) != BLOCK_SIZE:
        raise ValueError("plaintext block must be 16 bytes")
    block = plaintext
    for r in range(1, NUM_ROUNDS + 1):
        block = _round_bytes(tables, block, r)
    return block
