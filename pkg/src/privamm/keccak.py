"""Keccak-256, the original 0x01-padded sponge as used for account tries.

This is deliberately NOT hashlib's sha3_256: the NIST standard changed the
padding byte to 0x06, which produces different digests. Rate 1088 bits,
capacity 512, output 256 bits.
"""

from __future__ import annotations

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

_MASK = (1 << 64) - 1
_RATE_BYTES = 136
_DIGEST_BYTES = 32


def _build_rho_pi_tables():
    # Lane i sits at (x, y) = (i % 5, i // 5). The rho/pi step moves the
    # rotated lane A[x][y] to B[y][(2x + 3y) % 5].
    src = [0] * 24
    dst = [0] * 24
    rot = [0] * 24
    x, y = 1, 0
    for t in range(24):
        src[t] = x + 5 * y
        dst[t] = y + 5 * ((2 * x + 3 * y) % 5)
        rot[t] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    return tuple(src), tuple(dst), tuple(rot)


_RP_SRC, _RP_DST, _RP_ROT = _build_rho_pi_tables()


def _keccak_f(lanes: list[int]) -> None:
    """Keccak-f[1600] permutation, in place on 25 64-bit lanes."""
    rp = tuple(zip(_RP_SRC, _RP_DST, _RP_ROT))
    for rc in _ROUND_CONSTANTS:
        # theta
        c0 = lanes[0] ^ lanes[5] ^ lanes[10] ^ lanes[15] ^ lanes[20]
        c1 = lanes[1] ^ lanes[6] ^ lanes[11] ^ lanes[16] ^ lanes[21]
        c2 = lanes[2] ^ lanes[7] ^ lanes[12] ^ lanes[17] ^ lanes[22]
        c3 = lanes[3] ^ lanes[8] ^ lanes[13] ^ lanes[18] ^ lanes[23]
        c4 = lanes[4] ^ lanes[9] ^ lanes[14] ^ lanes[19] ^ lanes[24]
        d0 = c4 ^ (((c1 << 1) | (c1 >> 63)) & _MASK)
        d1 = c0 ^ (((c2 << 1) | (c2 >> 63)) & _MASK)
        d2 = c1 ^ (((c3 << 1) | (c3 >> 63)) & _MASK)
        d3 = c2 ^ (((c4 << 1) | (c4 >> 63)) & _MASK)
        d4 = c3 ^ (((c0 << 1) | (c0 >> 63)) & _MASK)
        for i in range(0, 25, 5):
            lanes[i] ^= d0
            lanes[i + 1] ^= d1
            lanes[i + 2] ^= d2
            lanes[i + 3] ^= d3
            lanes[i + 4] ^= d4
        # rho + pi
        b = [0] * 25
        b[0] = lanes[0]
        for s, d, r in rp:
            v = lanes[s]
            b[d] = ((v << r) | (v >> (64 - r))) & _MASK
        # chi
        for i in range(0, 25, 5):
            r0, r1, r2, r3, r4 = b[i], b[i + 1], b[i + 2], b[i + 3], b[i + 4]
            lanes[i] = r0 ^ (~r1 & r2) & _MASK
            lanes[i + 1] = r1 ^ (~r2 & r3) & _MASK
            lanes[i + 2] = r2 ^ (~r3 & r4) & _MASK
            lanes[i + 3] = r3 ^ (~r4 & r0) & _MASK
            lanes[i + 4] = r4 ^ (~r0 & r1) & _MASK
        # iota
        lanes[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """One-shot Keccak-256 digest of ``data``."""
    lanes = [0] * 25
    # multi-rate padding: 0x01 ... 0x80 (collapsing to 0x81 for a 1-byte pad)
    padlen = _RATE_BYTES - (len(data) % _RATE_BYTES)
    if padlen == 1:
        padded = data + b"\x81"
    else:
        padded = data + b"\x01" + b"\x00" * (padlen - 2) + b"\x80"
    for off in range(0, len(padded), _RATE_BYTES):
        block = padded[off : off + _RATE_BYTES]
        for i in range(17):  # 136 bytes = 17 lanes
            lanes[i] ^= int.from_bytes(block[8 * i : 8 * i + 8], "little")
        _keccak_f(lanes)
    return b"".join(lanes[i].to_bytes(8, "little") for i in range(4))


def keccak256_hex(data: bytes) -> str:
    return keccak256(data).hex()
