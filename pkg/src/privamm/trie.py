"""Merkle Patricia Trie over account records, with block-header chains.

Accounts are stored under the Keccak-256 hash of their 20-byte address,
interpreted as 64 hex nibbles steering a radix-16 path. Every node is
referenced by the Keccak-256 hash of its RLP encoding (no inline short
nodes), so a proof is simply the ordered stack of node encodings from the
root to the leaf: re-hashing each node and following the nibbles either
reproduces the claimed state root or exposes the first tampered byte.

Account leaves use a fixed canonical 112-byte encoding: a 2-byte list
header, 1-byte nonce, three 33-byte hash/balance items, and a 10-byte
reserved trailer. The balance item starts at byte offset 3, which the
threshold circuit relies on.

The trie is persistent: updates return a new handle sharing an
append-only node store, so old roots remain readable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .keccak import keccak256
from .rlp import RlpError, rlp_decode, rlp_encode

LEAF_LEN = 112
GENESIS_PARENT = b"\x00" * 32
ZERO32 = b"\x00" * 32

#: Root hash of the empty trie: keccak256 of the RLP empty string.
EMPTY_ROOT = keccak256(rlp_encode(b""))


class MalformedLeafError(ValueError):
    """Account bytes do not match the canonical 112-byte layout."""


class NotFoundError(KeyError):
    """Address absent from the trie (non-inclusion proofs unsupported)."""


class VerificationError(Exception):
    """Proof rejected; the message names the failing check."""


class ChainError(ValueError):
    """Header-chain misuse, e.g. timestamp regression."""


class UnforgeabilityError(Exception):
    """Proof references a header that is not on the chain."""


# ---------------------------------------------------------------------------
# Account leaves
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class AccountLeaf:
    nonce: int
    balance: int
    storage_root: bytes = ZERO32
    code_hash: bytes = ZERO32


def encode_account_leaf(acct: AccountLeaf) -> bytes:
    """Canonical 112-byte account encoding (a valid RLP list).

    Layout: f8 6e | nonce | a0 + 32-byte balance | a0 + storage root |
    a0 + code hash | 89 + 9 reserved zero bytes.
    """
    if not 0 <= acct.nonce <= 0x7F:
        raise MalformedLeafError("nonce must fit one canonical RLP byte")
    if not 0 <= acct.balance < 1 << 256:
        raise MalformedLeafError("balance must be a 256-bit unsigned integer")
    if len(acct.storage_root) != 32 or len(acct.code_hash) != 32:
        raise MalformedLeafError("storage_root and code_hash must be 32 bytes")
    out = (
        b"\xf8\x6e"
        + bytes([acct.nonce])
        + b"\xa0" + acct.balance.to_bytes(32, "big")
        + b"\xa0" + acct.storage_root
        + b"\xa0" + acct.code_hash
        + b"\x89" + b"\x00" * 9
    )
    assert len(out) == LEAF_LEN
    return out


def decode_account_leaf(data: bytes) -> AccountLeaf:
    """Strict inverse of encode_account_leaf."""
    if len(data) != LEAF_LEN:
        raise MalformedLeafError(f"account leaf must be {LEAF_LEN} bytes")
    if data[0:2] != b"\xf8\x6e":
        raise MalformedLeafError("bad list header")
    if data[2] > 0x7F:
        raise MalformedLeafError("bad nonce byte")
    if data[3] != 0xA0 or data[36] != 0xA0 or data[69] != 0xA0:
        raise MalformedLeafError("missing 32-byte item marker")
    if data[102] != 0x89 or data[103:112] != b"\x00" * 9:
        raise MalformedLeafError("bad reserved trailer")
    return AccountLeaf(
        nonce=data[2],
        balance=int.from_bytes(data[4:36], "big"),
        storage_root=data[37:69],
        code_hash=data[70:102],
    )


# ---------------------------------------------------------------------------
# Nibble paths
# ---------------------------------------------------------------------------

def _nibbles(data: bytes) -> Tuple[int, ...]:
    out = []
    for b in data:
        out.append(b >> 4)
        out.append(b & 0x0F)
    return tuple(out)


def hp_encode(nibbles, is_leaf: bool) -> bytes:
    """Hex-prefix encoding: packs a nibble path plus leaf/extension flag."""
    flag = 2 if is_leaf else 0
    if len(nibbles) % 2:
        scratch = [flag + 1] + list(nibbles)
    else:
        scratch = [flag, 0] + list(nibbles)
    return bytes(
        (scratch[i] << 4) | scratch[i + 1] for i in range(0, len(scratch), 2)
    )


def hp_decode(data: bytes):
    if not data:
        raise VerificationError("malformed node: empty hex-prefix path")
    flag = data[0] >> 4
    if flag > 3:
        raise VerificationError("malformed node: bad hex-prefix flag")
    is_leaf = flag >= 2
    nibbles = list(_nibbles(data))
    if flag % 2:  # odd length: first nibble of byte 0 is the flag
        nibbles = nibbles[1:]
    else:
        if nibbles[1] != 0:
            raise VerificationError("malformed node: bad hex-prefix padding")
        nibbles = nibbles[2:]
    return tuple(nibbles), is_leaf


# ---------------------------------------------------------------------------
# Trie
# ---------------------------------------------------------------------------

def _common_prefix(a, b) -> int:
    i = 0
    while i < len(a) and i < len(b) and a[i] == b[i]:
        i += 1
    return i


class Trie:
    """Persistent account trie handle: (shared node store, root hash)."""

    __slots__ = ("_store", "root_hash")

    def __init__(self, store=None, root_hash: Optional[bytes] = None):
        self._store = {} if store is None else store
        self.root_hash = root_hash

    def _put_node(self, node) -> bytes:
        encoded = rlp_encode(node)
        h = keccak256(encoded)
        self._store[h] = encoded
        return h

    def _get_node(self, h: bytes):
        return rlp_decode(self._store[h])

    def root(self) -> bytes:
        if self.root_hash is None:
            return EMPTY_ROOT
        return self.root_hash

    # -- update ----------------------------------------------------------

    def update(self, address: bytes, acct: AccountLeaf) -> "Trie":
        """Insert or overwrite an account; returns a new trie handle."""
        if len(address) != 20:
            raise ValueError("address must be 20 bytes")
        path = _nibbles(keccak256(address))
        value = encode_account_leaf(acct)
        new_root = self._insert(self.root_hash, path, value)
        return Trie(store=self._store, root_hash=new_root)

    def _insert(self, node_hash: Optional[bytes], path, value: bytes) -> bytes:
        if node_hash is None:
            return self._put_node([hp_encode(path, True), value])
        node = self._get_node(node_hash)
        if len(node) == 17:
            return self._insert_branch(node, path, value)
        node_path, is_leaf = hp_decode(node[0])
        if is_leaf:
            return self._insert_at_leaf(node_path, node[1], path, value)
        return self._insert_at_extension(node_path, node[1], path, value)

    def _insert_branch(self, node, path, value: bytes) -> bytes:
        node = list(node)
        if not path:
            node[16] = value
        else:
            child = node[path[0]] or None
            node[path[0]] = self._insert(child, path[1:], value)
        return self._put_node(node)

    def _branch_with(self, entries, stored_value: bytes = b"") -> bytes:
        """Build a branch node from {first_nibble: child_hash} entries."""
        node = [b""] * 16 + [stored_value]
        for nib, child in entries.items():
            node[nib] = child
        return self._put_node(node)

    def _insert_at_leaf(self, old_path, old_value, path, value) -> bytes:
        if old_path == path:
            return self._put_node([hp_encode(path, True), value])
        split = _common_prefix(old_path, path)
        entries = {}
        stored = b""
        for sub_path, sub_value in ((old_path, old_value), (path, value)):
            rest = sub_path[split:]
            if not rest:
                stored = sub_value
            else:
                entries[rest[0]] = self._put_node(
                    [hp_encode(rest[1:], True), sub_value]
                )
        branch = self._branch_with(entries, stored)
        if split:
            return self._put_node([hp_encode(path[:split], False), branch])
        return branch

    def _insert_at_extension(self, ext_path, child_hash, path, value) -> bytes:
        split = _common_prefix(ext_path, path)
        if split == len(ext_path):
            new_child = self._insert(child_hash, path[split:], value)
            return self._put_node([hp_encode(ext_path, False), new_child])
        # Split the extension at the divergence point.
        entries = {}
        ext_rest = ext_path[split:]
        if len(ext_rest) == 1:
            entries[ext_rest[0]] = child_hash
        else:
            entries[ext_rest[0]] = self._put_node(
                [hp_encode(ext_rest[1:], False), child_hash]
            )
        new_rest = path[split:]
        stored = b""
        if not new_rest:
            stored = value
        else:
            entries[new_rest[0]] = self._put_node(
                [hp_encode(new_rest[1:], True), value]
            )
        branch = self._branch_with(entries, stored)
        if split:
            return self._put_node([hp_encode(path[:split], False), branch])
        return branch

    # -- lookup / proofs ---------------------------------------------------

    def _walk(self, address: bytes):
        """Follow an address path; yields the raw node encodings visited."""
        if self.root_hash is None:
            raise NotFoundError(f"address {address.hex()} not in empty trie")
        path = _nibbles(keccak256(address))
        node_hash = self.root_hash
        idx = 0
        stack = []
        while True:
            encoded = self._store[node_hash]
            stack.append(encoded)
            node = rlp_decode(encoded)
            if len(node) == 17:
                if idx == len(path):
                    raise NotFoundError("path exhausted at branch")
                ref = node[path[idx]]
                if not ref:
                    raise NotFoundError(f"address {address.hex()} not present")
                node_hash = ref
                idx += 1
                continue
            node_path, is_leaf = hp_decode(node[0])
            if tuple(path[idx : idx + len(node_path)]) != node_path:
                raise NotFoundError(f"address {address.hex()} not present")
            idx += len(node_path)
            if is_leaf:
                if idx != len(path):
                    raise NotFoundError("leaf path too short")
                return stack, node[1]
            node_hash = node[1]

    def get(self, address: bytes) -> AccountLeaf:
        _, payload = self._walk(address)
        return decode_account_leaf(payload)

    def prove(self, address: bytes) -> "MptProof":
        stack, _ = self._walk(address)
        return MptProof(address=address, node_stack=tuple(stack))


def trie_update(trie: Trie, address: bytes, acct: AccountLeaf) -> Trie:
    return trie.update(address, acct)


def trie_root(trie: Trie) -> bytes:
    return trie.root()


def prove_account(trie: Trie, address: bytes,
                  block_height: Optional[int] = None,
                  header_hash: Optional[bytes] = None) -> "MptProof":
    proof = trie.prove(address)
    return MptProof(
        address=proof.address,
        node_stack=proof.node_stack,
        block_height=block_height,
        header_hash=header_hash,
    )


@dataclass(frozen=True, slots=True)
class MptProof:
    """Ordered node stack from state root to account leaf."""

    address: bytes
    node_stack: Tuple[bytes, ...]
    block_height: Optional[int] = None
    header_hash: Optional[bytes] = None

    def to_json(self) -> dict:
        return {
            "address": "0x" + self.address.hex(),
            "blockHeight": self.block_height,
            "headerHash": (
                "0x" + self.header_hash.hex() if self.header_hash else None
            ),
            "nodes": ["0x" + n.hex() for n in self.node_stack],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MptProof":
        return cls(
            address=bytes.fromhex(obj["address"][2:]),
            node_stack=tuple(bytes.fromhex(n[2:]) for n in obj["nodes"]),
            block_height=obj.get("blockHeight"),
            header_hash=(
                bytes.fromhex(obj["headerHash"][2:]) if obj.get("headerHash") else None
            ),
        )


def verify_account_proof(state_root: bytes, address: bytes,
                         proof: MptProof) -> AccountLeaf:
    """Re-hash and re-walk a proof; returns the proven account or raises.

    Any altered byte in the nodes, address, or claimed root flips a hash
    or diverts the nibble path, and is reported with its cause.
    """
    if len(address) != 20:
        raise VerificationError("address must be 20 bytes")
    if proof.address != address:
        raise VerificationError("address mismatch between proof and query")
    if not proof.node_stack:
        raise VerificationError("empty proof")
    path = _nibbles(keccak256(address))
    expected_hash = state_root
    idx = 0
    for depth, encoded in enumerate(proof.node_stack):
        if keccak256(encoded) != expected_hash:
            cause = "root hash mismatch" if depth == 0 else "hash mismatch"
            raise VerificationError(f"{cause} at node {depth}")
        try:
            node = rlp_decode(encoded)
        except RlpError as exc:
            raise VerificationError(f"malformed node at {depth}: {exc}") from exc
        if not isinstance(node, list):
            raise VerificationError(f"malformed node at {depth}: not a list")
        if len(node) == 17:
            if idx >= len(path):
                raise VerificationError("path exhausted at branch")
            ref = node[path[idx]]
            if len(ref) != 32:
                raise VerificationError(f"path divergence at node {depth}")
            expected_hash = ref
            idx += 1
            continue
        if len(node) != 2:
            raise VerificationError(f"malformed node at {depth}: bad arity")
        node_path, is_leaf = hp_decode(node[0])
        if tuple(path[idx : idx + len(node_path)]) != node_path:
            raise VerificationError(f"path divergence at node {depth}")
        idx += len(node_path)
        if is_leaf:
            if depth != len(proof.node_stack) - 1:
                raise VerificationError("leaf before end of node stack")
            if idx != len(path):
                raise VerificationError("path divergence at leaf")
            try:
                return decode_account_leaf(node[1])
            except MalformedLeafError as exc:
                raise VerificationError(f"malformed leaf: {exc}") from exc
        expected_hash = node[1]
        if len(expected_hash) != 32:
            raise VerificationError(f"malformed node at {depth}: bad child ref")
    raise VerificationError("truncated proof: no leaf reached")


# ---------------------------------------------------------------------------
# Block headers
# ---------------------------------------------------------------------------

def _int_rlp(i: int) -> bytes:
    if i == 0:
        return b""
    return i.to_bytes((i.bit_length() + 7) // 8, "big")


def header_digest(height: int, parent_hash: bytes, timestamp: int,
                  state_root: bytes) -> bytes:
    return keccak256(
        rlp_encode([_int_rlp(height), parent_hash, _int_rlp(timestamp), state_root])
    )


@dataclass(frozen=True, slots=True)
class BlockHeader:
    height: int
    parent_hash: bytes
    timestamp: int
    state_root: bytes
    header_hash: bytes

    @classmethod
    def make(cls, height: int, parent_hash: bytes, timestamp: int,
             state_root: bytes) -> "BlockHeader":
        return cls(
            height=height,
            parent_hash=parent_hash,
            timestamp=timestamp,
            state_root=state_root,
            header_hash=header_digest(height, parent_hash, timestamp, state_root),
        )

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "parentHash": "0x" + self.parent_hash.hex(),
            "timestamp": self.timestamp,
            "stateRoot": "0x" + self.state_root.hex(),
            "headerHash": "0x" + self.header_hash.hex(),
        }


class HeaderChain:
    """A hash-linked list of block headers, genesis at height 0."""

    __slots__ = ("headers",)

    def __init__(self, genesis_state_root: bytes = EMPTY_ROOT,
                 genesis_timestamp: int = 0):
        self.headers: List[BlockHeader] = [
            BlockHeader.make(0, GENESIS_PARENT, genesis_timestamp,
                             genesis_state_root)
        ]

    @property
    def tip(self) -> BlockHeader:
        return self.headers[-1]

    def append(self, state_root: bytes, timestamp: int) -> BlockHeader:
        prev = self.tip
        if timestamp < prev.timestamp:
            raise ChainError(
                f"timestamp regression: {timestamp} < {prev.timestamp}"
            )
        header = BlockHeader.make(prev.height + 1, prev.header_hash,
                                  timestamp, state_root)
        self.headers.append(header)
        return header

    def validate(self) -> Optional[int]:
        """Return the height of the first invalid header, or None if intact."""
        for i, h in enumerate(self.headers):
            if h.height != i:
                return i
            expected_parent = GENESIS_PARENT if i == 0 else self.headers[i - 1].header_hash
            if h.parent_hash != expected_parent:
                return i
            if h.header_hash != header_digest(h.height, h.parent_hash,
                                              h.timestamp, h.state_root):
                return i
        return None

    def header_at(self, height: int) -> BlockHeader:
        if not 0 <= height < len(self.headers):
            raise ChainError(f"no header at height {height}")
        return self.headers[height]


def append_block(chain: HeaderChain, state_root: bytes,
                 timestamp: int) -> BlockHeader:
    return chain.append(state_root, timestamp)


def check_freshness(chain: HeaderChain, proof_header: BlockHeader,
                    confirmations: int, window: int, now: int) -> bool:
    """Apply the freshness rule to a header the proof was built against.

    The header must sit on the chain (otherwise the proof is forged);
    it passes iff it has at least `confirmations` blocks on top and its
    timestamp is at most `window` seconds old.
    """
    h = proof_header.height
    if not 0 <= h < len(chain.headers) or (
        chain.headers[h].header_hash != proof_header.header_hash
    ):
        raise UnforgeabilityError("proof header is not on the chain")
    deep_enough = (chain.tip.height - h) >= confirmations
    fresh_enough = (now - proof_header.timestamp) <= window
    return deep_enough and fresh_enough
