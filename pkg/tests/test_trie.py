"""Account trie, proofs, header chains, and the freshness rule."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privamm.keccak import keccak256
from privamm.rlp import rlp_encode
from privamm.trie import (EMPTY_ROOT, GENESIS_PARENT, AccountLeaf, ChainError,
                          HeaderChain, MalformedLeafError, NotFoundError,
                          Trie, UnforgeabilityError, VerificationError,
                          append_block, check_freshness, decode_account_leaf,
                          encode_account_leaf, header_digest, prove_account,
                          trie_root, trie_update, verify_account_proof)


def addr(i: int) -> bytes:
    return i.to_bytes(20, "big")


def leaf(balance: int, nonce: int = 0) -> AccountLeaf:
    return AccountLeaf(nonce=nonce, balance=balance)


# -- leaf layout -------------------------------------------------------------

def test_leaf_is_112_bytes_with_fixed_markers():
    data = encode_account_leaf(leaf(1))
    assert len(data) == 112
    assert data[0:2] == b"\xf8\x6e"
    assert data[3] == 0xA0
    assert data[36] == 0xA0
    assert data[69] == 0xA0
    assert data[102] == 0x89
    assert data[103:] == b"\x00" * 9


def test_leaf_balance_big_endian():
    data = encode_account_leaf(leaf(1))
    assert data[35] == 0x01
    assert data[4:35] == b"\x00" * 31


def test_leaf_limb_boundary():
    data = encode_account_leaf(leaf(2**128))
    assert data[19] == 0x01
    assert data[20:36] == b"\x00" * 16


def test_leaf_round_trip():
    original = AccountLeaf(nonce=5, balance=123456789,
                           storage_root=b"\x11" * 32, code_hash=b"\x22" * 32)
    assert decode_account_leaf(encode_account_leaf(original)) == original


def test_leaf_rejects_large_nonce():
    with pytest.raises(MalformedLeafError):
        encode_account_leaf(leaf(1, nonce=0x80))


def test_leaf_rejects_oversized_balance():
    with pytest.raises(MalformedLeafError):
        encode_account_leaf(leaf(2**256))


def test_decode_rejects_damaged_markers():
    data = bytearray(encode_account_leaf(leaf(7)))
    data[36] = 0xA1
    with pytest.raises(MalformedLeafError):
        decode_account_leaf(bytes(data))


# -- trie --------------------------------------------------------------------

def test_empty_root_is_keccak_of_rlp_empty():
    assert trie_root(Trie()) == keccak256(rlp_encode(b"")) == EMPTY_ROOT


def test_single_leaf_root():
    t = trie_update(Trie(), addr(1), leaf(10))
    # One account: the root node is the leaf itself.
    proof = t.prove(addr(1))
    assert len(proof.node_stack) == 1
    assert trie_root(t) == keccak256(proof.node_stack[0])


def test_get_round_trip():
    t = Trie()
    for i in range(1, 20):
        t = trie_update(t, addr(i), leaf(i * 100))
    for i in range(1, 20):
        assert t.get(addr(i)).balance == i * 100


def test_get_missing_raises():
    t = trie_update(Trie(), addr(1), leaf(10))
    with pytest.raises(NotFoundError):
        t.get(addr(2))


def test_update_is_persistent():
    t1 = trie_update(Trie(), addr(1), leaf(10))
    t2 = trie_update(t1, addr(1), leaf(20))
    assert t1.get(addr(1)).balance == 10
    assert t2.get(addr(1)).balance == 20
    assert trie_root(t1) != trie_root(t2)


@given(st.integers(0, 2**32))
@settings(max_examples=40)
def test_root_insertion_order_independent(seed):
    rng = random.Random(seed)
    accounts = {addr(i): leaf(rng.randrange(1, 2**64)) for i in range(1, 33)}
    order_a = list(accounts)
    order_b = list(accounts)
    rng.shuffle(order_b)
    t_a, t_b = Trie(), Trie()
    for a in order_a:
        t_a = trie_update(t_a, a, accounts[a])
    for a in order_b:
        t_b = trie_update(t_b, a, accounts[a])
    assert trie_root(t_a) == trie_root(t_b)


# -- proofs --------------------------------------------------------------------

def build_populated(n=24):
    t = Trie()
    for i in range(1, n + 1):
        t = trie_update(t, addr(i), leaf(i * 1000))
    return t


def test_proof_verifies_and_decodes():
    t = build_populated()
    proof = prove_account(t, addr(7))
    account = verify_account_proof(trie_root(t), addr(7), proof)
    assert account.balance == 7000


def test_proof_rejects_wrong_root():
    t = build_populated()
    proof = prove_account(t, addr(7))
    with pytest.raises(VerificationError, match="root hash"):
        verify_account_proof(b"\x00" * 32, addr(7), proof)


def test_proof_rejects_wrong_address():
    t = build_populated()
    proof = prove_account(t, addr(7))
    with pytest.raises(VerificationError):
        verify_account_proof(trie_root(t), addr(8), proof)


def test_every_single_byte_tamper_detected():
    t = build_populated(8)
    proof = prove_account(t, addr(3))
    root = trie_root(t)
    for node_idx, node in enumerate(proof.node_stack):
        for byte_idx in range(len(node)):
            mutated = bytearray(node)
            mutated[byte_idx] ^= 0x01
            stack = list(proof.node_stack)
            stack[node_idx] = bytes(mutated)
            bad = type(proof)(address=proof.address, node_stack=tuple(stack))
            with pytest.raises(VerificationError):
                verify_account_proof(root, addr(3), bad)


def test_proof_json_round_trip():
    t = build_populated(4)
    proof = prove_account(t, addr(2), block_height=9, header_hash=b"\xab" * 32)
    restored = type(proof).from_json(proof.to_json())
    assert restored == proof


# -- header chain -----------------------------------------------------------------

def test_genesis_shape():
    chain = HeaderChain(genesis_state_root=EMPTY_ROOT, genesis_timestamp=5)
    genesis = chain.headers[0]
    assert genesis.height == 0
    assert genesis.parent_hash == GENESIS_PARENT
    assert genesis.header_hash == header_digest(0, GENESIS_PARENT, 5, EMPTY_ROOT)


def test_append_links_parents():
    chain = HeaderChain()
    h1 = append_block(chain, b"\x01" * 32, 10)
    h2 = append_block(chain, b"\x02" * 32, 20)
    assert h1.parent_hash == chain.headers[0].header_hash
    assert h2.parent_hash == h1.header_hash
    assert chain.validate() is None


def test_timestamp_regression_rejected():
    chain = HeaderChain()
    append_block(chain, b"\x01" * 32, 10)
    with pytest.raises(ChainError):
        append_block(chain, b"\x02" * 32, 9)


def test_historic_mutation_detected_at_first_descendant():
    chain = HeaderChain()
    for i in range(1, 6):
        append_block(chain, bytes([i]) * 32, i * 10)
    # Tamper with the header at height 2; its own digest no longer matches.
    victim = chain.headers[2]
    forged = type(victim).make(victim.height, victim.parent_hash,
                               victim.timestamp, b"\xff" * 32)
    chain.headers[2] = type(victim)(
        height=forged.height, parent_hash=forged.parent_hash,
        timestamp=forged.timestamp, state_root=forged.state_root,
        header_hash=victim.header_hash,  # keep the old hash: digest lie
    )
    assert chain.validate() == 2


def test_parent_break_detected_at_descendant():
    chain = HeaderChain()
    for i in range(1, 6):
        append_block(chain, bytes([i]) * 32, i * 10)
    # Replace height 2 with a self-consistent header not linked to height 3.
    victim = chain.headers[2]
    replacement = type(victim).make(victim.height, victim.parent_hash,
                                    victim.timestamp, b"\xff" * 32)
    chain.headers[2] = replacement
    assert chain.validate() == 3


# -- freshness -----------------------------------------------------------------------

def chain_of(heights=10, step=10):
    chain = HeaderChain(genesis_timestamp=0)
    for i in range(1, heights + 1):
        append_block(chain, bytes([i % 256]) * 32, i * step)
    return chain


def test_freshness_confirmation_boundary():
    chain = chain_of(10)
    header = chain.header_at(7)  # 3 confirmations on top
    now = chain.tip.timestamp
    assert check_freshness(chain, header, confirmations=3, window=10**6, now=now)
    assert not check_freshness(chain, header, confirmations=4, window=10**6,
                               now=now)


def test_freshness_window_boundary():
    chain = chain_of(10)
    header = chain.header_at(5)  # timestamp 50
    assert check_freshness(chain, header, confirmations=1, window=30, now=80)
    assert not check_freshness(chain, header, confirmations=1, window=29, now=80)


def test_freshness_rejects_forged_header():
    chain = chain_of(10)
    outsider = type(chain.tip).make(3, b"\x99" * 32, 30, b"\x88" * 32)
    with pytest.raises(UnforgeabilityError):
        check_freshness(chain, outsider, confirmations=1, window=10**6, now=100)
