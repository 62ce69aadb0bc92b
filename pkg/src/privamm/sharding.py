"""Two-tier geo-sharded ledger: masterchain anchors per-region workchains.

Each workchain covers a geographic rectangle, initially one shard. Peers
register into the unique shard whose zone contains their coordinates
(half-open rectangles: west and south edges inclusive), so sibling zones
always tile their parent exactly. A shard that sustains mean load above
split_tps divides along its zone's longer axis at the median peer
coordinate, carrying pool liquidity in proportion to the reassigned
liquidity providers; sibling shards that both fall below merge_tps fuse
back. The masterchain records every shard head in an anchor table and
hashes that table into its own header chain.

Block production is a vote-counting abstraction of BFT consensus: a
committee of n = 3f + 1 members finalizes a proposal iff 2f + 1 distinct
members vote for its exact header digest. Mempool entries carry only a
commitment and a balance proof — never a plaintext amount.

Zone coordinates are exact rationals so partition audits have zero
tolerance.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import balance_proof
from .amm import PoolState
from .keccak import keccak256
from .trie import BlockHeader, HeaderChain, header_digest


class RegistrationError(ValueError):
    """Duplicate identity or location outside every workchain zone."""


class CommitteeError(ValueError):
    """Not enough eligible nodes, or malformed committee shape."""


class AnchorError(ValueError):
    """Attempt to anchor an unfinalized or unknown shard head."""


class ZoneError(ValueError):
    """Zone lookup failed."""


def _coord(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion
    return Fraction(x)


@dataclass(frozen=True, slots=True)
class Zone:
    """Half-open lat/lon rectangle: [west, east) x [south, north)."""

    west: Fraction
    east: Fraction
    south: Fraction
    north: Fraction

    def __post_init__(self):
        object.__setattr__(self, "west", _coord(self.west))
        object.__setattr__(self, "east", _coord(self.east))
        object.__setattr__(self, "south", _coord(self.south))
        object.__setattr__(self, "north", _coord(self.north))
        if self.west >= self.east or self.south >= self.north:
            raise ZoneError("zone rectangle must have positive extent")

    def contains(self, lat, lon) -> bool:
        lat, lon = _coord(lat), _coord(lon)
        return self.west <= lon < self.east and self.south <= lat < self.north

    def area(self) -> Fraction:
        return (self.east - self.west) * (self.north - self.south)

    def overlaps(self, other: "Zone") -> bool:
        return (
            self.west < other.east
            and other.west < self.east
            and self.south < other.north
            and other.south < self.north
        )

    def to_json(self) -> dict:
        return {
            "west": str(self.west),
            "east": str(self.east),
            "south": str(self.south),
            "north": str(self.north),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Zone":
        return cls(
            west=Fraction(obj["west"]),
            east=Fraction(obj["east"]),
            south=Fraction(obj["south"]),
            north=Fraction(obj["north"]),
        )


def zones_tile(parent: Zone, zones) -> bool:
    """Exact audit: do the zones partition the parent with no gap/overlap?"""
    zones = list(zones)
    if not zones:
        return False
    if sum(z.area() for z in zones) != parent.area():
        return False
    for z in zones:
        if not (
            parent.west <= z.west
            and z.east <= parent.east
            and parent.south <= z.south
            and z.north <= parent.north
        ):
            return False
    for i, a in enumerate(zones):
        for b in zones[i + 1 :]:
            if a.overlaps(b):
                return False
    return True


@dataclass(frozen=True, slots=True)
class PeerRecord:
    peer_id: str
    lat: Fraction
    lon: Fraction
    key: str
    stake: int = 1


@dataclass(frozen=True, slots=True)
class ShardDescriptor:
    shard_id: str
    workchain_id: int
    zone: Zone
    validator_set: Tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "shardId": self.shard_id,
            "workchainId": self.workchain_id,
            "zone": self.zone.to_json(),
            "validators": list(self.validator_set),
        }


@dataclass(frozen=True, slots=True)
class Committee:
    epoch: int
    members: Tuple[str, ...]
    f: int

    def __post_init__(self):
        if len(self.members) != 3 * self.f + 1:
            raise CommitteeError(
                f"committee size {len(self.members)} != 3f+1 for f={self.f}"
            )
        if len(set(self.members)) != len(self.members):
            raise CommitteeError("duplicate committee members")

    @property
    def quorum(self) -> int:
        return 2 * self.f + 1


@dataclass(frozen=True, slots=True)
class Vote:
    node_id: str
    digest: bytes


@dataclass(frozen=True, slots=True)
class MempoolEntry:
    """A committed order: hidden amount, public proof reference only."""

    sender: str
    commitment: int
    proof: balance_proof.Proof
    arrival_tick: int

    def public_view(self) -> dict:
        """What any mempool observer (including an adversary) can see."""
        return {
            "sender": self.sender,
            "commitment": str(self.commitment),
            "arrivalTick": self.arrival_tick,
        }


class Shard:
    """One workchain shard: chain, mempool, pool, and load history."""

    def __init__(self, shard_id: str, workchain_id: int, zone: Zone,
                 genesis_timestamp: int = 0,
                 parent_id: Optional[str] = None,
                 parent_zone: Optional[Zone] = None):
        self.shard_id = shard_id
        self.workchain_id = workchain_id
        self.zone = zone
        self.chain = HeaderChain(genesis_timestamp=genesis_timestamp)
        self.mempool: List[MempoolEntry] = []
        self.pool: Optional[PoolState] = None
        self.lp_liquidity: Dict[str, Fraction] = {}
        self.peers: List[str] = []
        self.failed = False
        self.load_window: List[int] = []
        self.parent_id = parent_id
        self.parent_zone = parent_zone

    @property
    def descriptor(self) -> ShardDescriptor:
        return ShardDescriptor(
            shard_id=self.shard_id,
            workchain_id=self.workchain_id,
            zone=self.zone,
            validator_set=tuple(sorted(self.peers)),
        )

    def blocks_produced(self) -> int:
        return self.chain.tip.height

    def mempool_view(self) -> list:
        return [entry.public_view() for entry in self.mempool]


class Workchain:
    def __init__(self, workchain_id: int, zone: Zone, genesis_timestamp: int = 0):
        self.workchain_id = workchain_id
        self.zone = zone
        self.shards: List[Shard] = [
            Shard(f"shard-{workchain_id}", workchain_id, zone,
                  genesis_timestamp=genesis_timestamp)
        ]

    def shard_for(self, lat, lon) -> Optional[Shard]:
        for shard in self.shards:
            if shard.zone.contains(lat, lon):
                return shard
        return None


class Masterchain:
    """Backbone chain: validator registry plus the shard anchor table."""

    def __init__(self, genesis_timestamp: int = 0):
        self.validators: Dict[str, PeerRecord] = {}
        self.keys: set = set()
        self.anchor_table: Dict[str, dict] = {}
        self.chain = HeaderChain(genesis_timestamp=genesis_timestamp)

    def anchor_root(self) -> bytes:
        blob = json.dumps(self.anchor_table, sort_keys=True,
                          separators=(",", ":"))
        return keccak256(blob.encode())


class Topology:
    """The full two-tier system: masterchain plus geographic workchains."""

    def __init__(self, workchains: List[Workchain], genesis_timestamp: int = 0):
        self.workchains = workchains
        self.master = Masterchain(genesis_timestamp=genesis_timestamp)

    def all_shards(self) -> List[Shard]:
        return [s for wc in self.workchains for s in wc.shards]

    def shard_by_id(self, shard_id: str) -> Shard:
        for shard in self.all_shards():
            if shard.shard_id == shard_id:
                return shard
        raise ZoneError(f"unknown shard {shard_id}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def register_peer(topology: Topology, peer_id: str, lat, lon, key: str,
                  stake: int = 1) -> ShardDescriptor:
    """Admit a peer and place it in the shard covering its location.

    Duplicate peer ids or keys are rejected (one identity per key), and a
    location outside every workchain zone is an error.
    """
    master = topology.master
    if peer_id in master.validators:
        raise RegistrationError(f"peer id {peer_id!r} already registered")
    if key in master.keys:
        raise RegistrationError(f"key {key!r} already registered")
    lat, lon = _coord(lat), _coord(lon)
    for wc in topology.workchains:
        shard = wc.shard_for(lat, lon)
        if shard is not None:
            record = PeerRecord(peer_id=peer_id, lat=lat, lon=lon, key=key,
                                stake=stake)
            master.validators[peer_id] = record
            master.keys.add(key)
            shard.peers.append(peer_id)
            return shard.descriptor
    raise RegistrationError(f"location ({lat}, {lon}) outside all zones")


def select_committee(eligible, epoch: int, f: int, seed) -> Committee:
    """Deterministic pseudo-random committee of 3f+1 nodes for an epoch."""
    eligible = sorted(eligible)
    n = 3 * f + 1
    if len(eligible) < n:
        raise CommitteeError(
            f"need {n} eligible nodes for f={f}, have {len(eligible)}"
        )
    rng = random.Random(f"{seed}/committee/{epoch}")
    return Committee(epoch=epoch, members=tuple(rng.sample(eligible, n)), f=f)


def submit_tx(shard: Shard, entry: MempoolEntry,
              vk: balance_proof.VerificationKey) -> dict:
    """Queue a committed order after checking its balance proof.

    An invalid proof never reaches the mempool — the committee cannot be
    poisoned into accepting a trade larger than the prover's balance.
    """
    if not balance_proof.verify(vk, entry.proof.publics, entry.proof):
        return {"accepted": False, "reason": "invalid balance proof"}
    shard.mempool.append(entry)
    return {"accepted": True, "position": len(shard.mempool) - 1}


def tally_votes(committee: Committee, votes) -> List[bytes]:
    """Digests reaching quorum (2f+1 distinct member votes each)."""
    per_digest: Dict[bytes, set] = {}
    members = set(committee.members)
    for v in votes:
        if v.node_id not in members:
            continue  # non-members carry no voting weight
        per_digest.setdefault(v.digest, set()).add(v.node_id)
    return [d for d, voters in per_digest.items()
            if len(voters) >= committee.quorum]


def produce_block(shard: Shard, committee: Committee, votes, state_root: bytes,
                  timestamp: int) -> Optional[BlockHeader]:
    """Finalize one block iff the proposal digest reaches quorum.

    The proposal is the exact header that would extend the shard chain;
    fewer than 2f+1 matching votes means no block this round.
    """
    if shard.failed:
        return None
    tip = shard.chain.tip
    proposal = header_digest(tip.height + 1, tip.header_hash, timestamp,
                             state_root)
    if proposal not in tally_votes(committee, votes):
        return None
    return shard.chain.append(state_root, timestamp)


def honest_votes(committee: Committee, shard: Shard, state_root: bytes,
                 timestamp: int) -> List[Vote]:
    """Votes of all committee members for the canonical next header."""
    tip = shard.chain.tip
    proposal = header_digest(tip.height + 1, tip.header_hash, timestamp,
                             state_root)
    return [Vote(node_id=m, digest=proposal) for m in committee.members]


def update_anchor(master: Masterchain, shard: Shard) -> None:
    """Write one shard's finalized head into the anchor table.

    The head must be the shard chain's actual tip (an orphaned or
    fabricated header is rejected). A failed shard's unchanged head stays
    in the table flagged stale rather than being dropped or overwritten.
    """
    head = shard.chain.tip
    if shard.chain.headers[head.height].header_hash != head.header_hash:
        raise AnchorError("head is not on the shard chain")
    master.anchor_table[shard.shard_id] = {
        "height": head.height,
        "hash": "0x" + head.header_hash.hex(),
        "stale": shard.failed,
    }


def seal_anchors(master: Masterchain, timestamp: int) -> BlockHeader:
    """Append one masterchain block committing the current anchor table."""
    return master.chain.append(master.anchor_root(), timestamp)


def anchor_to_masterchain(master: Masterchain, shard: Shard,
                          timestamp: int = 0) -> BlockHeader:
    """Anchor a single shard head and seal it in a masterchain block."""
    update_anchor(master, shard)
    return seal_anchors(master, timestamp)


def drop_anchor(master: Masterchain, shard_id: str) -> None:
    """Remove a retired shard's entry (used after splits and merges)."""
    master.anchor_table.pop(shard_id, None)


def split_shard(workchain: Workchain, shard: Shard, peer_records,
                genesis_timestamp: int = 0) -> Tuple[Shard, Shard]:
    """Split a shard's zone along its longer axis at the median peer
    coordinate, reassigning peers and dividing pool liquidity in
    proportion to each side's reassigned LP deposits (even halves when
    no LP information exists)."""
    zone = shard.zone
    lon_span = zone.east - zone.west
    lat_span = zone.north - zone.south
    axis = "lon" if lon_span >= lat_span else "lat"
    coords = sorted(
        (peer_records[p].lon if axis == "lon" else peer_records[p].lat)
        for p in shard.peers
    )
    if coords:
        cut = coords[len(coords) // 2]
    else:
        cut = None
    low, high = (zone.west, zone.east) if axis == "lon" else (zone.south, zone.north)
    if cut is None or not low < cut < high:
        cut = (low + high) / 2
    if axis == "lon":
        zone_a = Zone(west=zone.west, east=cut, south=zone.south, north=zone.north)
        zone_b = Zone(west=cut, east=zone.east, south=zone.south, north=zone.north)
    else:
        zone_a = Zone(west=zone.west, east=zone.east, south=zone.south, north=cut)
        zone_b = Zone(west=zone.west, east=zone.east, south=cut, north=zone.north)

    children = []
    for suffix, child_zone in (("0", zone_a), ("1", zone_b)):
        child = Shard(
            shard_id=f"{shard.shard_id}.{suffix}",
            workchain_id=shard.workchain_id,
            zone=child_zone,
            genesis_timestamp=genesis_timestamp,
            parent_id=shard.shard_id,
            parent_zone=zone,
        )
        children.append(child)
    child_a, child_b = children

    for peer_id in shard.peers:
        rec = peer_records[peer_id]
        target = child_a if child_a.zone.contains(rec.lat, rec.lon) else child_b
        target.peers.append(peer_id)
    for lp_id, liquidity in shard.lp_liquidity.items():
        if lp_id in peer_records:
            rec = peer_records[lp_id]
            target = child_a if child_a.zone.contains(rec.lat, rec.lon) else child_b
        else:
            target = child_a
        target.lp_liquidity[lp_id] = liquidity

    if shard.pool is not None:
        w_a = sum(child_a.lp_liquidity.values(), Fraction(0))
        w_b = sum(child_b.lp_liquidity.values(), Fraction(0))
        total = w_a + w_b
        frac_a = w_a / total if total > 0 else Fraction(1, 2)
        e_a = shard.pool.E * frac_a
        m_a = shard.pool.M * frac_a
        e_b = shard.pool.E - e_a
        m_b = shard.pool.M - m_a
        if e_a > 0 and m_a > 0:
            child_a.pool = PoolState(E=e_a, M=m_a, C=e_a * m_a)
        if e_b > 0 and m_b > 0:
            child_b.pool = PoolState(E=e_b, M=m_b, C=e_b * m_b)

    idx = workchain.shards.index(shard)
    workchain.shards[idx : idx + 1] = [child_a, child_b]
    return child_a, child_b


def merge_shards(workchain: Workchain, child_a: Shard, child_b: Shard,
                 genesis_timestamp: int = 0) -> Shard:
    """Fuse a sibling pair back into their parent zone."""
    if child_a.parent_id is None or child_a.parent_id != child_b.parent_id:
        raise ZoneError("only sibling shards from one split can merge")
    merged = Shard(
        shard_id=child_a.parent_id,
        workchain_id=child_a.workchain_id,
        zone=child_a.parent_zone,
        genesis_timestamp=genesis_timestamp,
    )
    merged.peers = sorted(set(child_a.peers) | set(child_b.peers))
    merged.lp_liquidity = {**child_a.lp_liquidity, **child_b.lp_liquidity}
    pools = [s.pool for s in (child_a, child_b) if s.pool is not None]
    if pools:
        e = sum((p.E for p in pools), Fraction(0))
        m = sum((p.M for p in pools), Fraction(0))
        merged.pool = PoolState(E=e, M=m, C=e * m)
    merged.mempool = child_a.mempool + child_b.mempool
    positions = [workchain.shards.index(child_a), workchain.shards.index(child_b)]
    for pos in sorted(positions, reverse=True):
        del workchain.shards[pos]
    workchain.shards.insert(min(positions), merged)
    return merged


def rebalance_shards(workchain: Workchain, thresholds: dict, peer_records,
                     genesis_timestamp: int = 0) -> List[dict]:
    """Apply split/merge rules to every shard; returns event records.

    A shard splits when its mean load over the last window_blocks blocks
    strictly exceeds split_tps; sibling shards merge when each's mean
    load is strictly below merge_tps. No-op otherwise.
    """
    split_tps = thresholds["split_tps"]
    merge_tps = thresholds["merge_tps"]
    window = thresholds["window_blocks"]
    events: List[dict] = []

    def mean_load(shard: Shard) -> Optional[Fraction]:
        if len(shard.load_window) < window:
            return None
        recent = shard.load_window[-window:]
        return Fraction(sum(recent), window)

    for shard in list(workchain.shards):
        load = mean_load(shard)
        if load is not None and load > split_tps and len(shard.peers) >= 2:
            child_a, child_b = split_shard(workchain, shard, peer_records,
                                           genesis_timestamp)
            events.append({
                "event": "split",
                "parent": shard.shard_id,
                "children": [child_a.shard_id, child_b.shard_id],
                "mean_load": str(load),
            })

    by_parent: Dict[str, List[Shard]] = {}
    for shard in workchain.shards:
        if shard.parent_id is not None:
            by_parent.setdefault(shard.parent_id, []).append(shard)
    for parent_id, siblings in by_parent.items():
        if len(siblings) != 2:
            continue
        loads = [mean_load(s) for s in siblings]
        if all(l is not None and l < merge_tps for l in loads):
            merged = merge_shards(workchain, siblings[0], siblings[1],
                                  genesis_timestamp)
            events.append({
                "event": "merge",
                "children": sorted(s.shard_id for s in siblings),
                "merged": merged.shard_id,
            })
    return events


def fail_region(workchain: Workchain, zone: Zone) -> Shard:
    """Silence the validators of the shard covering this zone."""
    for shard in workchain.shards:
        if shard.zone == zone:
            shard.failed = True
            return shard
    raise ZoneError("no active shard matches the given zone")


def recover_region(workchain: Workchain, zone: Zone) -> Shard:
    for shard in workchain.shards:
        if shard.zone == zone:
            shard.failed = False
            return shard
    raise ZoneError("no active shard matches the given zone")
