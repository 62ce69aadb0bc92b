"""Deterministic tick-loop simulation of the sharded private market.

One run wires every layer together: a masterchain anchoring geographic
workchain shards, per-shard account tries and header chains, an init
phase that opens each shard's pool from secret LP deposits, committed
orders settled through single-round MPC, committee-voted block
production, load-driven shard splits and merges, regional failures, and
optional adversary experiments on the side.

Determinism is load-bearing: every random draw comes from a named
stream derived from the scenario seed (one stream per shard, one for
latency, one per adversary experiment), timestamps are tick numbers,
and all output iteration orders are sorted. Two runs of the same
scenario produce byte-identical artifacts; a failure injected into one
shard cannot perturb any other shard's stream.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import balance_proof, field_group, sharding, trie as trie_mod
from .adversary import AttackReport, run_arbitrage, run_frontrun, run_sandwich
from .amm import (LiquidityError, Order, PoolState, apply_trade,
                  pool_init, quote_buy, quote_sell)
from .keccak import keccak256
from .mpc import SCALE, MpcSession, P_MPC
from .protocol import (LpDeposit, PhaseError, RunLog, ScaledPool,
                       reveal_and_settle, run_init_phase, run_trading_phase,
                       round_fraction)
from .scenario import AdversarySpec, ScenarioConfig, TradeSpec
from .sharding import (MempoolEntry, Shard, Topology, Workchain, drop_anchor,
                       honest_votes, produce_block, register_peer,
                       seal_anchors, select_committee, submit_tx,
                       update_anchor)
from .trie import AccountLeaf, HeaderChain, Trie


class SimulationError(Exception):
    """A run-breaking invariant violation; maps to exit code 2."""


#: Balance given to each shard's synthetic load-generator account.
_LOAD_BALANCE = 10**30

METRICS_FIELDS = ("tick", "shard_id", "tx_count", "blocks", "anchors",
                  "adversary_profit")


def peer_address(peer_id: str) -> bytes:
    """20-byte account address derived from the peer identity."""
    return keccak256(b"account:" + peer_id.encode())[:20]


def _load_address(shard_id: str) -> bytes:
    return keccak256(b"load:" + shard_id.encode())[:20]


@dataclass(slots=True)
class ShardRuntime:
    """Mutable per-shard execution state beside the Shard record itself."""

    shard: Shard
    trie: Trie
    rng: random.Random
    session: Optional[MpcSession] = None
    pool_pub: Optional[ScaledPool] = None
    pool_ref: Optional[PoolState] = None
    queue: List[Tuple[int, int, TradeSpec]] = dc_field(default_factory=list)
    load_proof: Optional[balance_proof.Proof] = None
    # Trie handle as of each block height; proofs are built against the
    # state the proof header actually committed, not the live state.
    trie_history: Dict[int, Trie] = dc_field(default_factory=dict)
    anchor_rounds: int = 0
    txs_total: int = 0
    trades_settled: int = 0
    shadow_profit: Fraction = Fraction(0)

    @property
    def shard_id(self) -> str:
        return self.shard.shard_id


class Simulator:
    """Owns one scenario run end to end; see `run`."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.seed = config.seed
        self.log = RunLog()
        self.metrics_rows: List[dict] = []
        self.attack_rows: List[dict] = []
        self.shard_events: List[dict] = []
        self.counters = {
            "scheduled": len(config.trades),
            "settled": 0,
            "rejected": 0,
            "voided": 0,
            "load_txs": 0,
        }
        self.params: Optional[field_group.GroupParams] = None
        self.pk = None
        self.vk = None
        self.topology: Optional[Topology] = None
        self.runtimes: Dict[str, ShardRuntime] = {}
        # Account registry is the single source of truth; shard tries are
        # projections of it onto the resident peer set.
        self.balances: Dict[str, int] = {}
        self.nonces: Dict[str, int] = {}
        self.peer_locations: Dict[str, Tuple[Fraction, Fraction]] = {}
        self.pending: List[Tuple[int, int, TradeSpec]] = []
        self.init_sessions: List[MpcSession] = []
        self.retired_sessions: List[MpcSession] = []

    # -- setup -------------------------------------------------------------

    def _setup_crypto(self):
        self.params = field_group.group_setup(
            self.config.group_bits, seed=f"group:{self.seed}"
        )
        cs = balance_proof.circuit_build()
        self.pk, self.vk = balance_proof.setup(cs, seed=f"setup:{self.seed}")
        self.log.emit(0, "system", "parameters",
                      group=self.params.to_json(), vk=self.vk.to_json())

    def _setup_topology(self):
        self.topology = Topology(
            [Workchain(wc.workchain_id, wc.zone) for wc in self.config.workchains]
        )
        self._log_block(0, "master", self.topology.master.chain.headers[0])
        for peer in self.config.peers:
            descriptor = register_peer(
                self.topology, peer.peer_id, peer.lat, peer.lon,
                key=peer.key, stake=peer.stake,
            )
            self.balances[peer.peer_id] = peer.balance
            self.nonces[peer.peer_id] = 0
            self.peer_locations[peer.peer_id] = (peer.lat, peer.lon)
            self.log.emit(0, peer.peer_id, "peer_registered",
                          shard=descriptor.shard_id)
        for shard in self.topology.all_shards():
            self.runtimes[shard.shard_id] = self._build_runtime(shard, tick=0)

    def _fault_bound(self, shard: Shard) -> Optional[int]:
        """Largest usable f for this shard, capped by the configured bound.

        A shard left with fewer than four peers after a split still runs:
        it just tolerates fewer (possibly zero) faults.
        """
        if not shard.peers:
            return None
        return min(self.config.committee_f, (len(shard.peers) - 1) // 3)

    def _build_runtime(self, shard: Shard, tick: int) -> ShardRuntime:
        trie = Trie()
        for pid in sorted(shard.peers):
            trie = trie.update(
                peer_address(pid),
                AccountLeaf(nonce=self.nonces[pid], balance=self.balances[pid]),
            )
        load_addr = _load_address(shard.shard_id)
        trie = trie.update(load_addr, AccountLeaf(nonce=0, balance=_LOAD_BALANCE))

        shard.chain = HeaderChain(genesis_state_root=trie.root(),
                                  genesis_timestamp=tick)
        self._log_block(tick, shard.shard_id, shard.chain.headers[0])
        for _ in range(self.config.confirmations):
            header = shard.chain.append(trie.root(), tick)
            self._log_block(tick, shard.shard_id, header)

        f = self._fault_bound(shard)
        session = None
        if f is not None and 3 * f + 1 >= 2:
            session = MpcSession(3 * f + 1, modulus=P_MPC,
                                 seed=f"{self.seed}/mpc/{shard.shard_id}")

        leaf = trie.get(load_addr)
        leaf_rlp = trie_mod.encode_account_leaf(leaf)
        publics = balance_proof.PublicInputs.for_leaf(1, leaf_rlp)
        load_proof = balance_proof.prove(
            self.pk, balance_proof.PrivateWitness(leaf_rlp), publics
        )

        return ShardRuntime(
            shard=shard,
            trie=trie,
            rng=random.Random(f"{self.seed}/shard/{shard.shard_id}"),
            session=session,
            load_proof=load_proof,
            trie_history={h: trie
                          for h in range(self.config.confirmations + 1)},
        )

    def _log_block(self, tick: int, chain_id: str, header) -> None:
        self.log.emit(tick, chain_id, "block", chain=chain_id,
                      header=header.to_json())

    # -- init phase ----------------------------------------------------------

    def _run_init(self):
        lp_by_id = {lp.lp_id: lp for lp in self.config.lps}
        for sid in sorted(self.runtimes):
            rt = self.runtimes[sid]
            resident = [lp_by_id[pid] for pid in sorted(rt.shard.peers)
                        if pid in lp_by_id]
            if not resident:
                continue
            f = self._fault_bound(rt.shard)
            if f is None or 3 * f + 1 < 2:
                raise SimulationError(
                    f"shard {sid} has liquidity providers but no usable committee"
                )
            n = 3 * f + 1
            committee = select_committee(rt.shard.peers, epoch=0, f=f,
                                         seed=f"{self.seed}/{sid}")
            self.log.emit(0, sid, "committee", epoch=0,
                          members=list(committee.members))
            session = MpcSession(n, modulus=self.params.q,
                                 seed=f"{self.seed}/initmpc/{sid}")
            self.init_sessions.append(session)
            rng = random.Random(f"{self.seed}/initrng/{sid}")
            deposits = [
                LpDeposit(lp_id=lp.lp_id, address=peer_address(lp.lp_id),
                          liquidity_e=lp.liquidity_e)
                for lp in resident
            ]
            proof_header = rt.shard.chain.header_at(
                rt.shard.chain.tip.height - self.config.confirmations
            )
            result = run_init_phase(
                deposits, session, self.params,
                rt.trie_history[proof_header.height], rt.shard.chain,
                proof_header, self.pk, self.vk,
                confirmations=self.config.confirmations,
                window=self.config.window, now=0,
                m_deposit=self.config.m_deposit, rng=rng, log=self.log, tick=0,
            )
            if result.pool is None:
                continue
            rt.pool_pub = result.pool
            rt.pool_ref = pool_init(Fraction(result.pool.E_s, SCALE),
                                    Fraction(result.pool.M_s, SCALE))
            rt.shard.pool = rt.pool_ref
            for record, lp in zip(result.records, resident):
                if record.included_in_X:
                    rt.shard.lp_liquidity[lp.lp_id] = lp.liquidity_e

    # -- trade scheduling ------------------------------------------------------

    def _schedule_trades(self):
        rng = random.Random(f"{self.seed}/latency")
        for i, spec in enumerate(self.config.trades):
            delay = rng.randint(self.config.latency_low, self.config.latency_high)
            self.pending.append((spec.tick + delay, i, spec))
        self.pending.sort(key=lambda item: (item[0], item[1]))

    def _shard_for_location(self, lat: Fraction, lon: Fraction) -> Optional[Shard]:
        for wc in self.topology.workchains:
            shard = wc.shard_for(lat, lon)
            if shard is not None:
                return shard
        return None

    def _deliver_arrivals(self, tick: int):
        while self.pending and self.pending[0][0] <= tick:
            arrival, seq, spec = self.pending.pop(0)
            lat, lon = self.peer_locations[spec.trader_id]
            shard = self._shard_for_location(lat, lon)
            if shard is None:
                raise SimulationError(
                    f"trader {spec.trader_id} has no covering shard"
                )
            self.runtimes[shard.shard_id].queue.append((arrival, seq, spec))

    # -- failures ----------------------------------------------------------------

    def _apply_failures(self, tick: int):
        for fs in self.config.failures:
            if fs.tick == tick:
                shard = self._find_shard(fs.shard_id)
                sharding.fail_region(
                    self._workchain_of(shard), shard.zone
                )
                self.log.emit(tick, "system", "region_failed",
                              shard=shard.shard_id)
            if fs.recover_tick is not None and fs.recover_tick == tick:
                shard = self._find_shard(fs.shard_id)
                sharding.recover_region(self._workchain_of(shard), shard.zone)
                self.log.emit(tick, "system", "region_recovered",
                              shard=shard.shard_id)

    def _find_shard(self, shard_id: str) -> Shard:
        try:
            return self.topology.shard_by_id(shard_id)
        except sharding.ZoneError as exc:
            raise SimulationError(str(exc)) from exc

    def _workchain_of(self, shard: Shard) -> Workchain:
        for wc in self.topology.workchains:
            if wc.workchain_id == shard.workchain_id:
                return wc
        raise SimulationError(f"shard {shard.shard_id} has no workchain")

    # -- block round -----------------------------------------------------------

    def _inject_load(self, rt: ShardRuntime, tick: int) -> int:
        count = 0
        for spec in self.config.tx_load:
            if not (spec.start_tick <= tick < spec.end_tick):
                continue
            if not rt.shard.zone.contains(spec.lat, spec.lon):
                continue
            for _ in range(spec.per_block):
                value = rt.rng.randrange(self.params.q)
                blind = rt.rng.randrange(self.params.q)
                commitment = field_group.pedersen_commit(self.params, value,
                                                         blind)
                entry = MempoolEntry(
                    sender=f"load:{rt.shard_id}",
                    commitment=commitment,
                    proof=rt.load_proof,
                    arrival_tick=tick,
                )
                result = submit_tx(rt.shard, entry, self.vk)
                if not result["accepted"]:
                    raise SimulationError(
                        f"load transaction rejected: {result['reason']}"
                    )
                count += 1
        self.counters["load_txs"] += count
        return count

    def _settle_queue(self, rt: ShardRuntime, tick: int) -> int:
        due = sorted(
            (item for item in rt.queue if item[0] <= tick),
            key=lambda item: (item[0], item[1]),
        )
        rt.queue = [item for item in rt.queue if item[0] > tick]
        settled = 0
        for _, _, spec in due:
            if self._settle_one(rt, spec, tick):
                settled += 1
        return settled

    def _reject(self, tick: int, spec: TradeSpec, reason: str):
        self.counters["rejected"] += 1
        self.log.emit(tick, spec.trader_id, "order_rejected", side=spec.side,
                      reason=reason)

    def _settle_one(self, rt: ShardRuntime, spec: TradeSpec, tick: int) -> bool:
        if rt.pool_pub is None or rt.pool_ref is None:
            self._reject(tick, spec, "no pool on this shard")
            return False
        if rt.session is None:
            self._reject(tick, spec, "committee too small for private settlement")
            return False
        order = Order(side=spec.side, quantity_e=spec.quantity_e,
                      limit_rate=spec.limit_rate, trader_id=spec.trader_id)

        # Public-side sanity: quote against the exact reference pool. A
        # drained reserve is a run-breaking liquidity error, a violated
        # limit is an ordinary whole-order rejection.
        try:
            if order.side == "buy":
                quote = quote_buy(rt.pool_ref, order.quantity_e)
                limit_ok = quote.effective_price <= order.limit_rate
            else:
                quote = quote_sell(rt.pool_ref, order.quantity_e)
                limit_ok = quote.effective_price >= order.limit_rate
        except LiquidityError as exc:
            raise SimulationError(str(exc)) from exc
        if not limit_ok:
            self._reject(tick, spec, "limit rate violated")
            return False

        proof_header = rt.shard.chain.header_at(
            rt.shard.chain.tip.height - self.config.confirmations
        )
        pool_before_ref = rt.pool_ref
        try:
            trade = run_trading_phase(
                order, peer_address(spec.trader_id), rt.pool_pub, rt.session,
                self.params, rt.trie_history[proof_header.height],
                rt.shard.chain, proof_header,
                self.pk, self.vk, confirmations=self.config.confirmations,
                window=self.config.window, now=tick, rng=rt.rng,
                log=self.log, tick=tick,
            )
        except PhaseError as exc:
            raise SimulationError(str(exc)) from exc
        if trade.voided:
            self.counters["voided"] += 1
            return False
        if not trade.finalized:
            raise SimulationError("trade neither voided nor finalized")

        new_ref, _ = apply_trade(rt.pool_ref, order)
        self._check_drift(rt.shard_id, new_ref, trade.pool_after)
        rt.pool_ref = new_ref
        rt.pool_pub = trade.pool_after
        rt.shard.pool = new_ref
        reveal_and_settle(trade, self.log, tick,
                          reveal_commitment=self.config.reveal_after_trade)
        self._debit_trader(rt, spec.trader_id,
                           trade.pool_after.M_s - trade.pool_before.M_s)
        self.counters["settled"] += 1
        rt.trades_settled += 1

        if self.config.shadow_adversary:
            report = run_sandwich(
                pool_before_ref, order,
                attacker_size=pool_before_ref.E / 20,
                mode="committed", trials=1,
                rng=random.Random(f"{self.seed}/shadow/{rt.shard_id}/{tick}"),
            )
            rt.shadow_profit += report.mean_profit
        return True

    def _check_drift(self, shard_id: str, ref: PoolState, pub: ScaledPool):
        """The published fixed-point pool must track the exact rational one."""
        if ref.E * SCALE != pub.E_s:
            raise SimulationError(
                f"conservation drift on {shard_id}: energy reserve "
                f"{ref.E} != {pub.E_s}/{SCALE}"
            )
        if abs(ref.M * SCALE - pub.M_s) > 1:
            raise SimulationError(
                f"conservation drift on {shard_id}: money reserve "
                f"{ref.M} vs {pub.M_s}/{SCALE}"
            )

    def _debit_trader(self, rt: ShardRuntime, trader_id: str, m_delta: int):
        new_balance = self.balances[trader_id] - m_delta
        if new_balance < 0:
            raise SimulationError(
                f"account {trader_id} cannot cover settled cost"
            )
        self.balances[trader_id] = new_balance
        self.nonces[trader_id] += 1
        rt.trie = rt.trie.update(
            peer_address(trader_id),
            AccountLeaf(nonce=self.nonces[trader_id], balance=new_balance),
        )

    def _block_round(self, tick: int):
        round_counts: Dict[str, int] = {}
        for sid in sorted(self.runtimes):
            rt = self.runtimes[sid]
            tx_count = 0
            if not rt.shard.failed:
                tx_count += self._inject_load(rt, tick)
                tx_count += self._settle_queue(rt, tick)
                f = self._fault_bound(rt.shard)
                if f is not None:
                    committee = select_committee(
                        rt.shard.peers, epoch=rt.shard.chain.tip.height,
                        f=f, seed=f"{self.seed}/{sid}",
                    )
                    votes = honest_votes(committee, rt.shard, rt.trie.root(),
                                         tick)
                    header = produce_block(rt.shard, committee, votes,
                                           rt.trie.root(), tick)
                    if header is not None:
                        self._log_block(tick, sid, header)
                        rt.trie_history[header.height] = rt.trie
                        rt.shard.load_window.append(tx_count)
                        rt.shard.mempool.clear()
                        rt.txs_total += tx_count
            round_counts[sid] = tx_count

        # One masterchain block per round carries every shard's anchor.
        master = self.topology.master
        for sid in sorted(self.runtimes):
            update_anchor(master, self.runtimes[sid].shard)
            self.runtimes[sid].anchor_rounds += 1
        header = seal_anchors(master, tick)
        self._log_block(tick, "master", header)
        live = sorted(sid for sid in self.runtimes
                      if not self.runtimes[sid].shard.failed)
        self.log.emit(tick, "master", "anchors", masterHeight=header.height,
                      table=dict(sorted(master.anchor_table.items())),
                      live=live)

        for sid in sorted(round_counts):
            rt = self.runtimes.get(sid)
            if rt is None:
                continue
            profit = rt.shadow_profit
            self.metrics_rows.append({
                "tick": tick,
                "shard_id": sid,
                "tx_count": round_counts[sid],
                "blocks": rt.shard.blocks_produced(),
                "anchors": rt.anchor_rounds,
                "adversary_profit": f"{profit.numerator}/{profit.denominator}",
            })

        self._rebalance(tick)

    # -- split / merge ------------------------------------------------------------

    def _rebalance(self, tick: int):
        master = self.topology.master
        for wc in self.topology.workchains:
            events = sharding.rebalance_shards(
                wc, self.config.thresholds, master.validators,
                genesis_timestamp=tick,
            )
            for event in events:
                if event["event"] == "split":
                    self._apply_split(event, tick)
                else:
                    self._apply_merge(event, tick)
                record = {"tick": tick, **event}
                self.shard_events.append(record)
                payload = {k: v for k, v in event.items() if k != "event"}
                self.log.emit(tick, "system", f"shard_{event['event']}",
                              **payload)

    def _split_pool(self, parent: ShardRuntime, child_a: Shard,
                    child_b: Shard) -> Dict[str, Optional[ScaledPool]]:
        """Divide the parent's fixed-point pool by LP weight, exactly.

        Child reserves are re-snapped to the quantity grid; the scaled
        totals across both children equal the parent's exactly, so no
        liquidity is created or destroyed by a split.
        """
        if parent.pool_pub is None:
            return {child_a.shard_id: None, child_b.shard_id: None}
        w_a = sum(child_a.lp_liquidity.values(), Fraction(0))
        w_b = sum(child_b.lp_liquidity.values(), Fraction(0))
        total = w_a + w_b
        frac_a = w_a / total if total > 0 else Fraction(1, 2)
        e_a = round_fraction(parent.pool_pub.E_s * frac_a)
        m_a = round_fraction(parent.pool_pub.M_s * frac_a)
        e_b = parent.pool_pub.E_s - e_a
        m_b = parent.pool_pub.M_s - m_a
        pools = {}
        for child, e_s, m_s in ((child_a, e_a, m_a), (child_b, e_b, m_b)):
            if e_s > 0 and m_s > 0:
                pools[child.shard_id] = ScaledPool(E_s=e_s, M_s=m_s,
                                                   C2=e_s * m_s)
            else:
                pools[child.shard_id] = None
        return pools

    def _adopt_pool(self, rt: ShardRuntime, pool: Optional[ScaledPool]):
        rt.pool_pub = pool
        if pool is None:
            rt.pool_ref = None
            rt.shard.pool = None
        else:
            rt.pool_ref = pool_init(Fraction(pool.E_s, SCALE),
                                    Fraction(pool.M_s, SCALE))
            rt.shard.pool = rt.pool_ref

    def _retire_runtime(self, shard_id: str) -> ShardRuntime:
        rt = self.runtimes.pop(shard_id)
        if rt.session is not None:
            self.retired_sessions.append(rt.session)
        drop_anchor(self.topology.master, shard_id)
        return rt

    def _route_queue(self, items):
        for arrival, seq, spec in items:
            lat, lon = self.peer_locations[spec.trader_id]
            shard = self._shard_for_location(lat, lon)
            if shard is None or shard.shard_id not in self.runtimes:
                raise SimulationError(
                    f"pending order from {spec.trader_id} lost its shard"
                )
            self.runtimes[shard.shard_id].queue.append((arrival, seq, spec))

    def _apply_split(self, event: dict, tick: int):
        parent_rt = self._retire_runtime(event["parent"])
        child_a = self.topology.shard_by_id(event["children"][0])
        child_b = self.topology.shard_by_id(event["children"][1])
        pools = self._split_pool(parent_rt, child_a, child_b)
        for child in (child_a, child_b):
            rt = self._build_runtime(child, tick)
            self.runtimes[child.shard_id] = rt
            self._adopt_pool(rt, pools[child.shard_id])
            rt.txs_total = 0
        self._route_queue(parent_rt.queue)

    def _apply_merge(self, event: dict, tick: int):
        retired = [self._retire_runtime(cid) for cid in event["children"]]
        merged = self.topology.shard_by_id(event["merged"])
        rt = self._build_runtime(merged, tick)
        self.runtimes[merged.shard_id] = rt
        pools = [r.pool_pub for r in retired if r.pool_pub is not None]
        if pools:
            e_s = sum(p.E_s for p in pools)
            m_s = sum(p.M_s for p in pools)
            self._adopt_pool(rt, ScaledPool(E_s=e_s, M_s=m_s, C2=e_s * m_s))
        self._route_queue([item for r in retired for item in r.queue])

    # -- adversary experiments -------------------------------------------------

    def _run_adversaries(self, tick: int):
        for i, spec in enumerate(self.config.adversaries):
            report = self._one_adversary(spec, i)
            row = report.to_csv_row()
            self.attack_rows.append(row)
            self.log.emit(tick, "adversary", "attack_report",
                          t_stat=f"{report.t_stat():.12g}", **row)

    def _one_adversary(self, spec: AdversarySpec, index: int) -> AttackReport:
        rng = random.Random(f"{self.seed}/adversary/{index}")
        pool = pool_init(spec.pool_e, spec.pool_m)
        victim = None
        if spec.victim_quantity is not None:
            victim = Order(side=spec.victim_side or "buy",
                           quantity_e=spec.victim_quantity,
                           limit_rate=Fraction(10**12))
        if spec.strategy == "sandwich":
            if spec.attacker_size is None:
                raise SimulationError("sandwich experiment needs attacker_size")
            return run_sandwich(pool, victim, spec.attacker_size, spec.mode,
                                trials=spec.trials, rng=rng,
                                victim_size_range=spec.victim_range)
        if spec.strategy == "frontrun":
            return run_frontrun(pool, victim, spec.mode,
                                attacker_size=spec.attacker_size,
                                trials=spec.trials, rng=rng,
                                victim_size_range=spec.victim_range)
        if spec.pool_b_e is None or spec.pool_b_m is None:
            raise SimulationError("arbitrage experiment needs a second pool")
        pool_b = pool_init(spec.pool_b_e, spec.pool_b_m)
        return run_arbitrage(pool, pool_b, mode=spec.mode)

    # -- summary ------------------------------------------------------------------

    def _mpc_totals(self) -> dict:
        totals = {"offline_rounds": 0, "online_rounds": 0, "messages": 0,
                  "offline_messages": 0}
        sessions = self.init_sessions + self.retired_sessions + [
            rt.session for _, rt in sorted(self.runtimes.items())
            if rt.session is not None
        ]
        for session in sessions:
            for key, value in session.log.to_json().items():
                totals[key] += value
        return totals

    def _summary(self) -> dict:
        shards = []
        for sid in sorted(self.runtimes):
            rt = self.runtimes[sid]
            shards.append({
                "shardId": sid,
                "zone": rt.shard.zone.to_json(),
                "peers": sorted(rt.shard.peers),
                "failed": rt.shard.failed,
                "blocks": rt.shard.blocks_produced(),
                "anchorRounds": rt.anchor_rounds,
                "txs": rt.txs_total,
                "tradesSettled": rt.trades_settled,
                "pool": rt.pool_pub.to_json() if rt.pool_pub else None,
            })
        master = self.topology.master
        return {
            "seed": self.seed,
            "ticks": self.config.ticks,
            "groupBits": self.config.group_bits,
            "confirmations": self.config.confirmations,
            "group": self.params.to_json(),
            "vk": self.vk.to_json(),
            "shards": shards,
            "master": {
                "height": master.chain.tip.height,
                "anchorTable": dict(sorted(master.anchor_table.items())),
            },
            "mpc": self._mpc_totals(),
            "trades": dict(self.counters),
            "shardEvents": self.shard_events,
        }

    # -- main loop -------------------------------------------------------------------

    def run(self) -> dict:
        self._setup_crypto()
        self._setup_topology()
        self._run_init()
        self._schedule_trades()

        for tick in range(self.config.ticks):
            self._apply_failures(tick)
            self._deliver_arrivals(tick)
            if tick > 0 and tick % self.config.block_interval == 0:
                self._block_round(tick)

        self._run_adversaries(self.config.ticks)
        summary = self._summary()
        self.log.emit(self.config.ticks, "system", "run_complete",
                      settled=self.counters["settled"],
                      masterHeight=summary["master"]["height"])
        return summary
