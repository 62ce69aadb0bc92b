"""Command line entry point: run scenarios, verify their artifacts.

``privamm run scenario.json --out DIR`` executes a scenario and writes
four artifacts: ``run.jsonl`` (the full public event log), ``metrics.csv``
(per-shard per-block-round counters), ``attack_report.csv`` (adversary
experiment statistics), and ``summary.json`` (group parameters,
verification key, final shard states, and a digest of the event log).

``privamm verify DIR`` re-checks the artifacts from scratch: every block
header digest and parent link, every balance proof against the recorded
verification key, every account proof against the state root of the
block it names, anchor-table completeness and its binding into the
masterchain, constant-product bounds on published pools, and every
commitment opening. Exit codes: 0 success, 1 configuration or usage
error, 2 runtime invariant or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from typing import List, Tuple

from . import balance_proof, trie as trie_mod
from .field_group import GroupParams, Opening, pedersen_verify_opening
from .keccak import keccak256
from .scenario import ScenarioError, load_scenario
from .simulator import METRICS_FIELDS, SimulationError, Simulator
from .trie import GENESIS_PARENT, MptProof, header_digest

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

ATTACK_FIELDS = ("strategy", "mode", "trials", "mean_profit", "std_err")


def write_artifacts(out_dir: str, sim: Simulator, summary: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    log_bytes = sim.log.to_jsonl().encode()
    with open(os.path.join(out_dir, "run.jsonl"), "wb") as fh:
        fh.write(log_bytes)

    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_FIELDS)
        writer.writeheader()
        writer.writerows(sim.metrics_rows)

    with open(os.path.join(out_dir, "attack_report.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ATTACK_FIELDS)
        writer.writeheader()
        writer.writerows(sim.attack_rows)

    summary = dict(summary)
    summary["logSha256"] = hashlib.sha256(log_bytes).hexdigest()
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    if args.seed is not None:
        config.seed = args.seed
    sim = Simulator(config)
    summary = sim.run()
    write_artifacts(args.out, sim, summary)
    trades = summary["trades"]
    print(f"run complete: seed={summary['seed']} "
          f"shards={len(summary['shards'])} "
          f"master_height={summary['master']['height']} "
          f"settled={trades['settled']}/{trades['scheduled']} "
          f"-> {args.out}")
    return EXIT_OK


class _Verifier:
    """Replays one artifact directory; collects pass/fail check lines."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.lines: List[str] = []
        self.failed = False

    def check(self, ok: bool, label: str, detail: str = "") -> bool:
        if ok:
            self.lines.append(f"ok: {label}")
        else:
            self.failed = True
            suffix = f" ({detail})" if detail else ""
            self.lines.append(f"FAIL: {label}{suffix}")
        return ok

    def _read(self, name: str):
        path = os.path.join(self.out_dir, name)
        if not os.path.exists(path):
            self.check(False, f"{name} present")
            return None
        with open(path, "rb") as fh:
            return fh.read()

    def run(self) -> int:
        summary_bytes = self._read("summary.json")
        log_bytes = self._read("run.jsonl")
        if summary_bytes is None or log_bytes is None:
            return EXIT_RUNTIME
        try:
            summary = json.loads(summary_bytes)
            params = GroupParams.from_json(summary["group"])
            vk = balance_proof.VerificationKey.from_json(summary["vk"])
        except (ValueError, KeyError) as exc:
            self.check(False, "summary.json well-formed", str(exc))
            return EXIT_RUNTIME
        self.check(True, "summary.json well-formed")

        self.check(
            hashlib.sha256(log_bytes).hexdigest() == summary.get("logSha256"),
            "event log digest matches summary",
        )

        try:
            events = [json.loads(line) for line in log_bytes.splitlines()]
        except ValueError as exc:
            self.check(False, "run.jsonl well-formed", str(exc))
            return EXIT_RUNTIME
        self.check(True, "run.jsonl well-formed")

        roots = self._verify_chains(events)
        self._verify_proofs(events, vk, roots)
        self._verify_anchors(events, summary)
        self._verify_pools(events)
        self._verify_openings(events, params)
        self._verify_tables(summary)
        return EXIT_RUNTIME if self.failed else EXIT_OK

    # -- individual passes ---------------------------------------------------

    def _verify_chains(self, events) -> dict:
        """Recompute every header digest and parent link; returns the
        headerHash -> stateRoot map used by the proof pass."""
        tips: dict = {}
        roots: dict = {}
        ok = True
        bad = ""
        count = 0
        for ev in events:
            if ev.get("event") != "block":
                continue
            count += 1
            h = ev["header"]
            height = h["height"]
            parent = bytes.fromhex(h["parentHash"][2:])
            state_root = bytes.fromhex(h["stateRoot"][2:])
            header_hash = bytes.fromhex(h["headerHash"][2:])
            if header_digest(height, parent, h["timestamp"],
                             state_root) != header_hash:
                ok, bad = False, f"digest mismatch at {ev['chain']}#{height}"
                break
            chain = ev["chain"]
            if chain not in tips:
                if height != 0 or parent != GENESIS_PARENT:
                    ok, bad = False, f"bad genesis for {chain}"
                    break
            else:
                prev_height, prev_hash = tips[chain]
                if height != prev_height + 1 or parent != prev_hash:
                    ok, bad = False, f"broken link at {chain}#{height}"
                    break
            tips[chain] = (height, header_hash)
            roots[header_hash] = state_root
        self.check(ok, f"block headers replay ({count} headers)", bad)
        return roots

    def _verify_proofs(self, events, vk, roots) -> None:
        ok = True
        bad = ""
        count = 0
        for ev in events:
            if ev.get("event") not in ("init_balance_proof",
                                       "trade_proof_published"):
                continue
            count += 1
            try:
                proof = balance_proof.Proof.from_json(ev["proof"])
            except (ValueError, KeyError) as exc:
                ok, bad = False, f"malformed proof: {exc}"
                break
            if not balance_proof.verify(vk, proof.publics, proof):
                ok, bad = False, f"balance proof rejected for {ev['actor']}"
                break
            mpt = MptProof.from_json(ev["accountProof"])
            if mpt.header_hash not in roots:
                ok, bad = False, f"account proof for {ev['actor']} names an unknown header"
                break
            try:
                leaf = trie_mod.verify_account_proof(
                    roots[mpt.header_hash], mpt.address, mpt
                )
            except trie_mod.VerificationError as exc:
                ok, bad = False, f"account proof for {ev['actor']}: {exc}"
                break
            leaf_rlp = trie_mod.encode_account_leaf(leaf)
            if balance_proof.hash_limbs(keccak256(leaf_rlp)) != proof.publics.leaf_hash:
                ok, bad = False, f"proof leaf differs from account state for {ev['actor']}"
                break
            threshold = (proof.publics.k_hi << 128) | proof.publics.k_lo
            bal_hi, bal_lo = balance_proof.decode_balance(leaf_rlp)
            if (bal_hi << 128) | bal_lo < threshold:
                ok, bad = False, f"balance below proven threshold for {ev['actor']}"
                break
        self.check(ok, f"balance and account proofs replay ({count} proofs)", bad)

    def _verify_anchors(self, events, summary) -> None:
        master_root_at = {}
        for ev in events:
            if ev.get("event") == "block" and ev.get("chain") == "master":
                master_root_at[ev["header"]["height"]] = ev["header"]["stateRoot"]
        ok = True
        bad = ""
        count = 0
        heights = []
        for ev in events:
            if ev.get("event") != "anchors":
                continue
            count += 1
            heights.append(ev["masterHeight"])
            missing = [sid for sid in ev["live"] if sid not in ev["table"]]
            if missing:
                ok, bad = False, f"live shards missing anchors: {missing}"
                break
            blob = json.dumps(ev["table"], sort_keys=True,
                              separators=(",", ":")).encode()
            expected = "0x" + keccak256(blob).hex()
            if master_root_at.get(ev["masterHeight"]) != expected:
                ok, bad = False, f"anchor table not bound at height {ev['masterHeight']}"
                break
        if ok:
            # Every masterchain block after genesis seals exactly one
            # anchor round; gaps mean withheld anchors.
            tip = max(master_root_at, default=0)
            expected_heights = list(range(1, tip + 1))
            if heights != expected_heights:
                ok, bad = False, (f"anchor rounds cover master heights "
                                  f"{heights}, expected {expected_heights}")
        self.check(ok, f"anchor tables complete and bound ({count} rounds)", bad)

    def _verify_pools(self, events) -> None:
        ok = True
        bad = ""
        count = 0
        for ev in events:
            if ev.get("event") not in ("pool_opened", "pool_published"):
                continue
            count += 1
            e_s, m_s, c2 = int(ev["Es"]), int(ev["Ms"]), int(ev["C2"])
            if e_s <= 0 or m_s <= 0:
                ok, bad = False, f"non-positive reserves at tick {ev['tick']}"
                break
            if 2 * abs(e_s * m_s - c2) > e_s:
                ok, bad = False, f"pool off the curve at tick {ev['tick']}"
                break
        self.check(ok, f"published pools on the constant-product curve "
                       f"({count} states)", bad)

    def _verify_openings(self, events, params) -> None:
        last_commitment: dict = {}
        ok = True
        bad = ""
        count = 0
        for ev in events:
            if ev.get("event") in ("order_committed", "init_commitment"):
                last_commitment[ev["actor"]] = int(ev["commitment"])
            elif ev.get("event") == "commitment_opened":
                count += 1
                commitment = last_commitment.get(ev["actor"])
                if commitment is None:
                    ok, bad = False, f"opening without commitment by {ev['actor']}"
                    break
                opening = Opening(x=int(ev["y"]), r=int(ev["r"]))
                if not pedersen_verify_opening(params, commitment, opening):
                    ok, bad = False, f"opening by {ev['actor']} does not verify"
                    break
        self.check(ok, f"commitment openings verify ({count} openings)", bad)

    def _verify_tables(self, summary) -> None:
        metrics = self._read("metrics.csv")
        if metrics is None:
            return
        reader = csv.DictReader(metrics.decode().splitlines())
        ok = tuple(reader.fieldnames or ()) == METRICS_FIELDS
        bad = "unexpected header" if not ok else ""
        rows = 0
        if ok:
            for row in reader:
                rows += 1
                try:
                    int(row["tick"]), int(row["tx_count"]), int(row["blocks"])
                    num, den = row["adversary_profit"].split("/")
                    int(num), int(den)
                except (KeyError, ValueError) as exc:
                    ok, bad = False, f"row {rows}: {exc}"
                    break
        self.check(ok, f"metrics.csv well-formed ({rows} rows)", bad)

        attack = self._read("attack_report.csv")
        if attack is None:
            return
        reader = csv.DictReader(attack.decode().splitlines())
        ok = tuple(reader.fieldnames or ()) == ATTACK_FIELDS
        self.check(ok, "attack_report.csv well-formed")


def verify_artifacts(out_dir: str) -> Tuple[int, List[str]]:
    """Re-check a run's artifacts; returns (exit code, check lines)."""
    verifier = _Verifier(out_dir)
    code = verifier.run()
    return code, verifier.lines


def cmd_verify(args) -> int:
    if not os.path.isdir(args.out):
        raise ScenarioError("$", f"not an artifact directory: {args.out}")
    code, lines = verify_artifacts(args.out)
    for line in lines:
        print(line)
    print("verification passed" if code == EXIT_OK else "verification FAILED")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privamm",
        description="Private energy-market simulator: run scenarios and "
                    "verify their artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to the scenario JSON")
    p_run.add_argument("--out", default="out", help="artifact directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="re-check run artifacts")
    p_verify.add_argument("out", help="artifact directory to verify")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
