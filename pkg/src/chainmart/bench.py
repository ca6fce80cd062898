"""Latency and memory benchmarks over the simulated network.

Three scenarios, all driven by one discrete-event loop on a 10 ms tick grid
with blocks committed on the platform's block interval:

  s1-publish   `items` profile publications spread round-robin over the
               publisher nodes, 40 ms apart.
  s2-retrieve  `items` publications first, then one full
               request/deliver/verify/settle cycle per published item.
  s3-mixed     alternates publish and retrieve 40 ms apart; retrieve k
               targets the k-th item published so far.

Latency samples are sim-clock millisecond counts:

  publish   block commit time minus the publish call time
  retrieve  tick at which the requester verified the plaintext, minus the
             request call time
  settle    commit time of the settlement anchor, minus the request time

Wall columns time the initiating library call (for settle, the block commit
that included the anchor). They depend on the host machine and are reported
for orientation only; every determinism claim is about the sim columns.

Memory is deterministic resident data, not process RSS: chain export bytes
plus offchain store bytes plus in-flight queue entries at nominal record
size, sampled every tick, peak reported.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

from .encoding import parse_canonical_json
from .errors import BadConfig
from .escrow import TERMINAL_STATES
from .identity import Identity, generate_identity, hash_payload
from .ledger import export_chain, export_line
from .marketplace import Marketplace, PlatformConfig
from .records import QUEUE_FAILED, QUEUE_VERIFIED, ProfileRecord
from .simnet import LinkSpec, SimNet

SCENARIOS = ("s1-publish", "s2-retrieve", "s3-mixed")
CSV_HEADER = (
    "scenario,op_kind,count,sim_p50_ms,sim_p95_ms,sim_max_ms,"
    "wall_p50_ms,wall_p95_ms,data_bytes_peak"
)

OP_SPACING_MS = 40
TICK_MS = 10
LISTING_PRICE = 2
LISTING_CATEGORY = "purchase-history"
LISTING_PURPOSE = "analytics"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    nodes: int = 4
    items: int = 100
    link_latency_ms: int = 50
    drop_rate: float = 0.0
    seed: int = 7
    record_bytes: int = 256

    def validate(self) -> None:
        if self.name not in SCENARIOS:
            raise BadConfig(f"unknown scenario {self.name!r}, expected one of {SCENARIOS}")
        if self.nodes < 2:
            raise BadConfig("need at least 2 nodes (one publisher, one requester)")
        if self.items < 1:
            raise BadConfig("items must be >= 1")
        if self.link_latency_ms < 0:
            raise BadConfig("link latency must be >= 0")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise BadConfig("drop rate must be within [0, 1]")
        if self.record_bytes < 1:
            raise BadConfig("record_bytes must be >= 1")


@dataclass(frozen=True)
class MetricsRow:
    scenario: str
    op_kind: str
    count: int
    sim_p50_ms: int
    sim_p95_ms: int
    sim_max_ms: int
    wall_p50_ms: float
    wall_p95_ms: float
    data_bytes_peak: int


@dataclass
class MetricsReport:
    scenario: str
    rows: list[MetricsRow] = field(default_factory=list)
    chain_bytes: int = 0
    store_bytes: int = 0


def nearest_rank(values: list, p: int):
    # classic nearest-rank: smallest value with cumulative share >= p%
    ordered = sorted(values)
    k = max(1, math.ceil(p / 100 * len(ordered)))
    return ordered[k - 1]


def _bench_identity(seed: int, role: str) -> Identity:
    material = hash_payload(f"chainmart/bench/{seed}/{role}".encode("utf-8"))
    return generate_identity(bytes(material))


def _record(owner, seq: int, record_bytes: int) -> ProfileRecord:
    return ProfileRecord(
        owner=owner,
        category=LISTING_CATEGORY,
        fields={"seq": seq, "blob": "x" * record_bytes},
    )


@dataclass
class _Retrieval:
    entry: object
    contract_id: bytes
    started_ms: int
    done: bool = False


def run_scenario(cfg: ScenarioConfig) -> MetricsReport:
    cfg.validate()
    platform = PlatformConfig()
    validators = [_bench_identity(cfg.seed, f"validator-{i}") for i in range(platform.validators)]
    publishers = [_bench_identity(cfg.seed, f"publisher-{i}") for i in range(cfg.nodes - 1)]
    requester_id = _bench_identity(cfg.seed, "requester")

    # ample funding: worst case each cycle transiently locks price + collateral
    grant = 1000 + 8 * cfg.items
    genesis = {identity.address: grant for identity in publishers + [requester_id]}
    link = LinkSpec(one_way_latency_ms=cfg.link_latency_ms, drop_rate=cfg.drop_rate)
    market = Marketplace(
        config=platform,
        validator_identities=validators,
        genesis_allocations=genesis,
        seed=cfg.seed,
        chain_id=f"chainmart-bench-{cfg.name}",
        auto_commit=False,
        net=SimNet(seed=cfg.seed, default_link=link),
    )
    pub_nodes = [market.add_node(identity) for identity in publishers]
    requester = market.add_node(requester_id)

    # (time_ms, kind, op_index); retrieve k always targets the k-th listing,
    # so no digest is ever requested twice and requests never collide
    schedule: list[tuple[int, str, int]] = []
    if cfg.name == "s1-publish":
        for k in range(cfg.items):
            schedule.append((OP_SPACING_MS * k, "publish", k))
    elif cfg.name == "s2-retrieve":
        for k in range(cfg.items):
            schedule.append((OP_SPACING_MS * k, "publish", k))
        base = OP_SPACING_MS * cfg.items
        for k in range(cfg.items):
            schedule.append((base + OP_SPACING_MS * k, "retrieve", k))
    else:
        pub_i = 0
        ret_i = 0
        for j in range(cfg.items):
            if j % 2 == 0:
                schedule.append((OP_SPACING_MS * j, "publish", pub_i))
                pub_i += 1
            else:
                schedule.append((OP_SPACING_MS * j, "retrieve", ret_i))
                ret_i += 1

    listings: list = []
    pending_publish: dict[bytes, int] = {}
    retrievals: list[_Retrieval] = []
    pending_settle: dict[bytes, int] = {}
    sim_samples = {"publish": [], "retrieve": [], "settle": []}
    wall_samples = {"publish": [], "retrieve": [], "settle": []}

    chain = market.chain
    exported = len(export_line(chain, 0)) + 1
    seen_blocks = 1
    peak = 0
    horizon = (schedule[-1][0] if schedule else 0) + 120_000
    cursor = 0
    now = 0

    while True:
        while cursor < len(schedule) and schedule[cursor][0] <= now:
            _, kind, op_i = schedule[cursor]
            cursor += 1
            if kind == "publish":
                node = pub_nodes[op_i % len(pub_nodes)]
                record = _record(node.identity.address, op_i, cfg.record_bytes)
                t0 = time.perf_counter()
                item = node.publish_profile(record, [LISTING_PURPOSE], LISTING_PRICE, now)
                wall_samples["publish"].append((time.perf_counter() - t0) * 1000.0)
                pending_publish[bytes(item.txid)] = now
                listings.append(item)
            else:
                listing = listings[op_i]
                t0 = time.perf_counter()
                entry = requester.request_data(listing, LISTING_PURPOSE, now)
                wall_samples["retrieve"].append((time.perf_counter() - t0) * 1000.0)
                retrievals.append(_Retrieval(entry=entry, contract_id=entry.contract_id, started_ms=now))
                pending_settle[entry.contract_id] = now

        market.tick_all(now)

        for r in retrievals:
            if r.done:
                continue
            if r.entry.state == QUEUE_VERIFIED:
                sim_samples["retrieve"].append(now - r.started_ms)
                r.done = True
            elif r.entry.state == QUEUE_FAILED:
                pending_settle.pop(r.contract_id, None)
                r.done = True

        if now % platform.block_interval_ms == 0:
            t0 = time.perf_counter()
            market.commit_block(now)
            commit_wall = (time.perf_counter() - t0) * 1000.0
            while seen_blocks < len(chain.blocks):
                block = chain.blocks[seen_blocks]
                exported += len(export_line(chain, seen_blocks)) + 1
                for tx in block.txs:
                    started = pending_publish.pop(bytes(tx.txid), None)
                    if started is not None:
                        sim_samples["publish"].append(now - started)
                    if tx.kind == "ContractTx":
                        body = _contract_payload(tx)
                        if body.get("op") == "settle":
                            cid = bytes.fromhex(body["contract_id"])
                            started = pending_settle.pop(cid, None)
                            if started is not None:
                                sim_samples["settle"].append(now - started)
                                wall_samples["settle"].append(commit_wall)
                seen_blocks += 1

        in_flight = market.net.pending_count() + sum(1 for r in retrievals if not r.done)
        current = exported + market.store.total_bytes() + in_flight * cfg.record_bytes
        peak = max(peak, current)

        settled = all(
            market.escrow.get(r.contract_id).state in TERMINAL_STATES for r in retrievals
        )
        drained = (
            cursor >= len(schedule)
            and not pending_publish
            and not pending_settle
            and all(r.done for r in retrievals)
            and settled
            and market.net.pending_count() == 0
            and not chain.mempool
        )
        if drained or now >= horizon:
            break
        now += TICK_MS

    report = MetricsReport(scenario=cfg.name)
    report.chain_bytes = len(export_chain(chain))
    report.store_bytes = market.store.total_bytes()
    for kind in ("publish", "retrieve", "settle"):
        sims = sim_samples[kind]
        if not sims:
            continue
        walls = wall_samples[kind] or [0.0]
        report.rows.append(
            MetricsRow(
                scenario=cfg.name,
                op_kind=kind,
                count=len(sims),
                sim_p50_ms=nearest_rank(sims, 50),
                sim_p95_ms=nearest_rank(sims, 95),
                sim_max_ms=max(sims),
                wall_p50_ms=round(nearest_rank(walls, 50), 3),
                wall_p95_ms=round(nearest_rank(walls, 95), 3),
                data_bytes_peak=peak,
            )
        )
    return report


def _contract_payload(tx) -> dict:
    try:
        return parse_canonical_json(tx.payload)
    except Exception:
        return {}


def write_csv(report: MetricsReport, path: str) -> None:
    """CSV with the fixed header; OSError propagates for unwritable paths."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for row in report.rows:
            writer.writerow(
                [
                    row.scenario,
                    row.op_kind,
                    row.count,
                    row.sim_p50_ms,
                    row.sim_p95_ms,
                    row.sim_max_ms,
                    f"{row.wall_p50_ms:.3f}",
                    f"{row.wall_p95_ms:.3f}",
                    row.data_bytes_peak,
                ]
            )
