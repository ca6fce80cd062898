"""Shared market state: one chain, one store, one token ledger, many nodes.

The marketplace owns the pieces every participant shares and the glue rules
between them:

* every escrow transition is anchored on chain as a ContractTx signed by the
  acting party, before anything else observes the new state;
* every audit row is appended to the local log and published on the "audit"
  stream; a denial's means-txid is the publication itself (zero digest in
  the on-chain body, the real txid in the local row);
* every settled sale appends a reward entry for the data owner in the same
  step, which is what makes rewards visible immediately;
* the token ledger is the executor and the chain is the notary: balances
  move in the ledger, transactions prove the moves happened.

Time is external. Callers pass now_ms everywhere; touch() only keeps the
high-water mark so views (rewards, discovery) know the current instant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from .encoding import canonical_json_bytes
from .errors import BadConfig
from .escrow import EscrowContract, EscrowEngine, TokenLedger
from .identity import Address, Digest32, Entropy, Identity, ZERO_DIGEST, hash_payload
from .ledger import (
    Block,
    Chain,
    ChainConfig,
    init_chain,
    make_tx,
    produce_block,
    publish_stream_item,
    submit_tx,
)
from .node import SharingNode
from .records import AuditEntry, ConsentPolicy, RewardEntry
from .simnet import SimNet
from .store import OffchainStore


@dataclass
class PlatformConfig:
    validators: int = 4
    block_interval_ms: int = 100
    collateral_policy: float = 1.0  # collateral = ceil(price * this)
    dispute_window_ms: int = 2000
    retry_timeout_ms: int = 500
    max_attempts: int = 3
    store_dir: Optional[str] = None

    @classmethod
    def from_file(cls, path: str) -> "PlatformConfig":
        raw = json.loads(open(path).read())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise BadConfig(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**raw)
        if cfg.validators < 1:
            raise BadConfig("validators must be >= 1")
        if cfg.block_interval_ms <= 0:
            raise BadConfig("block_interval_ms must be positive")
        if cfg.collateral_policy <= 0:
            raise BadConfig("collateral_policy must be positive")
        if cfg.max_attempts < 1:
            raise BadConfig("max_attempts must be >= 1")
        return cfg


class Marketplace:
    def __init__(
        self,
        config: PlatformConfig,
        validator_identities: list[Identity],
        genesis_allocations: dict[Address, int],
        seed: int = 0,
        chain_id: str = "chainmart",
        auto_commit: bool = False,
        net: Optional[SimNet] = None,
    ) -> None:
        self.config = config
        self.entropy = Entropy(seed)
        chain_config = ChainConfig(
            chain_id=chain_id,
            validators=tuple(v.address for v in validator_identities),
            block_interval_ms=config.block_interval_ms,
            genesis_allocations=dict(genesis_allocations),
        )
        self.chain: Chain = init_chain(chain_config, validator_identities)
        self.store = OffchainStore(config.store_dir)
        self.ledger = TokenLedger()
        for addr, amount in sorted(genesis_allocations.items(), key=lambda kv: kv[0].hex()):
            self.ledger.mint(addr, amount)
        self.escrow = EscrowEngine(self.ledger, anchor=self._anchor_contract)
        self.net = net if net is not None else SimNet(seed=seed)
        self.nodes: dict[Address, SharingNode] = {}
        self.identities: dict[Address, Identity] = {v.address: v for v in validator_identities}
        self.audit_log: list[AuditEntry] = []
        self.reward_log: list[RewardEntry] = []
        self.contract_anchors: dict[tuple[bytes, str], Digest32] = {}
        self._listings: dict[bytes, dict] = {}
        self.now_ms = 0
        self.auto_commit = auto_commit

    # windows derived from the retry policy: a fetch gets its full retry
    # budget to fund the provider side, then a fixed grace to deliver
    @property
    def funding_window_ms(self) -> int:
        return self.config.retry_timeout_ms * self.config.max_attempts

    @property
    def delivery_window_ms(self) -> int:
        return 1000

    def touch(self, now_ms: int) -> None:
        if now_ms > self.now_ms:
            self.now_ms = now_ms

    def collateral_for(self, price: int) -> int:
        return max(1, math.ceil(price * self.config.collateral_policy))

    def add_node(self, identity: Identity) -> SharingNode:
        node = SharingNode(identity, self)
        self.nodes[identity.address] = node
        self.identities[identity.address] = identity
        return node

    def policy_for(self, owner: Address, category: str) -> Optional[ConsentPolicy]:
        node = self.nodes.get(owner)
        return node.policies.get(category) if node else None

    def note_listing(self, digest: Digest32, category: str, price: int, owner: Address) -> None:
        self._listings[bytes(digest)] = {"category": category, "price": price, "owner": owner}

    def listing_category(self, digest: Digest32) -> str:
        return self._listings.get(bytes(digest), {}).get("category", "")

    def _anchor_contract(self, op: str, contract: EscrowContract, actor: Address) -> None:
        identity = self.identities[actor]
        payload = {
            "op": op,
            "contract_id": contract.id.hex(),
            "state": contract.state,
            "provider": contract.provider.hex(),
            "consumer": contract.consumer.hex(),
            "price": contract.price,
            "collateral": contract.collateral,
        }
        tx = make_tx(identity, "ContractTx", payload, self.chain.next_nonce(identity.address))
        submit_tx(self.chain, tx)
        self.contract_anchors[(bytes(contract.id), op)] = tx.txid
        if op == "settle":
            self.reward_log.append(
                RewardEntry(
                    customer=contract.provider,
                    amount=contract.price,
                    contract_id=contract.id,
                    when_ms=self.now_ms,
                    category=self.listing_category(contract.item_digest),
                )
            )

    def append_audit(self, entry: AuditEntry, author: Identity) -> Digest32:
        body = entry.to_record()
        txid = publish_stream_item(
            self.chain,
            author,
            "audit",
            keys=[entry.category or "uncategorized", entry.outcome],
            payload_digest=hash_payload(canonical_json_bytes(body)),
            key_commitment=ZERO_DIGEST,
            offchain_ref=ZERO_DIGEST,
            metadata=body,
        )
        if entry.means_txid is None:
            entry.means_txid = txid
        self.audit_log.append(entry)
        if self.auto_commit:
            self.commit_block(self.now_ms)
        return txid

    def audit_query(
        self,
        who: Optional[Address] = None,
        whom: Optional[Address] = None,
        category: Optional[str] = None,
        since_ms: Optional[int] = None,
    ) -> list[AuditEntry]:
        out = []
        for entry in self.audit_log:
            if who is not None and entry.who != who:
                continue
            if whom is not None and entry.whom != whom:
                continue
            if category is not None and entry.category != category:
                continue
            if since_ms is not None and entry.when_ms < since_ms:
                continue
            out.append(entry)
        return out

    def rewards_for(self, customer: Address) -> list[RewardEntry]:
        return [r for r in self.reward_log if r.customer == customer]

    def commit_block(self, now_ms: int, force: bool = False) -> Optional[Block]:
        """Produce the next block (round-robin) if there is anything to commit."""
        if not self.chain.mempool and not force:
            return None
        return produce_block(self.chain, self.chain.next_validator(), now_ms)

    def tick_all(self, now_ms: int) -> int:
        self.touch(now_ms)
        return sum(node.tick(now_ms) for node in list(self.nodes.values()))

    def advance(self, until_ms: int, step_ms: Optional[int] = None) -> int:
        """Walk simulated time forward, ticking every node and committing
        blocks on the block-interval cadence."""
        step = step_ms or self.config.block_interval_ms
        events = 0
        t = self.now_ms
        while t < until_ms:
            t = min(t + step, until_ms)
            events += self.tick_all(t)
            self.commit_block(t)
        return events
