from __future__ import annotations

from dataclasses import dataclass

import pytest

from chainmart.identity import Identity, generate_identity, hash_payload
from chainmart.marketplace import Marketplace, PlatformConfig
from chainmart.node import SharingNode
from chainmart.records import ProfileRecord


def named_identity(name: str, seed: int = 0) -> Identity:
    return generate_identity(bytes(hash_payload(f"test/{seed}/{name}".encode("utf-8"))))


@dataclass
class World:
    market: Marketplace
    alice: SharingNode
    bob: SharingNode
    acme: SharingNode

    @property
    def chain(self):
        return self.market.chain


def make_world(seed: int = 5, auto_commit: bool = True, config: PlatformConfig | None = None) -> World:
    cfg = config or PlatformConfig()
    validators = [named_identity(f"validator-{i}", seed) for i in range(cfg.validators)]
    people = {name: named_identity(name, seed) for name in ("alice", "bob", "acme")}
    market = Marketplace(
        config=cfg,
        validator_identities=validators,
        genesis_allocations={ident.address: 1000 for ident in people.values()},
        seed=seed,
        auto_commit=auto_commit,
    )
    nodes = {name: market.add_node(ident) for name, ident in people.items()}
    return World(market=market, alice=nodes["alice"], bob=nodes["bob"], acme=nodes["acme"])


@pytest.fixture
def world() -> World:
    return make_world()


def publish(
    node: SharingNode,
    category: str = "purchase-history",
    price: int = 10,
    purposes: tuple[str, ...] = ("analytics",),
    fields: dict | None = None,
    now_ms: int = 100,
):
    record = ProfileRecord(
        owner=node.identity.address,
        category=category,
        fields=fields or {"orders": 3, "total_spent": 120},
    )
    return node.publish_profile(record, list(purposes), price, now_ms)
