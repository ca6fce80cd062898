"""Protocol-level tests: publish, discover, escrowed retrieval, faults."""

import dataclasses

import pytest

from chainmart.encoding import parse_canonical_json
from chainmart.errors import DuplicateRequest, InsufficientFunds, NotFound, UnknownCategory
from chainmart.escrow import FUNDED, PARTIALLY_FUNDED, REFUNDED, SETTLED, SLASHED
from chainmart.identity import hash_payload
from chainmart.ledger import export_chain, validate_chain
from chainmart.records import (
    AUDIT_DELIVERED,
    AUDIT_DENIED,
    AUDIT_SLASHED,
    QUEUE_FAILED,
    QUEUE_VERIFIED,
    ProfileRecord,
    canonicalize_record,
)
from chainmart.store import StoreRef
from conftest import make_world, publish

CATEGORY = "purchase-history"


def request(world, listing, consumer=None, purpose="analytics", now_ms=1000):
    node = consumer or world.acme
    return node.request_data(listing, purpose, now_ms)


def delivered_rows(market, outcome=AUDIT_DELIVERED):
    return [e for e in market.audit_log if e.outcome == outcome]


class TestPublish:
    def test_listing_lands_on_chain_with_metadata(self, world):
        item = publish(world.alice, price=12, purposes=("analytics", "resale"))
        assert item.height > 0
        assert item.publisher == world.alice.address
        assert item.keys == (CATEGORY,)
        assert item.metadata["price"] == 12
        assert item.metadata["purposes"] == ["analytics", "resale"]
        assert item.metadata["size_bytes"] > 0

    def test_ciphertext_stored_not_plaintext(self, world):
        item = publish(world.alice, fields={"orders": 9})
        blob = world.market.store.get(StoreRef(digest=item.payload_digest))
        assert hash_payload(blob) == item.payload_digest
        assert b"orders" not in blob

    def test_key_commitment_matches_retained_key(self, world):
        item = publish(world.alice)
        key = world.alice.data_keys[bytes(item.payload_digest)]
        assert hash_payload(key) == item.key_commitment

    def test_republish_replaces_consent(self, world):
        publish(world.alice, price=10, purposes=("analytics",))
        publish(world.alice, price=25, purposes=("resale",), now_ms=200)
        policy = world.alice.policies[CATEGORY]
        assert policy.price == 25
        assert policy.allowed_purposes == {"resale"}


class TestDiscover:
    def test_latest_listing_per_owner_wins(self, world):
        publish(world.alice, price=10)
        newer = publish(world.alice, price=11, now_ms=200)
        found = world.acme.discover(CATEGORY, "analytics")
        assert [it.txid for it in found] == [newer.txid]

    def test_multiple_owners_sorted_by_commit_order(self, world):
        first = publish(world.alice)
        second = publish(world.bob, now_ms=150)
        found = world.acme.discover(CATEGORY, "analytics")
        assert [it.txid for it in found] == [first.txid, second.txid]

    def test_revoked_owner_hidden(self, world):
        publish(world.alice)
        publish(world.bob, now_ms=150)
        world.alice.revoke_consent(CATEGORY)
        found = world.acme.discover(CATEGORY, "analytics")
        assert [it.publisher for it in found] == [world.bob.address]

    def test_purpose_filter(self, world):
        publish(world.alice, purposes=("analytics",))
        assert world.acme.discover(CATEGORY, "resale") == []

    def test_price_cap(self, world):
        publish(world.alice, price=30)
        assert world.acme.discover(CATEGORY, "analytics", max_price=29) == []
        assert len(world.acme.discover(CATEGORY, "analytics", max_price=30)) == 1

    def test_unknown_category_is_empty(self, world):
        publish(world.alice)
        assert world.acme.discover("browsing-history", "analytics") == []


class TestHappyPath:
    def test_sale_settles_and_everyone_is_paid(self, world):
        market = world.market
        fields = {"orders": 3, "total_spent": 120}
        listing = publish(world.alice, price=10, fields=fields)

        entry = request(world, listing, now_ms=1000)
        assert market.ledger.balance(world.acme.address) == 980  # price + collateral locked
        market.advance(3000)

        assert entry.state == QUEUE_VERIFIED
        record = ProfileRecord(owner=world.alice.address, category=CATEGORY, fields=fields)
        assert entry.plaintext == canonicalize_record(record)
        assert parse_canonical_json(entry.plaintext)["fields"] == fields

        contract = market.escrow.get(entry.contract_id)
        assert contract.state == SETTLED
        assert market.ledger.balance(world.alice.address) == 1010
        assert market.ledger.balance(world.acme.address) == 990
        assert market.ledger.burned == 0
        market.ledger.assert_conservation()

    def test_exactly_one_delivered_audit_row_with_full_fields(self, world):
        listing = publish(world.alice)
        entry = request(world, listing, purpose="analytics", now_ms=1000)
        world.market.advance(3000)

        rows = delivered_rows(world.market)
        assert len(rows) == 1
        row = rows[0]
        assert row.who == world.acme.address
        assert row.whom == world.alice.address
        assert row.what == listing.payload_digest
        assert row.when_ms >= 1000
        assert row.purpose == "analytics"
        assert row.category == CATEGORY
        assert row.means_stream == "profiles"
        deliver_anchor = world.market.contract_anchors[(bytes(entry.contract_id), "deliver")]
        assert row.means_txid == deliver_anchor

    def test_settlement_is_anchored_on_chain(self, world):
        listing = publish(world.alice)
        entry = request(world, listing, now_ms=1000)
        world.market.advance(3000)

        settle_txid = world.market.contract_anchors[(bytes(entry.contract_id), "settle")]
        tx = world.chain.find_tx(settle_txid)
        payload = parse_canonical_json(tx.payload)
        assert tx.kind == "ContractTx"
        assert payload["op"] == "settle"
        assert payload["state"] == SETTLED
        assert payload["contract_id"] == entry.contract_id.hex()
        assert validate_chain(world.chain) is None

    def test_reward_recorded_for_owner(self, world):
        listing = publish(world.alice, price=17)
        entry = request(world, listing, now_ms=1000)
        world.market.advance(3000)

        rewards = world.market.rewards_for(world.alice.address)
        assert len(rewards) == 1
        assert rewards[0].amount == 17
        assert rewards[0].contract_id == entry.contract_id
        assert rewards[0].category == CATEGORY
        assert world.market.rewards_for(world.acme.address) == []


class TestDenials:
    def settle_out(self, world, entry):
        world.market.advance(world.market.now_ms + 4000)
        return world.market.escrow.get(entry.contract_id)

    def assert_denied(self, world, entry, reason):
        assert entry.state == QUEUE_FAILED
        assert entry.failure_reason == reason
        rows = delivered_rows(world.market, AUDIT_DENIED)
        assert rows and rows[-1].outcome == "Denied"
        assert rows[-1].means_txid is not None  # the audit publication itself

    def test_unknown_item(self, world):
        listing = publish(world.alice)
        bogus = dataclasses.replace(listing, payload_digest=hash_payload(b"no such record"))
        entry = request(world, bogus, now_ms=1000)
        world.market.advance(2000)
        self.assert_denied(world, entry, "unknown-item")
        contract = self.settle_out(world, entry)
        assert contract.state == REFUNDED
        assert world.market.ledger.balance(world.acme.address) == 1000

    def test_data_deleted_wins_over_revocation(self, world):
        listing = publish(world.alice)
        purged = world.alice.purge_data(CATEGORY)
        assert purged == 1
        entry = request(world, listing, now_ms=1000)
        world.market.advance(2000)
        # purge also revokes, but the store lookup answers first
        self.assert_denied(world, entry, "data-deleted")

    def test_consent_revoked(self, world):
        listing = publish(world.alice)
        world.alice.revoke_consent(CATEGORY)
        entry = request(world, listing, now_ms=1000)
        world.market.advance(2000)
        self.assert_denied(world, entry, "consent-revoked")

    def test_consent_expired(self, world):
        listing = publish(world.alice)
        world.alice.policies[CATEGORY].expiry_ms = 500
        entry = request(world, listing, now_ms=1000)
        world.market.advance(2000)
        self.assert_denied(world, entry, "consent-expired")

    def test_purpose_not_allowed(self, world):
        listing = publish(world.alice, purposes=("analytics",))
        entry = request(world, listing, purpose="resale", now_ms=1000)
        world.market.advance(2000)
        self.assert_denied(world, entry, "purpose-not-allowed")

    def test_stale_price_is_bad_terms(self, world):
        listing = publish(world.alice, price=10)
        publish(world.alice, price=99, now_ms=200)  # repricing invalidates old listings
        entry = request(world, listing, now_ms=1000)
        world.market.advance(2000)
        self.assert_denied(world, entry, "bad-terms")

    def test_provider_insolvent(self, world):
        listing = publish(world.alice, price=10)
        market = world.market
        market.ledger.transfer(
            world.alice.address, world.bob.address, market.ledger.balance(world.alice.address) - 5
        )
        entry = request(world, listing, now_ms=1000)
        market.advance(2000)
        self.assert_denied(world, entry, "provider-insolvent")
        contract = self.settle_out(world, entry)
        assert contract.state == REFUNDED
        assert market.ledger.balance(world.acme.address) == 1000
        market.ledger.assert_conservation()

    def test_revoked_then_republished_can_be_requested_again(self, world):
        listing = publish(world.alice)
        world.alice.revoke_consent(CATEGORY)
        entry = request(world, listing, now_ms=1000)
        world.market.advance(2000)
        assert entry.state == QUEUE_FAILED

        publish(world.alice, now_ms=world.market.now_ms + 100)  # same category, same price
        retry = request(world, listing, now_ms=world.market.now_ms + 200)
        world.market.advance(world.market.now_ms + 2000)
        assert retry.state == QUEUE_VERIFIED


class TestMisbehavior:
    def run_faulty(self, world, knob):
        listing = publish(world.alice, price=10)
        world.alice.misbehavior = knob
        entry = request(world, listing, now_ms=1000)
        world.market.advance(6000)
        return entry, world.market.escrow.get(entry.contract_id)

    @pytest.mark.parametrize("knob", ["corrupt-ciphertext", "wrong-key"])
    def test_garbage_delivery_slashes_provider(self, world, knob):
        entry, contract = self.run_faulty(world, knob)
        market = world.market
        assert entry.state == QUEUE_FAILED
        assert entry.failure_reason == "delivery-mismatch"
        assert contract.state == SLASHED
        assert market.ledger.balance(world.acme.address) == 1000  # consumer made whole
        assert market.ledger.balance(world.alice.address) == 990
        assert market.ledger.burned == 10
        market.ledger.assert_conservation()
        assert (bytes(entry.contract_id), "slash") in market.contract_anchors
        slashes = delivered_rows(market, AUDIT_SLASHED)
        assert len(slashes) == 1 and slashes[0].who == world.acme.address

    def test_withhold_after_funding_is_slashed_on_timeout(self, world):
        entry, contract = self.run_faulty(world, "withhold")
        market = world.market
        assert entry.state == QUEUE_FAILED
        assert entry.failure_reason == "no-response"
        assert entry.attempts == market.config.max_attempts
        assert contract.state == SLASHED
        assert market.ledger.balance(world.acme.address) == 1000
        assert market.ledger.balance(world.alice.address) == 990
        assert market.ledger.burned == 10
        assert delivered_rows(market) == []  # nothing was ever served
        market.ledger.assert_conservation()


class TestTransport:
    def test_lost_queries_refund_the_consumer(self, world):
        listing = publish(world.alice)
        market = world.market
        market.net.set_link(world.acme.address, world.alice.address, latency_ms=50, drop_rate=1.0)
        entry = request(world, listing, now_ms=1000)
        market.advance(6000)

        assert entry.state == QUEUE_FAILED
        assert entry.failure_reason == "no-response"
        contract = market.escrow.get(entry.contract_id)
        assert contract.state == REFUNDED  # provider never funded
        assert market.ledger.balance(world.acme.address) == 1000
        assert market.ledger.balance(world.alice.address) == 1000
        assert delivered_rows(market) == []

    def test_retry_after_a_lost_query_succeeds(self, world):
        listing = publish(world.alice)
        market = world.market
        market.net.set_link(world.acme.address, world.alice.address, latency_ms=50, drop_rate=1.0)
        entry = request(world, listing, now_ms=1000)
        market.advance(1400)
        assert entry.state != QUEUE_VERIFIED

        market.net.set_link(world.acme.address, world.alice.address, latency_ms=50, drop_rate=0.0)
        market.advance(3000)
        assert entry.state == QUEUE_VERIFIED
        assert entry.attempts == 2
        assert market.escrow.get(entry.contract_id).state == SETTLED

    def test_lost_response_is_reserved_from_cache(self, world):
        listing = publish(world.alice)
        market = world.market
        market.net.set_link(world.alice.address, world.acme.address, latency_ms=50, drop_rate=1.0)
        entry = request(world, listing, now_ms=1000)
        market.advance(1400)
        assert len(delivered_rows(market)) == 1  # served once, response lost

        market.net.set_link(world.alice.address, world.acme.address, latency_ms=50, drop_rate=0.0)
        market.advance(4000)
        assert entry.state == QUEUE_VERIFIED
        assert entry.attempts == 2
        # the re-serve is audited again, but the sale settles exactly once
        assert len(delivered_rows(market)) == 2
        assert market.escrow.get(entry.contract_id).state == SETTLED
        assert market.ledger.balance(world.alice.address) == 1010
        assert len(market.rewards_for(world.alice.address)) == 1


class TestRequestGuards:
    def test_duplicate_request_rejected_while_open(self, world):
        listing = publish(world.alice)
        request(world, listing, now_ms=1000)
        with pytest.raises(DuplicateRequest):
            request(world, listing, now_ms=1001)

    def test_second_purchase_after_settlement_is_fine(self, world):
        listing = publish(world.alice)
        first = request(world, listing, now_ms=1000)
        world.market.advance(3000)
        assert first.state == QUEUE_VERIFIED

        second = request(world, listing, now_ms=4000)
        world.market.advance(6000)
        assert second.state == QUEUE_VERIFIED
        assert second.contract_id != first.contract_id
        assert world.market.ledger.balance(world.alice.address) == 1020
        assert len(delivered_rows(world.market)) == 2

    def test_consumer_without_funds_cannot_request(self, world):
        listing = publish(world.alice, price=10)
        market = world.market
        market.ledger.transfer(
            world.acme.address, world.bob.address, market.ledger.balance(world.acme.address) - 19
        )
        with pytest.raises(InsufficientFunds):
            request(world, listing, now_ms=1000)

    def test_revoke_without_policy_fails(self, world):
        with pytest.raises(UnknownCategory):
            world.alice.revoke_consent("never-published")

    def test_purge_removes_bytes_but_not_history(self, world):
        listing = publish(world.alice)
        market = world.market
        assert market.store.total_bytes() > 0
        world.alice.purge_data(CATEGORY)
        assert market.store.total_bytes() == 0
        with pytest.raises(NotFound):
            market.store.get(StoreRef(digest=listing.payload_digest))
        # the chain still proves the listing happened
        assert world.chain.find_tx(listing.txid) is not None
        assert validate_chain(world.chain) is None


def run_fixed_scenario(seed):
    world = make_world(seed=seed)
    publish(world.alice, price=10, fields={"orders": 4})
    publish(world.bob, price=7, fields={"orders": 1}, now_ms=150)
    listing = world.acme.discover(CATEGORY, "analytics")[0]
    world.acme.request_data(listing, "analytics", 1000)
    world.market.advance(3000)
    return world


class TestDeterminism:
    def test_same_seed_same_chain_bytes(self):
        a = run_fixed_scenario(seed=11)
        b = run_fixed_scenario(seed=11)
        assert export_chain(a.chain) == export_chain(b.chain)
        assert a.market.store.total_bytes() == b.market.store.total_bytes()

    def test_different_seed_different_chain_bytes(self):
        a = run_fixed_scenario(seed=11)
        b = run_fixed_scenario(seed=12)
        assert export_chain(a.chain) != export_chain(b.chain)


class TestPrivacy:
    def test_plaintext_never_leaves_the_parties(self, world):
        secret_value = "crimson-parrot-9431"
        listing = publish(world.alice, fields={"favorite_color": secret_value, "orders": 6})
        entry = request(world, listing, now_ms=1000)
        world.market.advance(3000)
        assert entry.state == QUEUE_VERIFIED
        assert secret_value.encode() in entry.plaintext  # the buyer got the real thing

        exported = export_chain(world.chain)
        assert secret_value.encode() not in exported
        assert b"favorite_color" not in exported

        stored = world.market.store.get(StoreRef(digest=listing.payload_digest))
        assert secret_value.encode() not in stored

        for row in world.market.audit_log:
            record = str(row.to_record())
            assert secret_value not in record
