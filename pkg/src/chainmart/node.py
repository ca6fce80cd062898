"""Per-participant node: publish profile data, buy and serve it, keep consent.

A node plays both market sides with the same identity. As a data owner it
publishes encrypted records, holds the data keys, enforces its consent
policies, and answers queries. As a data consumer it runs a retrieval queue:
request -> escrow-fund -> query over the network -> verify the delivery
against the on-chain commitments -> settle or dispute.

Nodes never call each other directly; everything crosses the simulated
network as messages, and tick(now_ms) is the only place time advances.

The `misbehavior` knob exists for fault testing: "corrupt-ciphertext" and
"wrong-key" send receipts computed honestly over a bad artifact (so the
fault is provable on chain), "withhold" funds the escrow and then never
delivers.
"""

from __future__ import annotations

from typing import Optional

from .encoding import u64_be
from .errors import (
    AlreadyFunded,
    AuthFailure,
    DuplicateRequest,
    InsufficientFunds,
    NoMismatch,
    NotFound,
    NotParty,
    NotYetTimedOut,
    PastDeadline,
    UnexpectedResponse,
    UnknownCategory,
    UnknownTx,
    UnwrapFailure,
    WrongState,
)
from .escrow import DELIVERED, FUNDED, PARTIALLY_FUNDED, TERMINAL_STATES, make_receipt
from .identity import (
    Ciphertext,
    DataKey,
    Identity,
    decrypt_record,
    encrypt_record,
    hash_payload,
    unwrap_key,
    wrap_key,
)
from .ledger import StreamItem, list_stream_items, publish_stream_item
from .store import StoreRef
from .records import (
    AUDIT_DELIVERED,
    AUDIT_DENIED,
    AUDIT_SLASHED,
    AuditEntry,
    ConsentPolicy,
    ProfileRecord,
    QUEUE_FAILED,
    QUEUE_REQUESTED,
    QUEUE_VERIFIED,
    RetrievalEntry,
    canonicalize_record,
)
from .simnet import DataResponse, Denied, NetworkMessage, QueryData

PROFILE_STREAM = "profiles"


class SharingNode:
    def __init__(self, identity: Identity, market) -> None:
        self.identity = identity
        self.address = identity.address
        self.market = market
        self.data_keys: dict[bytes, DataKey] = {}
        self.own_items: dict[bytes, StreamItem] = {}
        self.policies: dict[str, ConsentPolicy] = {}
        self.queue: dict[bytes, RetrievalEntry] = {}
        self.misbehavior: Optional[str] = None
        self._served: dict[bytes, DataResponse] = {}
        self._delivered_open: list[bytes] = []
        self._request_counter = 0

    # ----- data-owner side -------------------------------------------------

    def publish_profile(self, record: ProfileRecord, purposes: list[str], price: int, now_ms: int) -> StreamItem:
        """Encrypt, store, and commit the record; (re)set the category's consent."""
        if record.owner != self.address:
            raise NotParty("record owner is not this node's identity")
        market = self.market
        market.touch(now_ms)
        plaintext = canonicalize_record(record)
        key, ct = encrypt_record(plaintext, market.entropy)
        ct_bytes = ct.to_bytes()
        ref = market.store.put(ct_bytes, record.category, self.address, now_ms)
        key_commitment = hash_payload(key)
        metadata = {
            "category": record.category,
            "purposes": sorted(purposes),
            "price": price,
            "size_bytes": len(ct_bytes),
        }
        txid = publish_stream_item(
            market.chain,
            self.identity,
            PROFILE_STREAM,
            keys=[record.category],
            payload_digest=ref.digest,
            key_commitment=key_commitment,
            offchain_ref=ref.digest,
            metadata=metadata,
        )
        item = StreamItem(
            stream=PROFILE_STREAM,
            publisher=self.address,
            keys=(record.category,),
            payload_digest=ref.digest,
            key_commitment=key_commitment,
            offchain_ref=ref.digest,
            metadata=metadata,
            txid=txid,
            height=-1,
            index_in_block=-1,
        )
        self.data_keys[bytes(ref.digest)] = key
        self.own_items[bytes(ref.digest)] = item
        # opting the same category in again replaces the previous policy
        self.policies[record.category] = ConsentPolicy(
            owner=self.address,
            category=record.category,
            allowed_purposes=set(purposes),
            price=price,
        )
        market.note_listing(ref.digest, record.category, price, self.address)
        if market.auto_commit:
            market.commit_block(now_ms)
            committed = [
                it
                for it in list_stream_items(market.chain, PROFILE_STREAM, key_filter=record.category)
                if it.txid == txid
            ]
            item = committed[0]
            self.own_items[bytes(ref.digest)] = item
        return item

    def revoke_consent(self, category: str) -> ConsentPolicy:
        policy = self.policies.get(category)
        if policy is None:
            raise UnknownCategory(f"no consent policy for {category!r}")
        policy.revoked = True
        return policy

    def purge_data(self, category: str) -> int:
        """Revoke and irreversibly drop this category's stored ciphertexts.

        Chain history (listings, proofs, audit rows) is untouched.
        """
        self.revoke_consent(category)
        return self.market.store.delete(owner=self.address, category=category)

    def serve_request(self, query: QueryData, now_ms: int) -> Optional[NetworkMessage]:
        """Answer one query; every decision leaves exactly one audit row."""
        market = self.market
        market.touch(now_ms)
        cid_key = bytes(query.contract_id)

        if cid_key in self._served:
            # duplicate query (consumer retry): resend the cached response
            resp = self._served[cid_key]
            resent = DataResponse(
                sender=resp.sender,
                to=resp.to,
                sent_ms=now_ms,
                contract_id=resp.contract_id,
                payload_digest=resp.payload_digest,
                ciphertext_bytes=resp.ciphertext_bytes,
                wrapped_key=resp.wrapped_key,
                receipt=resp.receipt,
            )
            market.net.send(resent)
            self._audit_delivered(query, now_ms)
            return resent

        item = self.own_items.get(bytes(query.payload_digest))
        if item is None:
            return self._deny(query, "unknown-item", now_ms)
        category = item.metadata["category"]

        try:
            ct_bytes = market.store.get(StoreRef(digest=query.payload_digest))
        except NotFound:
            return self._deny(query, "data-deleted", now_ms)

        policy = self.policies.get(category)
        if policy is None:
            return self._deny(query, "consent-revoked", now_ms)
        reason = policy.check(query.purpose, now_ms)
        if reason is not None:
            return self._deny(query, reason, now_ms)

        try:
            contract = market.escrow.get(query.contract_id)
        except UnknownTx:
            return self._deny(query, "bad-terms", now_ms)
        if (
            contract.provider != self.address
            or contract.consumer != query.sender
            or contract.item_digest != query.payload_digest
            or contract.key_commitment != hash_payload(self.data_keys[bytes(query.payload_digest)])
            or contract.price != policy.price
        ):
            return self._deny(query, "bad-terms", now_ms)

        if contract.state == PARTIALLY_FUNDED and not contract.funded_consumer:
            return self._deny(query, "bad-terms", now_ms)
        if contract.state == PARTIALLY_FUNDED:
            try:
                market.escrow.fund(contract.id, self.address)
            except InsufficientFunds:
                return self._deny(query, "provider-insolvent", now_ms)
            except (WrongState, AlreadyFunded):
                return self._deny(query, "bad-terms", now_ms)
        elif contract.state != FUNDED or contract.receipt is not None:
            return self._deny(query, "bad-terms", now_ms)

        if self.misbehavior == "withhold":
            return None

        sent_ct = ct_bytes
        sent_key = self.data_keys[bytes(query.payload_digest)]
        if self.misbehavior == "corrupt-ciphertext":
            sent_ct = ct_bytes[:-1] + bytes([ct_bytes[-1] ^ 0x01])
        elif self.misbehavior == "wrong-key":
            sent_key = DataKey(market.entropy.take(32))

        receipt = make_receipt(
            self.identity,
            contract.id,
            delivered_digest=hash_payload(sent_ct),
            delivered_key_commitment=hash_payload(sent_key),
            delivered_ms=now_ms,
        )
        try:
            market.escrow.mark_delivered(contract.id, receipt)
        except PastDeadline:
            return self._deny(query, "bad-terms", now_ms)
        self._delivered_open.append(cid_key)

        resp = DataResponse(
            sender=self.address,
            to=query.sender,
            sent_ms=now_ms,
            contract_id=contract.id,
            payload_digest=query.payload_digest,
            ciphertext_bytes=sent_ct,
            wrapped_key=wrap_key(sent_key, query.consumer_enc_public, query.sender, market.entropy),
            receipt=receipt,
        )
        market.net.send(resp)
        self._served[cid_key] = resp
        self._audit_delivered(query, now_ms)
        return resp

    def _audit_delivered(self, query: QueryData, now_ms: int) -> None:
        deliver_txid = self.market.contract_anchors.get((bytes(query.contract_id), "deliver"))
        item = self.own_items[bytes(query.payload_digest)]
        entry = AuditEntry(
            who=query.sender,
            what=query.payload_digest,
            whom=self.address,
            when_ms=now_ms,
            means_stream=PROFILE_STREAM,
            means_txid=deliver_txid,
            purpose=query.purpose,
            outcome=AUDIT_DELIVERED,
            category=item.metadata["category"],
        )
        self.market.append_audit(entry, self.identity)

    def _deny(self, query: QueryData, reason: str, now_ms: int) -> Denied:
        msg = Denied(
            sender=self.address,
            to=query.sender,
            sent_ms=now_ms,
            contract_id=query.contract_id,
            payload_digest=query.payload_digest,
            reason=reason,
        )
        self.market.net.send(msg)
        item = self.own_items.get(bytes(query.payload_digest))
        category = item.metadata["category"] if item else ""
        entry = AuditEntry(
            who=query.sender,
            what=query.payload_digest,
            whom=self.address,
            when_ms=now_ms,
            means_stream="audit",
            means_txid=None,  # filled with the audit publication's own txid
            purpose=query.purpose,
            outcome=AUDIT_DENIED,
            category=category,
        )
        self.market.append_audit(entry, self.identity)
        return msg

    # ----- data-consumer side ----------------------------------------------

    def discover(self, category: str, purpose: str, max_price: Optional[int] = None) -> list[StreamItem]:
        """Committed listings of a category this node could buy right now.

        Only the newest listing per owner counts; consent (purpose, expiry,
        revocation) and the price cap filter the rest.
        """
        market = self.market
        latest: dict[bytes, StreamItem] = {}
        for item in list_stream_items(market.chain, PROFILE_STREAM, key_filter=category):
            latest[bytes(item.publisher)] = item  # ordered by (height, index): last wins
        out = []
        for item in latest.values():
            policy = market.policy_for(item.publisher, category)
            if policy is None or policy.check(purpose, market.now_ms) is not None:
                continue
            if max_price is not None and item.metadata["price"] > max_price:
                continue
            out.append(item)
        out.sort(key=lambda it: (it.height, it.index_in_block))
        return out

    def request_data(self, listing: StreamItem, purpose: str, now_ms: int) -> RetrievalEntry:
        """Open an escrow, fund the consumer side, and queue the fetch."""
        market = self.market
        market.touch(now_ms)
        digest_key = bytes(listing.payload_digest)
        existing = self.queue.get(digest_key)
        if existing is not None and existing.state not in (QUEUE_VERIFIED, QUEUE_FAILED):
            raise DuplicateRequest(f"retrieval of {listing.payload_digest.hex()} already underway")

        price = listing.metadata["price"]
        collateral = market.collateral_for(price)
        if market.ledger.balance(self.address) < price + collateral:
            raise InsufficientFunds(
                f"need {price + collateral}, hold {market.ledger.balance(self.address)}"
            )

        self._request_counter += 1
        contract = market.escrow.create_contract(
            provider=listing.publisher,
            consumer=self.address,
            item_digest=listing.payload_digest,
            key_commitment=listing.key_commitment,
            price=price,
            collateral=collateral,
            funding_deadline_ms=now_ms + market.funding_window_ms,
            delivery_deadline_ms=now_ms + market.funding_window_ms + market.delivery_window_ms,
            dispute_window_ms=market.config.dispute_window_ms,
            salt=self.address + u64_be(self._request_counter),
        )
        market.escrow.fund(contract.id, self.address)
        entry = RetrievalEntry(
            digest=listing.payload_digest,
            state=QUEUE_REQUESTED,
            attempts=0,
            contract_id=contract.id,
            enqueued_ms=now_ms,
            owner=listing.publisher,
            purpose=purpose,
            price=price,
        )
        self.queue[digest_key] = entry
        self._send_query(entry, now_ms)
        return entry

    def _send_query(self, entry: RetrievalEntry, now_ms: int) -> None:
        entry.attempts += 1
        entry.last_sent_ms = now_ms
        self.market.net.send(
            QueryData(
                sender=self.address,
                to=entry.owner,
                sent_ms=now_ms,
                contract_id=entry.contract_id,
                payload_digest=entry.digest,
                purpose=entry.purpose,
                consumer_enc_public=self.identity.enc_public,
            )
        )

    def receive_and_verify(self, resp: DataResponse, now_ms: int) -> Optional[bytes]:
        """Check a delivery against the on-chain commitments, then settle or dispute."""
        market = self.market
        market.touch(now_ms)
        entry = self.queue.get(bytes(resp.payload_digest))
        if entry is None or entry.state != QUEUE_REQUESTED or entry.contract_id != resp.contract_id:
            raise UnexpectedResponse("no open retrieval matches this response")

        contract = market.escrow.get(entry.contract_id)
        digest_ok = hash_payload(resp.ciphertext_bytes) == entry.digest
        key: Optional[DataKey] = None
        key_ok = False
        try:
            key = unwrap_key(resp.wrapped_key, self.identity.enc_secret)
            key_ok = hash_payload(key) == contract.key_commitment
        except UnwrapFailure:
            key_ok = False

        if digest_ok and key_ok:
            try:
                plaintext = decrypt_record(key, Ciphertext.from_bytes(resp.ciphertext_bytes))
            except (AuthFailure, ValueError):
                plaintext = None
            if plaintext is not None:
                market.escrow.confirm(entry.contract_id, self.address)
                entry.state = QUEUE_VERIFIED
                entry.plaintext = plaintext
                return plaintext

        try:
            market.escrow.raise_mismatch(entry.contract_id, self.address)
            slash_txid = market.contract_anchors.get((bytes(entry.contract_id), "slash"))
            market.append_audit(
                AuditEntry(
                    who=self.address,
                    what=entry.digest,
                    whom=entry.owner,
                    when_ms=now_ms,
                    means_stream=PROFILE_STREAM,
                    means_txid=slash_txid,
                    purpose=entry.purpose,
                    outcome=AUDIT_SLASHED,
                    category=market.listing_category(entry.digest),
                ),
                self.identity,
            )
        except (NoMismatch, WrongState):
            pass
        entry.state = QUEUE_FAILED
        entry.failure_reason = "delivery-mismatch"
        return None

    def _handle_denied(self, msg: Denied, now_ms: int) -> None:
        entry = self.queue.get(bytes(msg.payload_digest))
        if entry is None or entry.state != QUEUE_REQUESTED or entry.contract_id != msg.contract_id:
            return
        entry.state = QUEUE_FAILED
        entry.failure_reason = msg.reason

    # ----- clock ------------------------------------------------------------

    def tick(self, now_ms: int) -> int:
        """Deliver due messages, retry stragglers, claim expired escrows."""
        market = self.market
        market.touch(now_ms)
        events = 0

        for msg in market.net.due(self.address, now_ms):
            events += 1
            if isinstance(msg, QueryData):
                self.serve_request(msg, now_ms)
            elif isinstance(msg, DataResponse):
                try:
                    self.receive_and_verify(msg, now_ms)
                except UnexpectedResponse:
                    pass
            elif isinstance(msg, Denied):
                self._handle_denied(msg, now_ms)

        for entry in list(self.queue.values()):
            if entry.state == QUEUE_REQUESTED and now_ms - entry.last_sent_ms >= market.config.retry_timeout_ms:
                if entry.attempts >= market.config.max_attempts:
                    entry.state = QUEUE_FAILED
                    entry.failure_reason = "no-response"
                    events += 1
                else:
                    self._send_query(entry, now_ms)
                    events += 1
            if entry.state == QUEUE_FAILED:
                contract = market.escrow.contracts.get(bytes(entry.contract_id))
                if contract is not None and contract.state not in TERMINAL_STATES:
                    try:
                        market.escrow.claim_timeout(entry.contract_id, now_ms)
                        events += 1
                    except (NotYetTimedOut, WrongState):
                        pass

        for cid_key in list(self._delivered_open):
            contract = market.escrow.contracts.get(cid_key)
            if contract is None or contract.state in TERMINAL_STATES:
                self._delivered_open.remove(cid_key)
                continue
            if contract.state != DELIVERED:
                continue
            try:
                state = market.escrow.claim_timeout(contract.id, now_ms)
            except NotYetTimedOut:
                continue
            except WrongState:
                self._delivered_open.remove(cid_key)
                continue
            self._delivered_open.remove(cid_key)
            if state != DELIVERED:
                events += 1

        return events

    # ----- views -------------------------------------------------------------

    def audit_query(self, **filters) -> list[AuditEntry]:
        return self.market.audit_query(**filters)
