"""Account-based token ledger and the double-deposit escrow state machine.

Deposit rule: the consumer locks price + collateral, the provider locks
collateral, default collateral equals price. Settlement pays the provider
the price and returns both collaterals. A proven delivery fault (the signed
receipt disagrees with the on-chain commitments) or a delivery default burns
the provider's collateral and makes the consumer whole.

State machine:

    Created -> PartiallyFunded -> Funded -> Delivered -> Settled
       |              |             |           |-> Slashed (mismatch proven)
       |              |             |-> Slashed (delivery deadline passed)
       |-> Refunded   |-> Refunded (funding deadline passed)

Settled, Refunded, and Slashed are terminal. A Delivered contract whose
receipt does not match the commitments never settles by timeout; the
consumer keeps the mismatch remedy.

Token conservation (sum of balances + sum of locked + burned == total
minted) is asserted after every mutating operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .encoding import canonical_json_bytes, u64_be
from .errors import (
    AlreadyFunded,
    BadReceiptSignature,
    BadTerms,
    DigestMismatch,
    InsufficientFunds,
    NoMismatch,
    NotConsumer,
    NotParty,
    NotYetTimedOut,
    PastDeadline,
    UnknownTx,
    WrongState,
    ZeroAmount,
)
from .identity import Address, Digest32, Identity, Signature, derive_address, hash_payload, sign, verify

CREATED = "Created"
PARTIALLY_FUNDED = "PartiallyFunded"
FUNDED = "Funded"
DELIVERED = "Delivered"
SETTLED = "Settled"
REFUNDED = "Refunded"
SLASHED = "Slashed"
TERMINAL_STATES = frozenset({SETTLED, REFUNDED, SLASHED})


class TokenLedger:
    """Balances, per-contract locked funds, and burned total."""

    def __init__(self) -> None:
        self.balances: dict[Address, int] = {}
        self.locked: dict[bytes, dict[Address, int]] = {}
        self.burned = 0
        self.total_minted = 0

    def mint(self, to: Address, amount: int) -> None:
        if amount <= 0:
            raise ZeroAmount("mint amount must be positive")
        self.balances[to] = self.balances.get(to, 0) + amount
        self.total_minted += amount

    def balance(self, addr: Address) -> int:
        return self.balances.get(addr, 0)

    def transfer(self, sender: Address, to: Address, amount: int) -> None:
        if amount <= 0:
            raise ZeroAmount("transfer amount must be positive")
        if self.balance(sender) < amount:
            raise InsufficientFunds(f"{sender.hex()} holds {self.balance(sender)}, needs {amount}")
        self.balances[sender] -= amount
        self.balances[to] = self.balances.get(to, 0) + amount

    def lock(self, contract_id: bytes, party: Address, amount: int) -> None:
        if self.balance(party) < amount:
            raise InsufficientFunds(f"{party.hex()} holds {self.balance(party)}, needs {amount}")
        self.balances[party] -= amount
        slot = self.locked.setdefault(contract_id, {})
        slot[party] = slot.get(party, 0) + amount

    def release(self, contract_id: bytes, party: Address, to: Address, amount: int) -> None:
        slot = self.locked.get(contract_id, {})
        held = slot.get(party, 0)
        if held < amount:
            raise InsufficientFunds("release exceeds locked amount")
        slot[party] = held - amount
        if slot[party] == 0:
            del slot[party]
        if not slot:
            self.locked.pop(contract_id, None)
        self.balances[to] = self.balances.get(to, 0) + amount

    def burn_locked(self, contract_id: bytes, party: Address, amount: int) -> None:
        slot = self.locked.get(contract_id, {})
        held = slot.get(party, 0)
        if held < amount:
            raise InsufficientFunds("burn exceeds locked amount")
        slot[party] = held - amount
        if slot[party] == 0:
            del slot[party]
        if not slot:
            self.locked.pop(contract_id, None)
        self.burned += amount

    def locked_total(self) -> int:
        return sum(sum(slot.values()) for slot in self.locked.values())

    def assert_conservation(self) -> None:
        circulating = sum(self.balances.values())
        assert circulating + self.locked_total() + self.burned == self.total_minted, (
            f"conservation broken: {circulating} + {self.locked_total()} + {self.burned}"
            f" != {self.total_minted}"
        )


@dataclass(frozen=True)
class DeliveryReceipt:
    contract_id: Digest32
    delivered_digest: Digest32
    delivered_key_commitment: Digest32
    delivered_ms: int
    provider_pubkey: bytes
    provider_sig: Signature


def receipt_signing_bytes(
    contract_id: Digest32,
    delivered_digest: Digest32,
    delivered_key_commitment: Digest32,
    delivered_ms: int,
) -> bytes:
    return contract_id + delivered_digest + delivered_key_commitment + u64_be(delivered_ms)


def make_receipt(
    provider: Identity,
    contract_id: Digest32,
    delivered_digest: Digest32,
    delivered_key_commitment: Digest32,
    delivered_ms: int,
) -> DeliveryReceipt:
    signing = receipt_signing_bytes(contract_id, delivered_digest, delivered_key_commitment, delivered_ms)
    return DeliveryReceipt(
        contract_id=contract_id,
        delivered_digest=delivered_digest,
        delivered_key_commitment=delivered_key_commitment,
        delivered_ms=delivered_ms,
        provider_pubkey=provider.sign_public,
        provider_sig=sign(provider, signing),
    )


@dataclass
class EscrowContract:
    id: Digest32
    provider: Address
    consumer: Address
    item_digest: Digest32
    key_commitment: Digest32
    price: int
    collateral: int
    funding_deadline_ms: int
    delivery_deadline_ms: int
    dispute_window_ms: int
    state: str = CREATED
    funded_consumer: int = 0
    funded_provider: int = 0
    receipt: Optional[DeliveryReceipt] = None


def _receipt_matches(contract: EscrowContract) -> bool:
    r = contract.receipt
    return (
        r is not None
        and r.delivered_digest == contract.item_digest
        and r.delivered_key_commitment == contract.key_commitment
    )


# Anchor hook: called after every successful state transition so the caller
# can commit a ContractTx for it. Signature: (op, contract, actor).
AnchorHook = Callable[[str, EscrowContract, Address], None]


class EscrowEngine:
    def __init__(self, ledger: TokenLedger, anchor: Optional[AnchorHook] = None) -> None:
        self.ledger = ledger
        self.contracts: dict[bytes, EscrowContract] = {}
        self._anchor = anchor

    def _anchored(self, op: str, contract: EscrowContract, actor: Address) -> None:
        self.ledger.assert_conservation()
        if self._anchor is not None:
            self._anchor(op, contract, actor)

    def get(self, contract_id: Digest32) -> EscrowContract:
        contract = self.contracts.get(bytes(contract_id))
        if contract is None:
            raise UnknownTx(f"no contract {contract_id.hex()}")
        return contract

    def create_contract(
        self,
        provider: Address,
        consumer: Address,
        item_digest: Digest32,
        key_commitment: Digest32,
        price: int,
        collateral: int,
        funding_deadline_ms: int,
        delivery_deadline_ms: int,
        dispute_window_ms: int,
        salt: bytes = b"",
    ) -> EscrowContract:
        """Terms are hashed into the contract id, so equal terms + salt collide on purpose."""
        if price <= 0 or collateral <= 0:
            raise BadTerms("price and collateral must be positive")
        if provider == consumer:
            raise BadTerms("provider and consumer must differ")
        if delivery_deadline_ms < funding_deadline_ms:
            raise BadTerms("delivery deadline precedes funding deadline")
        terms = {
            "provider": provider.hex(),
            "consumer": consumer.hex(),
            "item_digest": item_digest.hex(),
            "key_commitment": key_commitment.hex(),
            "price": price,
            "collateral": collateral,
            "funding_deadline_ms": funding_deadline_ms,
            "delivery_deadline_ms": delivery_deadline_ms,
            "dispute_window_ms": dispute_window_ms,
            "salt": salt.hex(),
        }
        contract_id = hash_payload(canonical_json_bytes(terms))
        if bytes(contract_id) in self.contracts:
            return self.contracts[bytes(contract_id)]
        contract = EscrowContract(
            id=contract_id,
            provider=provider,
            consumer=consumer,
            item_digest=item_digest,
            key_commitment=key_commitment,
            price=price,
            collateral=collateral,
            funding_deadline_ms=funding_deadline_ms,
            delivery_deadline_ms=delivery_deadline_ms,
            dispute_window_ms=dispute_window_ms,
        )
        self.contracts[bytes(contract_id)] = contract
        self._anchored("create", contract, consumer)
        return contract

    def fund(self, contract_id: Digest32, party: Address) -> str:
        contract = self.get(contract_id)
        if contract.state not in (CREATED, PARTIALLY_FUNDED):
            raise WrongState(f"cannot fund in state {contract.state}")
        if party == contract.consumer:
            if contract.funded_consumer:
                raise AlreadyFunded("consumer already funded")
            amount = contract.price + contract.collateral
        elif party == contract.provider:
            if contract.funded_provider:
                raise AlreadyFunded("provider already funded")
            amount = contract.collateral
        else:
            raise NotParty(f"{party.hex()} is not a party to this contract")
        self.ledger.lock(bytes(contract.id), party, amount)
        if party == contract.consumer:
            contract.funded_consumer = amount
        else:
            contract.funded_provider = amount
        both = contract.funded_consumer and contract.funded_provider
        contract.state = FUNDED if both else PARTIALLY_FUNDED
        self._anchored("fund", contract, party)
        return contract.state

    def mark_delivered(self, contract_id: Digest32, receipt: DeliveryReceipt) -> str:
        contract = self.get(contract_id)
        if contract.state != FUNDED:
            raise WrongState(f"cannot deliver in state {contract.state}")
        signing = receipt_signing_bytes(
            receipt.contract_id,
            receipt.delivered_digest,
            receipt.delivered_key_commitment,
            receipt.delivered_ms,
        )
        if (
            receipt.contract_id != contract.id
            or derive_address(receipt.provider_pubkey) != contract.provider
            or not verify(receipt.provider_pubkey, signing, receipt.provider_sig)
        ):
            raise BadReceiptSignature("receipt is not a valid provider signature for this contract")
        if receipt.delivered_ms > contract.delivery_deadline_ms:
            raise PastDeadline("delivery deadline passed")
        contract.receipt = receipt
        contract.state = DELIVERED
        self._anchored("deliver", contract, contract.provider)
        return contract.state

    def _settle(self, contract: EscrowContract, actor: Address) -> str:
        cid = bytes(contract.id)
        self.ledger.release(cid, contract.consumer, contract.provider, contract.price)
        self.ledger.release(cid, contract.consumer, contract.consumer, contract.collateral)
        self.ledger.release(cid, contract.provider, contract.provider, contract.collateral)
        contract.state = SETTLED
        self._anchored("settle", contract, actor)
        return contract.state

    def _slash(self, contract: EscrowContract, actor: Address) -> str:
        cid = bytes(contract.id)
        if contract.funded_consumer:
            self.ledger.release(cid, contract.consumer, contract.consumer, contract.funded_consumer)
        self.ledger.burn_locked(cid, contract.provider, contract.funded_provider)
        contract.state = SLASHED
        self._anchored("slash", contract, actor)
        return contract.state

    def confirm(self, contract_id: Digest32, caller: Address) -> str:
        contract = self.get(contract_id)
        if contract.state != DELIVERED:
            raise WrongState(f"cannot confirm in state {contract.state}")
        if caller != contract.consumer:
            raise NotConsumer("only the consumer confirms")
        if not _receipt_matches(contract):
            raise DigestMismatch("receipt disagrees with commitments; raise_mismatch instead")
        return self._settle(contract, caller)

    def raise_mismatch(self, contract_id: Digest32, caller: Address) -> str:
        contract = self.get(contract_id)
        if contract.state != DELIVERED:
            raise WrongState(f"cannot dispute in state {contract.state}")
        if caller != contract.consumer:
            raise NotConsumer("only the consumer disputes")
        if _receipt_matches(contract):
            raise NoMismatch("signed receipt matches the on-chain commitments")
        return self._slash(contract, caller)

    def claim_timeout(self, contract_id: Digest32, now_ms: int) -> str:
        """Resolve a stalled contract once its relevant deadline has passed.

        A Delivered contract with a mismatched receipt never settles this
        way; it is returned unchanged so the consumer keeps the dispute path.
        """
        contract = self.get(contract_id)
        if contract.state in TERMINAL_STATES:
            raise WrongState(f"contract already {contract.state}")
        if contract.state in (CREATED, PARTIALLY_FUNDED):
            if now_ms <= contract.funding_deadline_ms:
                raise NotYetTimedOut("funding deadline not reached")
            cid = bytes(contract.id)
            if contract.funded_consumer:
                self.ledger.release(cid, contract.consumer, contract.consumer, contract.funded_consumer)
            if contract.funded_provider:
                self.ledger.release(cid, contract.provider, contract.provider, contract.funded_provider)
            contract.state = REFUNDED
            self._anchored("refund", contract, contract.consumer)
            return contract.state
        if contract.state == FUNDED:
            if now_ms <= contract.delivery_deadline_ms:
                raise NotYetTimedOut("delivery deadline not reached")
            return self._slash(contract, contract.consumer)
        # Delivered
        assert contract.receipt is not None
        if now_ms <= contract.receipt.delivered_ms + contract.dispute_window_ms:
            raise NotYetTimedOut("dispute window still open")
        if _receipt_matches(contract):
            return self._settle(contract, contract.provider)
        return contract.state
