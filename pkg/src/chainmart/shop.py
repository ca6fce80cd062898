"""The storefront enterprise: catalog, carts, token checkout, receipts.

A checkout is atomic: validate everything first (session, stock, balance),
then move tokens, anchor the payment and the order digest on chain, commit
the block, and hand back a receipt carrying a fresh inclusion proof. If any
precheck fails, nothing changes.

Receipts are self-contained evidence: the order body, the digest of its
canonical bytes (the order id), the anchoring txid, and the Merkle proof.
verify_receipt re-derives the body digest and re-checks the proof against
the chain, so any edited field breaks it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .encoding import canonical_json_bytes, parse_canonical_json
from .errors import (
    BadItem,
    EmptyCart,
    InsufficientFunds,
    NotFound,
    OutOfStock,
    UnknownCustomer,
    UnknownSession,
    UnknownSku,
)
from .identity import Address, Digest32, Identity, generate_identity, hash_payload
from .ledger import InclusionProof, inclusion_proof, make_tx, submit_tx, verify_inclusion
from .marketplace import Marketplace, PlatformConfig
from .node import SharingNode
from .records import AuditEntry, ProfileRecord
from .simnet import SimNet


@dataclass
class Product:
    sku: str
    name: str
    price: int
    stock: int


@dataclass
class Cart:
    session_id: str
    customer: Address
    lines: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Receipt:
    order_id: Digest32
    customer: Address
    merchant: Address
    total: int
    txid: Digest32
    proof: InclusionProof
    created_ms: int
    body: dict


class ShopService:
    def __init__(self, market: Marketplace, merchant: Identity, catalog: list[Product]) -> None:
        self.market = market
        self.merchant = merchant
        market.identities.setdefault(merchant.address, merchant)
        self.catalog: dict[str, Product] = {p.sku: p for p in catalog}
        self.carts: dict[str, Cart] = {}
        self.receipts: dict[bytes, Receipt] = {}
        self._order_seq = 0

    # ----- catalog and carts -------------------------------------------------

    def list_catalog(self) -> list[Product]:
        return [self.catalog[sku] for sku in sorted(self.catalog)]

    def open_session(self, session_id: str, customer: Address) -> Cart:
        cart = self.carts.get(session_id)
        if cart is None:
            cart = Cart(session_id=session_id, customer=customer)
            self.carts[session_id] = cart
        return cart

    def _cart(self, session_id: str) -> Cart:
        cart = self.carts.get(session_id)
        if cart is None:
            raise UnknownSession(f"no cart for session {session_id!r}")
        return cart

    def cart_update(self, session_id: str, sku: str, qty: int) -> Cart:
        cart = self._cart(session_id)
        if sku not in self.catalog:
            raise UnknownSku(f"no product {sku!r}")
        if qty < 0:
            raise BadItem("quantity must be >= 0")
        if qty == 0:
            cart.lines.pop(sku, None)
        else:
            cart.lines[sku] = qty
        return cart

    def cart_total(self, cart: Cart) -> int:
        return sum(self.catalog[sku].price * qty for sku, qty in cart.lines.items())

    # ----- checkout and receipts ---------------------------------------------

    def checkout(self, session_id: str, now_ms: int) -> Receipt:
        market = self.market
        market.touch(now_ms)
        cart = self._cart(session_id)
        if not cart.lines:
            raise EmptyCart("cart has no lines")
        for sku, qty in cart.lines.items():
            if qty > self.catalog[sku].stock:
                raise OutOfStock(f"{sku}: want {qty}, have {self.catalog[sku].stock}")
        total = self.cart_total(cart)
        if market.ledger.balance(cart.customer) < total:
            raise InsufficientFunds(
                f"balance {market.ledger.balance(cart.customer)} below total {total}"
            )
        customer_identity = market.identities.get(cart.customer)
        if customer_identity is None:
            raise UnknownCustomer(f"no identity registered for {cart.customer.hex()}")

        market.ledger.transfer(cart.customer, self.merchant.address, total)
        market.ledger.assert_conservation()

        self._order_seq += 1
        body = {
            "chain_id": market.chain.config.chain_id,
            "customer": cart.customer.hex(),
            "merchant": self.merchant.address.hex(),
            "lines": dict(sorted(cart.lines.items())),
            "total": total,
            "created_ms": now_ms,
            "seq": self._order_seq,
        }
        order_id = hash_payload(canonical_json_bytes(body))

        pay_tx = make_tx(
            customer_identity,
            "TokenTx",
            {"op": "transfer", "to": self.merchant.address.hex(), "amount": total},
            market.chain.next_nonce(cart.customer),
        )
        submit_tx(market.chain, pay_tx)
        anchor_tx = make_tx(
            self.merchant,
            "AnchorTx",
            {"order_id": order_id.hex(), "total": total},
            market.chain.next_nonce(self.merchant.address),
        )
        submit_tx(market.chain, anchor_tx)
        market.commit_block(now_ms)

        receipt = Receipt(
            order_id=order_id,
            customer=cart.customer,
            merchant=self.merchant.address,
            total=total,
            txid=anchor_tx.txid,
            proof=inclusion_proof(market.chain, anchor_tx.txid),
            created_ms=now_ms,
            body=body,
        )
        self.receipts[bytes(order_id)] = receipt
        for sku, qty in cart.lines.items():
            self.catalog[sku].stock -= qty
        cart.lines = {}
        return receipt

    def get_receipt(self, order_id: Digest32) -> Receipt:
        receipt = self.receipts.get(bytes(order_id))
        if receipt is None:
            raise NotFound(f"no receipt for order {order_id.hex()}")
        return receipt

    def verify_receipt(self, receipt: Receipt) -> bool:
        """True iff the body hashes to the order id and the proof checks out."""
        try:
            if hash_payload(canonical_json_bytes(receipt.body)) != receipt.order_id:
                return False
            if receipt.body["total"] != receipt.total:
                return False
            if receipt.body["customer"] != receipt.customer.hex():
                return False
            if receipt.body["merchant"] != receipt.merchant.hex():
                return False
            anchor = self.market.chain.find_tx(receipt.txid)
            if anchor is None or anchor.kind != "AnchorTx":
                return False
            payload = parse_canonical_json(anchor.payload)
            if payload.get("order_id") != receipt.order_id.hex():
                return False
            if receipt.proof.txid != receipt.txid:
                return False
            headers = [b.header for b in self.market.chain.blocks]
            return verify_inclusion(receipt.proof, headers)
        except Exception:
            return False

    # ----- customer-facing views ----------------------------------------------

    def opt_in_sharing(self, customer: Address, record: ProfileRecord, purposes: list[str], price: int, now_ms: int):
        node = self.market.nodes.get(customer)
        if node is None:
            raise UnknownCustomer(f"no sharing node for {customer.hex()}")
        return node.publish_profile(record, purposes, price, now_ms)

    def rewards(self, customer: Address) -> dict:
        entries = self.market.rewards_for(customer)
        return {"balance_delta": sum(e.amount for e in entries), "entries": entries}

    def audit_trail(self, customer: Address) -> list[AuditEntry]:
        return self.market.audit_query(whom=customer)

    def wallet(self, customer: Address) -> dict:
        if customer not in self.market.nodes and customer != self.merchant.address:
            raise UnknownCustomer(f"unknown customer {customer.hex()}")
        return {"address": customer.hex(), "balance": self.market.ledger.balance(customer)}


def receipt_to_json(receipt: Receipt) -> dict:
    return {
        "order_id": receipt.order_id.hex(),
        "customer": receipt.customer.hex(),
        "merchant": receipt.merchant.hex(),
        "total": receipt.total,
        "txid": receipt.txid.hex(),
        "created_ms": receipt.created_ms,
        "body": receipt.body,
        "proof": {
            "txid": receipt.proof.txid.hex(),
            "height": receipt.proof.height,
            "merkle_path": [[digest.hex(), side] for digest, side in receipt.proof.merkle_path],
            "header_digest": receipt.proof.header_digest.hex(),
        },
    }


def receipt_from_json(obj: dict) -> Receipt:
    """Inverse of receipt_to_json; raises on malformed input."""
    proof = obj["proof"]
    return Receipt(
        order_id=Digest32.from_hex(obj["order_id"]),
        customer=Address.from_hex(obj["customer"]),
        merchant=Address.from_hex(obj["merchant"]),
        total=int(obj["total"]),
        txid=Digest32.from_hex(obj["txid"]),
        proof=InclusionProof(
            txid=Digest32.from_hex(proof["txid"]),
            height=int(proof["height"]),
            merkle_path=tuple(
                (Digest32.from_hex(digest), side) for digest, side in proof["merkle_path"]
            ),
            header_digest=Digest32.from_hex(proof["header_digest"]),
        ),
        created_ms=int(obj["created_ms"]),
        body=obj["body"],
    )


# ----- demo fixture ------------------------------------------------------------

DEMO_CATALOG = [
    ("sku-001", "Walnut desk organizer", 30, 12),
    ("sku-002", "Thermal carafe 1L", 24, 20),
    ("sku-003", "Mechanical pencil set", 9, 50),
    ("sku-004", "Linen notebook A5", 7, 64),
    ("sku-005", "Desk lamp, brass", 41, 8),
    ("sku-006", "Wool blanket", 55, 10),
    ("sku-007", "Ceramic pour-over set", 33, 15),
    ("sku-008", "Field bag, waxed canvas", 62, 6),
]

DEMO_CUSTOMERS = ("alice", "bob", "carol")
DEMO_ENTERPRISES = ("acme", "insight")
DEMO_GENESIS_TOKENS = 1000


@dataclass
class DemoWorld:
    market: Marketplace
    shop: ShopService
    customers: dict[str, SharingNode]
    enterprises: dict[str, SharingNode]
    merchant: Identity
    names: dict[str, Address]

    def node_for(self, name: str) -> SharingNode:
        if name in self.customers:
            return self.customers[name]
        if name in self.enterprises:
            return self.enterprises[name]
        raise UnknownCustomer(f"no demo participant named {name!r}")


def demo_identity(seed: int, name: str) -> Identity:
    material = hash_payload(f"chainmart/demo/{seed}/{name}".encode("utf-8"))
    return generate_identity(bytes(material))


def build_demo(
    seed: int = 1,
    config: Optional[PlatformConfig] = None,
    auto_commit: bool = True,
    net: Optional[SimNet] = None,
) -> DemoWorld:
    """Deterministic world: 4 validators, a merchant, 3 customers, 2 data buyers."""
    cfg = config or PlatformConfig()
    validators = [demo_identity(seed, f"validator-{i}") for i in range(cfg.validators)]
    merchant = demo_identity(seed, "merchant")
    people = {name: demo_identity(seed, name) for name in DEMO_CUSTOMERS + DEMO_ENTERPRISES}

    genesis = {merchant.address: DEMO_GENESIS_TOKENS}
    for identity in people.values():
        genesis[identity.address] = DEMO_GENESIS_TOKENS

    market = Marketplace(
        config=cfg,
        validator_identities=validators,
        genesis_allocations=genesis,
        seed=seed,
        chain_id=f"chainmart-demo-{seed}",
        auto_commit=auto_commit,
        net=net,
    )
    customers = {name: market.add_node(people[name]) for name in DEMO_CUSTOMERS}
    enterprises = {name: market.add_node(people[name]) for name in DEMO_ENTERPRISES}
    shop = ShopService(
        market,
        merchant,
        [Product(sku=s, name=n, price=p, stock=st) for s, n, p, st in DEMO_CATALOG],
    )
    names = {name: identity.address for name, identity in people.items()}
    names["merchant"] = merchant.address
    return DemoWorld(
        market=market,
        shop=shop,
        customers=customers,
        enterprises=enterprises,
        merchant=merchant,
        names=names,
    )
