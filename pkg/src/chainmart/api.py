"""HTTP facade for the shop service.

All bodies are JSON; digests and addresses travel as hex strings. Errors come
back as {"error": <code>, "message": ...} where the code is the library
exception class name; unknown-thing errors map to 404, the rest to 400.

The service tracks an acting customer (the "logged in" user of the storefront)
so the consent, audit, rewards, and wallet endpoints need no explicit address.
Every endpoint also accepts an explicit customer override (query parameter or
body field), either a hex address or, in demo mode, a directory name.

Handlers are async and never await mid-mutation, so requests against the
in-process market state are serialized by the event loop.
"""

from __future__ import annotations

import time
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .encoding import parse_canonical_json
from .errors import BadBody, BadItem, ChainmartError, UnknownCustomer
from .escrow import TERMINAL_STATES
from .identity import Address, Digest32
from .ledger import list_stream_items
from .records import QUEUE_FAILED, QUEUE_VERIFIED, ProfileRecord
from .shop import Cart, ShopService, receipt_from_json, receipt_to_json

NOT_FOUND_CODES = {
    "UnknownSku",
    "UnknownSession",
    "NotFound",
    "UnknownCustomer",
    "UnknownCategory",
    "UnknownTx",
    "UnknownStream",
}

DENIAL_REASONS = {
    "unknown-item",
    "data-deleted",
    "consent-revoked",
    "consent-expired",
    "purpose-not-allowed",
    "bad-terms",
    "provider-insolvent",
}


def now_ms() -> int:
    return int(time.time() * 1000)


async def read_json(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise BadBody("body is not valid JSON")
    if not isinstance(body, dict):
        raise BadBody("body must be a JSON object")
    return body


def create_app(shop: ShopService, names: Optional[dict[str, Address]] = None, demo: bool = True) -> FastAPI:
    app = FastAPI(title="chainmart", docs_url=None, redoc_url=None)
    if demo:
        # the storefront dev server runs on its own port
        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )
    directory: dict[str, Address] = dict(names or {})
    state = {"actor": next(iter(directory.values()), None)}

    def resolve(value: Optional[str]) -> Address:
        if value is None:
            actor = state["actor"]
            if actor is None:
                raise UnknownCustomer("no acting customer set")
            return actor
        if value in directory:
            return directory[value]
        try:
            return Address.from_hex(value)
        except Exception:
            raise UnknownCustomer(f"unknown customer {value!r}")

    def cart_json(cart: Cart) -> dict:
        return {
            "session": cart.session_id,
            "customer": cart.customer.hex(),
            "lines": dict(sorted(cart.lines.items())),
            "total": shop.cart_total(cart),
        }

    @app.exception_handler(ChainmartError)
    async def on_chainmart_error(request: Request, exc: ChainmartError):
        status = 404 if exc.code in NOT_FOUND_CODES else 400
        return JSONResponse(status_code=status, content={"error": exc.code, "message": str(exc)})

    @app.get("/catalog")
    async def catalog():
        return [
            {"sku": p.sku, "name": p.name, "price": p.price, "stock": p.stock}
            for p in shop.list_catalog()
        ]

    @app.put("/cart/{session}/items")
    async def put_cart_item(session: str, request: Request):
        body = await read_json(request)
        customer = resolve(body.get("customer"))
        shop.open_session(session, customer)
        qty = body.get("qty", 1)
        if not isinstance(qty, int) or isinstance(qty, bool):
            raise BadItem("qty must be an integer")
        cart = shop.cart_update(session, str(body.get("sku", "")), qty)
        return cart_json(cart)

    @app.get("/cart/{session}")
    async def get_cart(session: str):
        return cart_json(shop._cart(session))

    @app.post("/checkout/{session}")
    async def checkout(session: str):
        receipt = shop.checkout(session, now_ms())
        return receipt_to_json(receipt)

    @app.get("/receipts/{order_id}")
    async def get_receipt(order_id: str):
        return receipt_to_json(shop.get_receipt(Digest32.from_hex(order_id)))

    @app.post("/receipts/verify")
    async def verify_receipt(request: Request):
        try:
            receipt = receipt_from_json(await request.json())
        except Exception:
            return {"valid": False}
        return {"valid": shop.verify_receipt(receipt)}

    @app.post("/consent")
    async def post_consent(request: Request):
        body = await read_json(request)
        customer = resolve(body.get("customer"))
        category = str(body.get("category", "purchase-history"))
        purposes = [str(p) for p in body.get("purposes", [])]
        price = body.get("price", 0)
        fields = _purchase_summary(shop, customer)
        extra = body.get("fields")
        if isinstance(extra, dict):
            fields.update(extra)
        record = ProfileRecord(owner=customer, category=category, fields=fields)
        item = shop.opt_in_sharing(customer, record, purposes, price, now_ms())
        return {
            "txid": item.txid.hex(),
            "category": category,
            "purposes": sorted(purposes),
            "price": price,
            "digest": item.payload_digest.hex(),
        }

    @app.delete("/consent/{category}")
    async def delete_consent(category: str, purge: bool = False, customer: Optional[str] = None):
        address = resolve(customer)
        node = shop.market.nodes.get(address)
        if node is None:
            raise UnknownCustomer(f"no sharing node for {address.hex()}")
        node.revoke_consent(category)
        purged = node.purge_data(category) if purge else 0
        return {"revoked": True, "purged": purged}

    @app.get("/audit")
    async def get_audit(who: Optional[str] = None, since: Optional[int] = None, customer: Optional[str] = None):
        address = resolve(customer)
        filters = {"whom": address}
        if who is not None:
            filters["who"] = resolve(who)
        if since is not None:
            filters["since_ms"] = since
        return [entry.to_record() for entry in shop.market.audit_query(**filters)]

    @app.get("/rewards")
    async def get_rewards(customer: Optional[str] = None):
        address = resolve(customer)
        view = shop.rewards(address)
        return {
            "balance_delta": view["balance_delta"],
            "entries": [
                {
                    "customer": e.customer.hex(),
                    "amount": e.amount,
                    "contract_id": e.contract_id.hex(),
                    "when_ms": e.when_ms,
                    "category": e.category,
                }
                for e in view["entries"]
            ],
        }

    @app.get("/wallet")
    async def get_wallet(customer: Optional[str] = None):
        return shop.wallet(resolve(customer))

    if demo:
        _mount_demo(app, shop, directory, state)
    return app


def _purchase_summary(shop: ShopService, customer: Address) -> dict:
    """Flat record of this customer's purchase history at the shop."""
    orders = 0
    total_spent = 0
    last_ms = 0
    skus: set[str] = set()
    for receipt in shop.receipts.values():
        if receipt.customer != customer:
            continue
        orders += 1
        total_spent += receipt.total
        last_ms = max(last_ms, receipt.created_ms)
        skus.update(receipt.body["lines"].keys())
    return {
        "orders": orders,
        "total_spent": total_spent,
        "last_order_ms": last_ms,
        "skus": ",".join(sorted(skus)),
    }


def _mount_demo(app: FastAPI, shop: ShopService, directory: dict[str, Address], state: dict) -> None:
    market = shop.market

    @app.get("/demo/directory")
    async def demo_directory():
        actor = state["actor"]
        return {
            "actor": actor.hex() if actor else None,
            "names": {
                name: {
                    "address": address.hex(),
                    "balance": market.ledger.balance(address),
                    "node": address in market.nodes,
                }
                for name, address in sorted(directory.items())
            },
        }

    @app.post("/demo/actor")
    async def demo_actor(request: Request):
        body = await read_json(request)
        name = body.get("name")
        if name not in directory:
            raise UnknownCustomer(f"no directory entry {name!r}")
        state["actor"] = directory[name]
        return {"actor": directory[name].hex(), "name": name}

    @app.post("/demo/consume")
    async def demo_consume(request: Request):
        body = await read_json(request)
        enterprise = body.get("enterprise", "acme")
        if enterprise not in directory or directory[enterprise] not in market.nodes:
            raise UnknownCustomer(f"no enterprise node {enterprise!r}")
        consumer = market.nodes[directory[enterprise]]
        owner_addr = None
        if body.get("owner") is not None:
            owner_name = body["owner"]
            owner_addr = directory.get(owner_name)
            if owner_addr is None:
                try:
                    owner_addr = Address.from_hex(owner_name)
                except Exception:
                    raise UnknownCustomer(f"unknown owner {owner_name!r}")
        category = str(body.get("category", "purchase-history"))
        purpose = str(body.get("purpose", "analytics"))

        items = [
            item
            for item in list_stream_items(market.chain, "profiles", key_filter=category)
            if owner_addr is None or item.publisher == owner_addr
        ]
        if not items:
            return {"outcome": "NoListing", "reason": "nothing published", "record": None}
        listing = items[-1]

        start = max(market.now_ms, market.config.block_interval_ms)
        try:
            entry = consumer.request_data(listing, purpose, start)
        except ChainmartError as exc:
            return {"outcome": "Failed", "reason": exc.code, "record": None}

        deadline = start + 30_000
        clock = start
        while clock < deadline:
            clock += market.config.block_interval_ms
            market.advance(clock)
            contract = market.escrow.contracts.get(bytes(entry.contract_id))
            if entry.state in (QUEUE_VERIFIED, QUEUE_FAILED) and (
                contract is None or contract.state in TERMINAL_STATES
            ):
                break

        contract = market.escrow.contracts.get(bytes(entry.contract_id))
        result = {
            "contract_id": entry.contract_id.hex(),
            "contract_state": contract.state if contract else None,
            "price": entry.price,
            "owner": listing.publisher.hex(),
            "category": category,
            "record": None,
            "reason": entry.failure_reason,
        }
        if entry.state == QUEUE_VERIFIED and entry.plaintext is not None:
            result["outcome"] = "Delivered"
            result["record"] = parse_canonical_json(entry.plaintext)
        elif entry.failure_reason in DENIAL_REASONS:
            result["outcome"] = "Denied"
        elif entry.failure_reason == "delivery-mismatch":
            result["outcome"] = "Slashed"
        else:
            result["outcome"] = "Failed"
        return result
