"""Permissioned hash-chained ledger with named streams and inclusion proofs.

Block production is strict round-robin over a fixed validator set: the block
at height h must be signed by validators[h mod n]. There are no forks, no
reorgs, and no dynamic membership.

Canonical byte formats (these define txids, header digests, and signatures;
change them and every stored chain breaks):

  transaction bytes = kind_code (1 byte)
                    | sender (20 bytes)
                    | len(sender_pubkey) as u32 BE | sender_pubkey
                    | nonce as u64 BE
                    | len(payload) as u32 BE | payload
  txid      = SHA-256(transaction bytes)
  signature = Ed25519 over the same transaction bytes

  header bytes = height as u64 BE
               | prev_hash (32 bytes)
               | merkle_root (32 bytes)
               | timestamp_ms as u64 BE
               | validator (20 bytes)
               | len(validator_pubkey) as u32 BE | validator_pubkey
  header digest = SHA-256(header bytes); validator_sig covers the same bytes

Merkle rule: leaves are txids in block order, a parent is SHA-256 of the
concatenation of its two children, an unpaired node is promoted to the next
level unchanged, and an empty block's root is SHA-256 of the empty string.

Transactions and headers carry the signer's public key, so a chain validates
with no key registry: the address must equal the derived address of the
embedded key, and config pins which addresses may produce blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .encoding import canonical_json_bytes, lp, parse_canonical_json, u64_be
from .errors import (
    BadConfig,
    BadItem,
    BadNonce,
    BadSignature,
    DuplicateTx,
    NotYourTurn,
    PendingTx,
    UnknownStream,
    UnknownTx,
    UnknownValidator,
)
from .identity import (
    Address,
    Digest32,
    Identity,
    Signature,
    ZERO_DIGEST,
    derive_address,
    hash_payload,
    sign,
    verify,
)

TX_KINDS = ("StreamItemTx", "TokenTx", "ContractTx", "AnchorTx")
_KIND_CODES = {"StreamItemTx": 1, "TokenTx": 2, "ContractTx": 3, "AnchorTx": 4}

# Streams are declared once at genesis; there is no dynamic stream creation.
GENESIS_STREAMS = ("profiles", "anchors", "audit")


@dataclass(frozen=True)
class ChainConfig:
    chain_id: str
    validators: tuple[Address, ...]
    block_interval_ms: int
    genesis_allocations: dict[Address, int]


@dataclass(frozen=True)
class Transaction:
    kind: str
    sender: Address
    sender_pubkey: bytes
    nonce: int
    payload: bytes
    signature: Signature
    txid: Digest32


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: Digest32
    merkle_root: Digest32
    timestamp_ms: int
    validator: Address
    validator_pubkey: bytes
    validator_sig: Signature


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: tuple[Transaction, ...]


@dataclass(frozen=True)
class Violation:
    height: int
    reason: str


@dataclass(frozen=True)
class StreamItem:
    stream: str
    publisher: Address
    keys: tuple[str, ...]
    payload_digest: Digest32
    key_commitment: Digest32
    offchain_ref: Digest32
    metadata: dict
    txid: Digest32
    height: int
    index_in_block: int


@dataclass(frozen=True)
class InclusionProof:
    txid: Digest32
    height: int
    merkle_path: tuple[tuple[Digest32, str], ...]  # (sibling, "L" | "R")
    header_digest: Digest32


def tx_signing_bytes(kind: str, sender: Address, sender_pubkey: bytes, nonce: int, payload: bytes) -> bytes:
    return bytes([_KIND_CODES[kind]]) + sender + lp(sender_pubkey) + u64_be(nonce) + lp(payload)


def make_tx(identity: Identity, kind: str, payload, nonce: int) -> Transaction:
    """Build and sign a transaction. Non-bytes payloads are canonically encoded."""
    if kind not in _KIND_CODES:
        raise BadItem(f"unknown transaction kind {kind!r}")
    body = payload if isinstance(payload, bytes) else canonical_json_bytes(payload)
    signing = tx_signing_bytes(kind, identity.address, identity.sign_public, nonce, body)
    return Transaction(
        kind=kind,
        sender=identity.address,
        sender_pubkey=identity.sign_public,
        nonce=nonce,
        payload=body,
        signature=sign(identity, signing),
        txid=hash_payload(signing),
    )


def header_signing_bytes(
    height: int,
    prev_hash: Digest32,
    merkle_root: Digest32,
    timestamp_ms: int,
    validator: Address,
    validator_pubkey: bytes,
) -> bytes:
    return (
        u64_be(height)
        + prev_hash
        + merkle_root
        + u64_be(timestamp_ms)
        + validator
        + lp(validator_pubkey)
    )


def header_digest(header: BlockHeader) -> Digest32:
    return hash_payload(
        header_signing_bytes(
            header.height,
            header.prev_hash,
            header.merkle_root,
            header.timestamp_ms,
            header.validator,
            header.validator_pubkey,
        )
    )


def merkle_root(txids: Iterable[Digest32]) -> Digest32:
    level = list(txids)
    if not level:
        return hash_payload(b"")
    while len(level) > 1:
        nxt = [hash_payload(level[i] + level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return Digest32(level[0])


def merkle_path(txids: list[Digest32], index: int) -> tuple[tuple[Digest32, str], ...]:
    if not 0 <= index < len(txids):
        raise IndexError(f"leaf index {index} out of range for {len(txids)} leaves")
    path: list[tuple[Digest32, str]] = []
    level = list(txids)
    i = index
    while len(level) > 1:
        if i % 2 == 0:
            if i + 1 < len(level):
                path.append((level[i + 1], "R"))
            # unpaired node: promoted, contributes no path element
        else:
            path.append((level[i - 1], "L"))
        nxt = [hash_payload(level[j] + level[j + 1]) for j in range(0, len(level) - 1, 2)]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
        i //= 2
    return tuple(path)


def fold_merkle_path(txid: Digest32, path: Iterable[tuple[Digest32, str]]) -> Digest32:
    current = txid
    for sibling, side in path:
        if side == "L":
            current = hash_payload(sibling + current)
        else:
            current = hash_payload(current + sibling)
    return current


@dataclass
class Chain:
    config: ChainConfig
    blocks: list[Block]
    mempool: list[Transaction] = field(default_factory=list)
    _mempool_ids: set[bytes] = field(default_factory=set)
    _tx_index: dict[bytes, tuple[int, int]] = field(default_factory=dict)
    _last_nonce: dict[Address, int] = field(default_factory=dict)
    _validator_identities: dict[Address, Identity] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return len(self.blocks) - 1

    @property
    def tip(self) -> BlockHeader:
        return self.blocks[-1].header

    def next_nonce(self, sender: Address) -> int:
        return self._last_nonce.get(sender, 0) + 1

    def next_validator(self) -> Address:
        return self.config.validators[(self.height + 1) % len(self.config.validators)]

    def find_tx(self, txid: Digest32) -> Optional[Transaction]:
        pos = self._tx_index.get(bytes(txid))
        if pos is None:
            return None
        h, i = pos
        return self.blocks[h].txs[i]


def _check_config(config: ChainConfig) -> None:
    if not config.chain_id:
        raise BadConfig("chain_id must be non-empty")
    if not config.validators:
        raise BadConfig("validator list must be non-empty")
    if len(set(config.validators)) != len(config.validators):
        raise BadConfig("duplicate validator addresses")
    if config.block_interval_ms <= 0:
        raise BadConfig("block_interval_ms must be positive")
    for addr, amount in config.genesis_allocations.items():
        if not isinstance(amount, int) or amount <= 0:
            raise BadConfig(f"genesis allocation for {addr.hex()} must be a positive integer")


def init_chain(config: ChainConfig, validator_identities: list[Identity]) -> Chain:
    """Create a chain whose genesis block mints the configured allocations.

    Identities must match config.validators in order; the first validator
    signs the genesis block and the mint transactions inside it.
    """
    _check_config(config)
    derived = tuple(vid.address for vid in validator_identities)
    if derived != tuple(config.validators):
        raise BadConfig("validator identities do not match configured addresses")

    treasury = validator_identities[0]
    txs = []
    nonce = 0
    for addr, amount in sorted(config.genesis_allocations.items(), key=lambda kv: kv[0].hex()):
        nonce += 1
        txs.append(
            make_tx(treasury, "TokenTx", {"op": "mint", "to": addr.hex(), "amount": amount}, nonce)
        )

    root = merkle_root([tx.txid for tx in txs])
    signing = header_signing_bytes(0, ZERO_DIGEST, root, 0, treasury.address, treasury.sign_public)
    header = BlockHeader(
        height=0,
        prev_hash=ZERO_DIGEST,
        merkle_root=root,
        timestamp_ms=0,
        validator=treasury.address,
        validator_pubkey=treasury.sign_public,
        validator_sig=sign(treasury, signing),
    )
    chain = Chain(config=config, blocks=[Block(header=header, txs=tuple(txs))])
    chain._validator_identities = {vid.address: vid for vid in validator_identities}
    chain._last_nonce[treasury.address] = nonce
    for i, tx in enumerate(txs):
        chain._tx_index[bytes(tx.txid)] = (0, i)
    return chain


def submit_tx(chain: Chain, tx: Transaction) -> Digest32:
    signing = tx_signing_bytes(tx.kind, tx.sender, tx.sender_pubkey, tx.nonce, tx.payload)
    if tx.txid != hash_payload(signing) or tx.sender != derive_address(tx.sender_pubkey):
        raise BadSignature("transaction does not certify itself")
    if not verify(tx.sender_pubkey, signing, tx.signature):
        raise BadSignature("signature does not verify")
    key = bytes(tx.txid)
    if key in chain._mempool_ids or key in chain._tx_index:
        raise DuplicateTx(f"transaction {tx.txid.hex()} already known")
    expected = chain.next_nonce(tx.sender)
    if tx.nonce != expected:
        raise BadNonce(f"expected nonce {expected} for {tx.sender.hex()}, got {tx.nonce}")
    chain.mempool.append(tx)
    chain._mempool_ids.add(key)
    chain._last_nonce[tx.sender] = tx.nonce
    return tx.txid


def produce_block(chain: Chain, validator: Address, now_ms: int) -> Block:
    """Drain the mempool into the next block, signed by the validator whose turn it is."""
    if validator not in chain.config.validators:
        raise UnknownValidator(f"{validator.hex()} is not a configured validator")
    expected = chain.next_validator()
    if validator != expected:
        raise NotYourTurn(f"height {chain.height + 1} belongs to {expected.hex()}")
    identity = chain._validator_identities.get(validator)
    if identity is None:
        raise UnknownValidator(f"no signing identity attached for {validator.hex()}")

    txs = tuple(chain.mempool)
    chain.mempool = []
    chain._mempool_ids.clear()

    height = chain.height + 1
    # timestamps must never decrease along the chain
    timestamp = max(now_ms, chain.tip.timestamp_ms)
    root = merkle_root([tx.txid for tx in txs])
    prev = header_digest(chain.tip)
    signing = header_signing_bytes(height, prev, root, timestamp, identity.address, identity.sign_public)
    header = BlockHeader(
        height=height,
        prev_hash=prev,
        merkle_root=root,
        timestamp_ms=timestamp,
        validator=identity.address,
        validator_pubkey=identity.sign_public,
        validator_sig=sign(identity, signing),
    )
    block = Block(header=header, txs=txs)
    chain.blocks.append(block)
    for i, tx in enumerate(txs):
        chain._tx_index[bytes(tx.txid)] = (height, i)
    return block


def validate_chain(chain: Chain) -> Optional[Violation]:
    """Full structural and cryptographic audit of every committed block.

    Returns None when every invariant holds, else the first Violation found.
    Cheap hash/link/turn-order checks run over the whole chain before any
    signature is verified, so tampered bytes are caught without paying for
    signature verification of everything before them.
    """
    validators = chain.config.validators
    n = len(validators)
    seen_txids: set[bytes] = set()
    last_nonce: dict[Address, int] = {}
    prev_header: Optional[BlockHeader] = None

    for h, block in enumerate(chain.blocks):
        header = block.header
        if header.height != h:
            return Violation(h, f"header height {header.height} at position {h}")
        if h == 0:
            if header.prev_hash != ZERO_DIGEST:
                return Violation(h, "genesis prev_hash is not zero")
        else:
            if header.prev_hash != header_digest(prev_header):
                return Violation(h, "prev_hash does not match previous header digest")
            if header.timestamp_ms < prev_header.timestamp_ms:
                return Violation(h, "timestamp decreased")
        if header.validator != validators[h % n]:
            return Violation(h, f"wrong validator for height {h} (turn order)")
        if header.validator != derive_address(header.validator_pubkey):
            return Violation(h, "validator address does not match embedded key")
        if header.merkle_root != merkle_root([tx.txid for tx in block.txs]):
            return Violation(h, "merkle root mismatch")
        for tx in block.txs:
            if tx.kind not in _KIND_CODES:
                return Violation(h, f"unknown tx kind {tx.kind!r}")
            if tx.sender != derive_address(tx.sender_pubkey):
                return Violation(h, "tx sender does not match embedded key")
            signing = tx_signing_bytes(tx.kind, tx.sender, tx.sender_pubkey, tx.nonce, tx.payload)
            if tx.txid != hash_payload(signing):
                return Violation(h, "txid does not match transaction bytes")
            key = bytes(tx.txid)
            if key in seen_txids:
                return Violation(h, "duplicate txid")
            seen_txids.add(key)
            if tx.nonce <= last_nonce.get(tx.sender, 0):
                return Violation(h, f"nonce not increasing for {tx.sender.hex()}")
            last_nonce[tx.sender] = tx.nonce
        prev_header = header

    for h, block in enumerate(chain.blocks):
        header = block.header
        signing = header_signing_bytes(
            header.height,
            header.prev_hash,
            header.merkle_root,
            header.timestamp_ms,
            header.validator,
            header.validator_pubkey,
        )
        if not verify(header.validator_pubkey, signing, header.validator_sig):
            return Violation(h, "bad header signature")
        for tx in block.txs:
            signing = tx_signing_bytes(tx.kind, tx.sender, tx.sender_pubkey, tx.nonce, tx.payload)
            if not verify(tx.sender_pubkey, signing, tx.signature):
                return Violation(h, "bad transaction signature")
    return None


def publish_stream_item(
    chain: Chain,
    publisher: Identity,
    stream: str,
    keys: list[str],
    payload_digest: Digest32,
    key_commitment: Digest32,
    offchain_ref: Digest32,
    metadata: dict,
) -> Digest32:
    """Submit a StreamItemTx; the item becomes listable once a block commits it."""
    if stream not in GENESIS_STREAMS:
        raise UnknownStream(f"stream {stream!r} was not declared at genesis")
    if not keys or any(not isinstance(k, str) or not k for k in keys):
        raise BadItem("keys must be non-empty strings")
    for name, value in (("payload_digest", payload_digest), ("key_commitment", key_commitment), ("offchain_ref", offchain_ref)):
        if not isinstance(value, bytes) or len(value) != 32:
            raise BadItem(f"{name} must be a 32-byte digest")
    if not isinstance(metadata, dict):
        raise BadItem("metadata must be a mapping")
    payload = {
        "stream": stream,
        "keys": list(keys),
        "payload_digest": payload_digest.hex(),
        "key_commitment": key_commitment.hex(),
        "offchain_ref": offchain_ref.hex(),
        "metadata": metadata,
    }
    tx = make_tx(publisher, "StreamItemTx", payload, chain.next_nonce(publisher.address))
    return submit_tx(chain, tx)


def _stream_item_from_tx(tx: Transaction, height: int, index: int) -> StreamItem:
    body = parse_canonical_json(tx.payload)
    return StreamItem(
        stream=body["stream"],
        publisher=tx.sender,
        keys=tuple(body["keys"]),
        payload_digest=Digest32.from_hex(body["payload_digest"]),
        key_commitment=Digest32.from_hex(body["key_commitment"]),
        offchain_ref=Digest32.from_hex(body["offchain_ref"]),
        metadata=body["metadata"],
        txid=tx.txid,
        height=height,
        index_in_block=index,
    )


def list_stream_items(
    chain: Chain,
    stream: str,
    key_filter: Optional[str] = None,
    since_height: Optional[int] = None,
) -> list[StreamItem]:
    """Committed items of one stream, ordered by (height, index_in_block).

    since_height is inclusive: items below that height are dropped.
    """
    if stream not in GENESIS_STREAMS:
        raise UnknownStream(f"stream {stream!r} was not declared at genesis")
    items = []
    start = since_height if since_height is not None else 0
    for h in range(start, len(chain.blocks)):
        for i, tx in enumerate(chain.blocks[h].txs):
            if tx.kind != "StreamItemTx":
                continue
            item = _stream_item_from_tx(tx, h, i)
            if item.stream != stream:
                continue
            if key_filter is not None and key_filter not in item.keys:
                continue
            items.append(item)
    return items


def inclusion_proof(chain: Chain, txid: Digest32) -> InclusionProof:
    pos = chain._tx_index.get(bytes(txid))
    if pos is None:
        if bytes(txid) in chain._mempool_ids:
            raise PendingTx(f"transaction {txid.hex()} is not yet committed")
        raise UnknownTx(f"transaction {txid.hex()} is not on this chain")
    height, index = pos
    block = chain.blocks[height]
    return InclusionProof(
        txid=txid,
        height=height,
        merkle_path=merkle_path([tx.txid for tx in block.txs], index),
        header_digest=header_digest(block.header),
    )


def verify_inclusion(proof: InclusionProof, headers: list[BlockHeader]) -> bool:
    """True iff the proof folds to the merkle root of the named header.

    Never raises; any structural problem is simply a False.
    """
    try:
        if proof.height < 0 or proof.height >= len(headers):
            return False
        header = headers[proof.height]
        if header_digest(header) != proof.header_digest:
            return False
        return fold_merkle_path(proof.txid, proof.merkle_path) == header.merkle_root
    except Exception:
        return False


# ---------------------------------------------------------------------------
# export / import: one block per line, hex for all byte fields


def _block_to_obj(block: Block, config: Optional[ChainConfig] = None) -> dict:
    obj = {
        "height": block.header.height,
        "prev_hash": block.header.prev_hash.hex(),
        "merkle_root": block.header.merkle_root.hex(),
        "timestamp_ms": block.header.timestamp_ms,
        "validator": block.header.validator.hex(),
        "validator_pubkey": block.header.validator_pubkey.hex(),
        "validator_sig": block.header.validator_sig.hex(),
        "txs": [
            {
                "kind": tx.kind,
                "sender": tx.sender.hex(),
                "sender_pubkey": tx.sender_pubkey.hex(),
                "nonce": tx.nonce,
                "payload": tx.payload.hex(),
                "signature": tx.signature.hex(),
                "txid": tx.txid.hex(),
            }
            for tx in block.txs
        ],
    }
    if config is not None:
        obj["config"] = {
            "chain_id": config.chain_id,
            "validators": [v.hex() for v in config.validators],
            "block_interval_ms": config.block_interval_ms,
            "genesis_allocations": {
                a.hex(): amount
                for a, amount in sorted(config.genesis_allocations.items(), key=lambda kv: kv[0].hex())
            },
        }
    return obj


def export_line(chain: Chain, height: int) -> bytes:
    """The single JSONL line export_chain emits for this block (no newline)."""
    block = chain.blocks[height]
    return canonical_json_bytes(_block_to_obj(block, chain.config if height == 0 else None))


def export_chain(chain: Chain) -> bytes:
    """One JSON object per line; the genesis line additionally carries the config."""
    lines = [export_line(chain, h) for h in range(len(chain.blocks))]
    return b"\n".join(lines) + b"\n"


def import_chain(data: bytes, validator_identities: Optional[list[Identity]] = None) -> Chain:
    """Rebuild a chain from its export. Round-trips bit-exactly through export_chain.

    Without identities the chain is read-only with respect to block
    production; validation and proofs work regardless.
    """
    lines = [line for line in data.split(b"\n") if line]
    if not lines:
        raise BadConfig("empty chain export")
    first = parse_canonical_json(lines[0])
    cfg = first.get("config")
    if cfg is None:
        raise BadConfig("genesis line carries no config")
    config = ChainConfig(
        chain_id=cfg["chain_id"],
        validators=tuple(Address.from_hex(v) for v in cfg["validators"]),
        block_interval_ms=cfg["block_interval_ms"],
        genesis_allocations={
            Address.from_hex(a): amount for a, amount in cfg["genesis_allocations"].items()
        },
    )
    blocks = []
    for line in lines:
        obj = parse_canonical_json(line)
        header = BlockHeader(
            height=obj["height"],
            prev_hash=Digest32.from_hex(obj["prev_hash"]),
            merkle_root=Digest32.from_hex(obj["merkle_root"]),
            timestamp_ms=obj["timestamp_ms"],
            validator=Address.from_hex(obj["validator"]),
            validator_pubkey=bytes.fromhex(obj["validator_pubkey"]),
            validator_sig=bytes.fromhex(obj["validator_sig"]),
        )
        txs = tuple(
            Transaction(
                kind=t["kind"],
                sender=Address.from_hex(t["sender"]),
                sender_pubkey=bytes.fromhex(t["sender_pubkey"]),
                nonce=t["nonce"],
                payload=bytes.fromhex(t["payload"]),
                signature=bytes.fromhex(t["signature"]),
                txid=Digest32.from_hex(t["txid"]),
            )
            for t in obj["txs"]
        )
        blocks.append(Block(header=header, txs=txs))

    chain = Chain(config=config, blocks=blocks)
    if validator_identities:
        chain._validator_identities = {vid.address: vid for vid in validator_identities}
    for h, block in enumerate(blocks):
        for i, tx in enumerate(block.txs):
            chain._tx_index[bytes(tx.txid)] = (h, i)
            if tx.nonce > chain._last_nonce.get(tx.sender, 0):
                chain._last_nonce[tx.sender] = tx.nonce
    return chain
