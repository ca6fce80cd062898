"""Shopping-cart chain with consent-gated, escrow-settled customer data sharing.

The pieces, bottom up:

  identity     hashing, Ed25519 signing, record encryption, key wrapping
  encoding     canonical JSON bytes and length-prefixed binary layouts
  ledger       permissioned block chain, streams, Merkle inclusion proofs
  store        content-addressed off-chain blob store with purge support
  escrow       token ledger plus double-deposit data-sale contracts
  records      profile records, consent policies, audit and reward entries
  simnet       discrete-event message network with latency and drops
  node         one participant: publish, discover, request, serve, verify
  marketplace  wires chain, store, tokens, escrow, and nodes together
  shop         merchant service: catalog, carts, receipts, opt-in, rewards
  api          FastAPI HTTP facade over the shop service
  bench        scenario harness emitting latency/memory CSVs
"""

from .errors import ChainmartError
from .identity import (
    Address,
    Ciphertext,
    DataKey,
    Digest32,
    Entropy,
    Identity,
    WrappedKey,
    derive_address,
    generate_identity,
    hash_payload,
)
from .ledger import (
    Block,
    BlockHeader,
    ChainConfig,
    InclusionProof,
    StreamItem,
    Transaction,
    Violation,
    export_chain,
    import_chain,
    init_chain,
    validate_chain,
    verify_inclusion,
)
from .marketplace import Marketplace, PlatformConfig
from .node import SharingNode
from .records import AuditEntry, ConsentPolicy, ProfileRecord, RewardEntry
from .shop import Product, Receipt, ShopService, build_demo
from .store import OffchainStore, StoreRef

__version__ = "0.1.0"

__all__ = [
    "Address",
    "AuditEntry",
    "Block",
    "BlockHeader",
    "ChainConfig",
    "ChainmartError",
    "Ciphertext",
    "ConsentPolicy",
    "DataKey",
    "Digest32",
    "Entropy",
    "Identity",
    "InclusionProof",
    "Marketplace",
    "OffchainStore",
    "PlatformConfig",
    "Product",
    "ProfileRecord",
    "Receipt",
    "RewardEntry",
    "SharingNode",
    "ShopService",
    "StoreRef",
    "StreamItem",
    "Transaction",
    "Violation",
    "WrappedKey",
    "build_demo",
    "derive_address",
    "export_chain",
    "generate_identity",
    "hash_payload",
    "import_chain",
    "init_chain",
    "validate_chain",
    "verify_inclusion",
    "__version__",
]
