"""Profile records, consent policies, audit entries, and the retrieval queue.

The canonical record encoding is the byte form that gets encrypted, stored,
and committed on chain: a UTF-8 JSON object with bytewise-sorted keys, no
insignificant whitespace, decimal integers, literal booleans, and standard
string escaping. Field values are restricted to strings, integers, and
booleans — one flat level, no floats, no nesting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .encoding import canonical_json_bytes
from .errors import UnsupportedValue
from .identity import Address, Digest32

AUDIT_DELIVERED = "Delivered"
AUDIT_DENIED = "Denied"
AUDIT_SLASHED = "Slashed"

QUEUE_PENDING = "Pending"
QUEUE_REQUESTED = "Requested"
QUEUE_DELIVERED = "Delivered"
QUEUE_VERIFIED = "Verified"
QUEUE_FAILED = "Failed"


@dataclass(frozen=True)
class ProfileRecord:
    owner: Address
    category: str
    fields: dict
    schema_version: int = 1


def canonicalize_record(record: ProfileRecord) -> bytes:
    """Deterministic bytes for a record; idempotent across re-parsing."""
    if not record.category:
        raise UnsupportedValue("category must be non-empty")
    for key, value in record.fields.items():
        if not isinstance(key, str):
            raise UnsupportedValue(f"field names must be strings, got {type(key).__name__}")
        if isinstance(value, bool):
            continue
        if isinstance(value, (str, int)):
            continue
        raise UnsupportedValue(
            f"field {key!r} has unsupported type {type(value).__name__};"
            " only strings, integers, and booleans are allowed"
        )
    return canonical_json_bytes(
        {
            "category": record.category,
            "fields": record.fields,
            "owner": record.owner.hex(),
            "schema_version": record.schema_version,
        }
    )


@dataclass
class ConsentPolicy:
    owner: Address
    category: str
    allowed_purposes: set[str]
    price: int
    expiry_ms: Optional[int] = None
    revoked: bool = False

    def check(self, purpose: str, now_ms: int) -> Optional[str]:
        """None when a serve is permitted, else the denial reason."""
        if self.revoked:
            return "consent-revoked"
        if self.expiry_ms is not None and now_ms >= self.expiry_ms:
            return "consent-expired"
        if purpose not in self.allowed_purposes:
            return "purpose-not-allowed"
        return None


@dataclass
class AuditEntry:
    """One row answering who accessed what, belonging to whom, when,
    by what means, and for what purpose.

    means_txid may arrive as None for entries whose means IS the audit
    publication itself (denials); it is filled with the publication's txid
    the moment the row is appended, so a stored row always carries one.
    """

    who: Address
    what: Digest32
    whom: Address
    when_ms: int
    means_stream: str
    means_txid: Optional[Digest32]
    purpose: str
    outcome: str
    category: str

    def to_record(self) -> dict:
        # a not-yet-published denial self-references; on chain that is a zero txid
        txid_hex = self.means_txid.hex() if self.means_txid is not None else "00" * 32
        return {
            "who": self.who.hex(),
            "what": self.what.hex(),
            "whom": self.whom.hex(),
            "when_ms": self.when_ms,
            "means_stream": self.means_stream,
            "means_txid": txid_hex,
            "purpose": self.purpose,
            "outcome": self.outcome,
            "category": self.category,
        }


@dataclass
class RetrievalEntry:
    """Consumer-side queue slot for one content digest being fetched."""

    digest: Digest32
    state: str
    attempts: int
    contract_id: Digest32
    enqueued_ms: int
    owner: Address
    purpose: str
    price: int
    last_sent_ms: int = 0
    plaintext: Optional[bytes] = None
    failure_reason: str = ""


@dataclass(frozen=True)
class RewardEntry:
    customer: Address
    amount: int
    contract_id: Digest32
    when_ms: int
    category: str
