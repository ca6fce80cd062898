"""Content-addressed store for encrypted payloads kept off the chain.

The reference for a payload is the SHA-256 digest of its bytes, so identical
bytes land on the same entry and a stored entry can always be re-verified
against the reference. Deletion really deletes: once an entry is removed the
bytes are unrecoverable here, while any on-chain commitments to them remain.

By default everything lives in memory. With a directory attached, the
directory is authoritative: one file per entry named by the hex digest plus
a JSON sidecar (index.json) mapping digest to {category, owner, created_ms},
and an existing directory is loaded back on construction.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import EmptyPayload, NotFound
from .identity import Address, Digest32, hash_payload


@dataclass(frozen=True)
class StoreRef:
    digest: Digest32


@dataclass
class StoreEntry:
    ref: StoreRef
    data: bytes
    category: str
    owner: Address
    created_ms: int


class OffchainStore:
    def __init__(self, store_dir: Optional[str] = None) -> None:
        self._entries: dict[bytes, StoreEntry] = {}
        self._lock = threading.RLock()
        self._dir = Path(store_dir) if store_dir else None
        if self._dir:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _index_path(self) -> Path:
        return self._dir / "index.json"

    def _load(self) -> None:
        index_path = self._index_path()
        if not index_path.exists():
            return
        index = json.loads(index_path.read_text())
        for hex_digest, meta in index.items():
            blob_path = self._dir / hex_digest
            if not blob_path.exists():
                continue
            digest = Digest32.from_hex(hex_digest)
            self._entries[bytes(digest)] = StoreEntry(
                ref=StoreRef(digest=digest),
                data=blob_path.read_bytes(),
                category=meta["category"],
                owner=Address.from_hex(meta["owner"]),
                created_ms=meta["created_ms"],
            )

    def _write_index(self) -> None:
        index = {
            entry.ref.digest.hex(): {
                "category": entry.category,
                "owner": entry.owner.hex(),
                "created_ms": entry.created_ms,
            }
            for entry in self._entries.values()
        }
        self._index_path().write_text(json.dumps(index, sort_keys=True, indent=1))

    def put(self, ct_bytes: bytes, category: str, owner: Address, now_ms: int = 0) -> StoreRef:
        """Store bytes under their digest. Re-putting identical bytes is a no-op."""
        if not ct_bytes:
            raise EmptyPayload("refusing to store empty payload")
        digest = hash_payload(ct_bytes)
        ref = StoreRef(digest=digest)
        with self._lock:
            if bytes(digest) in self._entries:
                return ref
            self._entries[bytes(digest)] = StoreEntry(
                ref=ref, data=ct_bytes, category=category, owner=owner, created_ms=now_ms
            )
            if self._dir:
                (self._dir / digest.hex()).write_bytes(ct_bytes)
                self._write_index()
        return ref

    def get(self, ref: StoreRef) -> bytes:
        with self._lock:
            entry = self._entries.get(bytes(ref.digest))
            if entry is None:
                raise NotFound(f"no entry for {ref.digest.hex()}")
            if self._dir:
                blob_path = self._dir / ref.digest.hex()
                if not blob_path.exists():
                    raise NotFound(f"no entry for {ref.digest.hex()}")
                return blob_path.read_bytes()
            return entry.data

    def verify(self, ref: StoreRef) -> bool:
        """Recompute the stored bytes' digest and compare with the reference."""
        data = self.get(ref)
        return hash_payload(data) == ref.digest

    def delete(
        self,
        ref: Optional[StoreRef] = None,
        *,
        owner: Optional[Address] = None,
        category: Optional[str] = None,
    ) -> int:
        """Remove one entry by ref, or every entry of an (owner, category) pair.

        A specific missing ref is an error; a category purge matching nothing
        returns 0.
        """
        with self._lock:
            if ref is not None:
                if bytes(ref.digest) not in self._entries:
                    raise NotFound(f"no entry for {ref.digest.hex()}")
                self._remove(bytes(ref.digest))
                return 1
            if owner is None or category is None:
                raise ValueError("delete needs a ref or both owner and category")
            doomed = [
                key
                for key, entry in self._entries.items()
                if entry.owner == owner and entry.category == category
            ]
            for key in doomed:
                self._remove(key)
            return len(doomed)

    def _remove(self, key: bytes) -> None:
        entry = self._entries.pop(key)
        if self._dir:
            blob_path = self._dir / entry.ref.digest.hex()
            if blob_path.exists():
                blob_path.unlink()
            self._write_index()

    def total_bytes(self) -> int:
        with self._lock:
            return sum(len(e.data) for e in self._entries.values())

    def count(self) -> int:
        with self._lock:
            return len(self._entries)
