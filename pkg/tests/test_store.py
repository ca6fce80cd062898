"""Content-addressed off-chain store, memory and disk modes."""

import pytest

from chainmart.errors import EmptyPayload, NotFound
from chainmart.identity import hash_payload
from chainmart.store import OffchainStore, StoreRef
from conftest import named_identity

OWNER = named_identity("owner").address
OTHER = named_identity("other").address


def test_put_get_round_trip():
    store = OffchainStore()
    ref = store.put(b"ciphertext-bytes", "purchase-history", OWNER)
    assert ref.digest == hash_payload(b"ciphertext-bytes")
    assert store.get(ref) == b"ciphertext-bytes"
    assert store.verify(ref)


def test_empty_payload_rejected():
    store = OffchainStore()
    with pytest.raises(EmptyPayload):
        store.put(b"", "x", OWNER)


def test_put_is_idempotent():
    store = OffchainStore()
    a = store.put(b"same", "x", OWNER)
    b = store.put(b"same", "x", OWNER)
    assert a == b
    assert store.count() == 1


def test_get_missing_raises():
    store = OffchainStore()
    with pytest.raises(NotFound):
        store.get(StoreRef(digest=hash_payload(b"nope")))


def test_delete_specific_ref():
    store = OffchainStore()
    ref = store.put(b"data", "x", OWNER)
    assert store.delete(ref) == 1
    with pytest.raises(NotFound):
        store.get(ref)
    with pytest.raises(NotFound):
        store.delete(ref)


def test_purge_by_owner_and_category():
    store = OffchainStore()
    store.put(b"a", "history", OWNER)
    store.put(b"b", "history", OWNER)
    store.put(b"c", "history", OTHER)
    store.put(b"d", "prefs", OWNER)
    removed = store.delete(owner=OWNER, category="history")
    assert removed == 2
    assert store.count() == 2
    # other owners and categories untouched
    assert store.get(StoreRef(digest=hash_payload(b"c"))) == b"c"
    assert store.get(StoreRef(digest=hash_payload(b"d"))) == b"d"


def test_purge_nothing_returns_zero():
    store = OffchainStore()
    assert store.delete(owner=OWNER, category="none-such") == 0


def test_total_bytes_tracks_contents():
    store = OffchainStore()
    store.put(b"12345", "x", OWNER)
    store.put(b"678", "x", OWNER)
    assert store.total_bytes() == 8
    store.delete(StoreRef(digest=hash_payload(b"12345")))
    assert store.total_bytes() == 3


def test_disk_mode_persists(tmp_path):
    store_dir = str(tmp_path / "blobs")
    store = OffchainStore(store_dir)
    ref = store.put(b"durable-bytes", "history", OWNER, now_ms=42)
    reopened = OffchainStore(store_dir)
    assert reopened.get(ref) == b"durable-bytes"
    assert reopened.count() == 1


def test_disk_mode_detects_tamper(tmp_path):
    store_dir = str(tmp_path / "blobs")
    store = OffchainStore(store_dir)
    ref = store.put(b"honest-bytes", "history", OWNER)
    blob_path = tmp_path / "blobs" / ref.digest.hex()
    blob_path.write_bytes(b"evil-bytes!!")
    assert not store.verify(ref)


def test_disk_delete_removes_file(tmp_path):
    store_dir = str(tmp_path / "blobs")
    store = OffchainStore(store_dir)
    ref = store.put(b"bytes", "history", OWNER)
    store.delete(ref)
    assert not (tmp_path / "blobs" / ref.digest.hex()).exists()
    reopened = OffchainStore(store_dir)
    with pytest.raises(NotFound):
        reopened.get(ref)
