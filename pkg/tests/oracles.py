"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the documented rules, not from
the package source, and stays frozen: if production code disagrees with an
oracle, the production code is what gets fixed.
"""

from __future__ import annotations

import hashlib
import struct

# SHA-256 test vectors (FIPS 180-2 appendix values, widely published).
SHA256_EMPTY_HEX = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC_HEX = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def merkle_root_recursive(leaves: list[bytes]) -> bytes:
    """Reference Merkle rule, implemented recursively.

    Leaves are used as-is (no extra leaf hashing). Parents hash the
    concatenation of their children. An unpaired node is promoted to the
    next level unchanged. An empty set of leaves hashes the empty string.
    """
    if not leaves:
        return sha256(b"")

    def reduce(level: list[bytes]) -> bytes:
        if len(level) == 1:
            return level[0]
        parents = []
        i = 0
        while i + 1 < len(level):
            parents.append(sha256(level[i] + level[i + 1]))
            i += 2
        if i < len(level):
            parents.append(level[i])
        return reduce(parents)

    return reduce(list(leaves))


def tx_signing_bytes_reference(
    kind_code: int, sender: bytes, sender_pubkey: bytes, nonce: int, payload: bytes
) -> bytes:
    """Re-derive canonical transaction bytes with struct, not the package helpers.

    Layout: 1-byte kind code, 20-byte sender address, length-prefixed public
    key, 8-byte big-endian nonce, length-prefixed payload. Length prefixes
    are 4-byte big-endian.
    """
    return (
        struct.pack(">B", kind_code)
        + sender
        + struct.pack(">I", len(sender_pubkey))
        + sender_pubkey
        + struct.pack(">Q", nonce)
        + struct.pack(">I", len(payload))
        + payload
    )


def txid_reference(
    kind_code: int, sender: bytes, sender_pubkey: bytes, nonce: int, payload: bytes
) -> bytes:
    return sha256(tx_signing_bytes_reference(kind_code, sender, sender_pubkey, nonce, payload))


def header_signing_bytes_reference(
    height: int,
    prev_hash: bytes,
    merkle_root: bytes,
    timestamp_ms: int,
    validator: bytes,
    validator_pubkey: bytes,
) -> bytes:
    """Canonical block-header bytes: the header digest and signature cover these."""
    return (
        struct.pack(">Q", height)
        + prev_hash
        + merkle_root
        + struct.pack(">Q", timestamp_ms)
        + validator
        + struct.pack(">I", len(validator_pubkey))
        + validator_pubkey
    )


# Escrow payoff table, worked out by hand before the state machine was built.
# price = collateral = 10. The consumer locks price + collateral = 20, the
# provider locks collateral = 10. Keys are (provider_strategy,
# consumer_strategy); values are (provider_net, consumer_net, burned_delta)
# relative to each party's balance before the contract was created, counting
# still-locked funds as lost to the locker (see PAYOFF_LOCKED).
#
# Row derivations:
#   settle/confirm: provider +price and collateral back -> +10;
#                   consumer collateral back, price gone -> -10.
#   proven mismatch: consumer refunded 20 -> 0; provider collateral
#                   burned -> -10; burned +10.
#   withhold (funded, delivery deadline passes): same as proven mismatch.
#   deliver-correct + stay-silent: dispute window lapses, provider claims
#                   settlement, equals the confirm row.
#   deliver-correct + attempt-false-mismatch: the claim errors (the signed
#                   receipt matches the on-chain commitments), then the
#                   dispute window lapses and it settles like confirm.
#   deliver-garbage + stay-silent: receipt cannot match the commitments, so
#                   the provider can never claim; nothing unlocks. Provider
#                   -10, consumer -20, burned 0, 30 tokens stranded.
PAYOFF_PRICE = 10
PAYOFF_COLLATERAL = 10
PAYOFF_TABLE = {
    ("deliver-correct", "confirm-truthfully"): (10, -10, 0),
    ("deliver-correct", "stay-silent"): (10, -10, 0),
    ("deliver-correct", "attempt-false-mismatch"): (10, -10, 0),
    ("deliver-garbage", "confirm-truthfully"): (-10, 0, 10),
    ("deliver-garbage", "stay-silent"): (-10, -20, 0),
    ("deliver-garbage", "attempt-false-mismatch"): (-10, 0, 10),
    ("withhold", "confirm-truthfully"): (-10, 0, 10),
    ("withhold", "stay-silent"): (-10, 0, 10),
    ("withhold", "attempt-false-mismatch"): (-10, 0, 10),
}
PAYOFF_LOCKED = {
    key: (30 if key == ("deliver-garbage", "stay-silent") else 0) for key in PAYOFF_TABLE
}


def assert_honesty_dominance(table=None) -> None:
    """Check the dominance claims directly on a payoff table."""
    t = table or PAYOFF_TABLE
    provider_strats = ["deliver-correct", "deliver-garbage", "withhold"]
    consumer_strats = ["confirm-truthfully", "stay-silent", "attempt-false-mismatch"]
    for c in consumer_strats:
        honest = t[("deliver-correct", c)][0]
        for p in provider_strats:
            assert honest >= t[(p, c)][0], (p, c)
    assert t[("deliver-correct", "confirm-truthfully")][0] > t[("deliver-garbage", "confirm-truthfully")][0]
    assert t[("deliver-correct", "confirm-truthfully")][0] > t[("withhold", "confirm-truthfully")][0]
    for p in provider_strats:
        honest = t[(p, "confirm-truthfully")][1]
        for c in consumer_strats:
            assert honest >= t[(p, c)][1], (p, c)
