"""Keys, addresses, digests, signatures, and the record encryption stack.

Scheme choices, fixed once for the whole repo:

* digests: SHA-256 (32 bytes), rendered as lowercase hex without a prefix
* signatures: Ed25519 (64-byte signatures, 32-byte public keys)
* record encryption: AES-256-GCM under a fresh random 32-byte data key and
  a fresh 12-byte nonce per record
* key wrapping: sealed box over X25519 — an ephemeral keypair per wrap,
  HKDF-SHA256 of the shared secret bound to both public keys, AES-256-GCM
  with a zero nonce (safe: the derived key is unique per wrap)

Addresses are the first 20 bytes of SHA-256 over the signing public key.
All values here are immutable after creation; every operation is pure apart
from drawing randomness, which is injectable so simulations can replay
byte-identically from a seed.
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives import hashes

from .encoding import ByteReader, lp
from .errors import AuthFailure, BadPublicKey, EmptyKey, SeedLength, UnwrapFailure

SEED_LEN = 32
DATA_KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16
ADDRESS_LEN = 20
SIGNATURE_LEN = 64

_WRAP_INFO = b"chainmart/wrap/v1"
_ZERO_NONCE = b"\x00" * NONCE_LEN


class Entropy:
    """Source of key and nonce bytes.

    Defaults to the OS CSPRNG. Seeded instances replay the same byte stream,
    which is what makes whole-marketplace runs reproducible bit for bit.
    """

    def __init__(self, seed: int | None = None) -> None:
        self._rng = random.Random(seed) if seed is not None else None

    def take(self, n: int) -> bytes:
        if self._rng is None:
            return os.urandom(n)
        return self._rng.randbytes(n)


_DEFAULT_ENTROPY = Entropy()


class Digest32(bytes):
    """A 32-byte SHA-256 output."""

    def __new__(cls, raw: bytes) -> "Digest32":
        if len(raw) != 32:
            raise ValueError(f"digest must be 32 bytes, got {len(raw)}")
        return super().__new__(cls, raw)

    @classmethod
    def from_hex(cls, text: str) -> "Digest32":
        return cls(bytes.fromhex(text))


ZERO_DIGEST = Digest32(b"\x00" * 32)


class Address(bytes):
    """A 20-byte participant address."""

    def __new__(cls, raw: bytes) -> "Address":
        if len(raw) != ADDRESS_LEN:
            raise ValueError(f"address must be {ADDRESS_LEN} bytes, got {len(raw)}")
        return super().__new__(cls, raw)

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        return cls(bytes.fromhex(text))


class DataKey(bytes):
    """A symmetric record key; never serialized in plaintext on the ledger."""

    def __new__(cls, raw: bytes) -> "DataKey":
        if len(raw) != DATA_KEY_LEN:
            raise ValueError(f"data key must be {DATA_KEY_LEN} bytes, got {len(raw)}")
        return super().__new__(cls, raw)


Signature = bytes


@dataclass(frozen=True)
class Ciphertext:
    """AEAD output: nonce, encrypted body, authentication tag."""

    nonce: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        """Canonical container form; this is what gets stored and digested."""
        return lp(self.nonce) + lp(self.body) + lp(self.tag)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        r = ByteReader(data)
        nonce, body, tag = r.take_lp(), r.take_lp(), r.take_lp()
        if not r.done():
            raise ValueError("trailing bytes after ciphertext container")
        return cls(nonce=nonce, body=body, tag=tag)


@dataclass(frozen=True)
class WrappedKey:
    """A data key sealed to one recipient; the address is routing metadata."""

    recipient: Address
    blob: bytes


@dataclass(frozen=True)
class Identity:
    """Signing + encryption keypairs and the derived address, all from one seed."""

    seed: bytes
    sign_secret: bytes
    sign_public: bytes
    enc_secret: bytes
    enc_public: bytes
    address: Address


def hash_payload(data: bytes) -> Digest32:
    return Digest32(hashlib.sha256(data).digest())


def derive_address(sign_public: bytes) -> Address:
    if not sign_public:
        raise EmptyKey("cannot derive an address from an empty key")
    return Address(hashlib.sha256(sign_public).digest()[:ADDRESS_LEN])


def generate_identity(seed: bytes) -> Identity:
    """Deterministically derive both keypairs and the address from a 32-byte seed."""
    if len(seed) != SEED_LEN:
        raise SeedLength(f"seed must be {SEED_LEN} bytes, got {len(seed)}")
    sign_secret = hashlib.sha256(b"chainmart/sign/v1" + seed).digest()
    enc_secret = hashlib.sha256(b"chainmart/enc/v1" + seed).digest()
    sign_public = (
        Ed25519PrivateKey.from_private_bytes(sign_secret)
        .public_key()
        .public_bytes_raw()
    )
    enc_public = (
        X25519PrivateKey.from_private_bytes(enc_secret)
        .public_key()
        .public_bytes_raw()
    )
    return Identity(
        seed=seed,
        sign_secret=sign_secret,
        sign_public=sign_public,
        enc_secret=enc_secret,
        enc_public=enc_public,
        address=derive_address(sign_public),
    )


def sign(identity: Identity, msg: bytes) -> Signature:
    return Ed25519PrivateKey.from_private_bytes(identity.sign_secret).sign(msg)


def verify(sign_public: bytes, msg: bytes, sig: Signature) -> bool:
    """True iff sig was produced by sign_public's secret over msg.

    Malformed keys or signatures return False rather than raising.
    """
    try:
        Ed25519PublicKey.from_public_bytes(sign_public).verify(sig, msg)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False


def encrypt_record(plaintext: bytes, entropy: Entropy | None = None) -> tuple[DataKey, Ciphertext]:
    """Encrypt under a fresh random data key and nonce."""
    entropy = entropy or _DEFAULT_ENTROPY
    key = DataKey(entropy.take(DATA_KEY_LEN))
    nonce = entropy.take(NONCE_LEN)
    sealed = AESGCM(key).encrypt(nonce, plaintext, None)
    return key, Ciphertext(nonce=nonce, body=sealed[:-TAG_LEN], tag=sealed[-TAG_LEN:])


def decrypt_record(key: DataKey, ct: Ciphertext) -> bytes:
    try:
        return AESGCM(key).decrypt(ct.nonce, ct.body + ct.tag, None)
    except (InvalidTag, ValueError) as exc:
        raise AuthFailure("record decryption failed") from exc


def wrap_key(
    key: DataKey,
    recipient_enc_public: bytes,
    recipient: Address,
    entropy: Entropy | None = None,
) -> WrappedKey:
    """Seal a data key so only the holder of the recipient's enc_secret can open it."""
    entropy = entropy or _DEFAULT_ENTROPY
    try:
        pub = X25519PublicKey.from_public_bytes(recipient_enc_public)
    except (ValueError, TypeError) as exc:
        raise BadPublicKey("recipient key is not a valid X25519 public key") from exc
    eph = X25519PrivateKey.from_private_bytes(entropy.take(32))
    eph_public = eph.public_key().public_bytes_raw()
    shared = eph.exchange(pub)
    wrap = HKDF(
        algorithm=hashes.SHA256(),
        length=DATA_KEY_LEN,
        salt=None,
        info=_WRAP_INFO + eph_public + recipient_enc_public,
    ).derive(shared)
    sealed = AESGCM(wrap).encrypt(_ZERO_NONCE, key, None)
    return WrappedKey(recipient=recipient, blob=lp(eph_public) + lp(sealed))


def unwrap_key(wk: WrappedKey, enc_secret: bytes) -> DataKey:
    try:
        r = ByteReader(wk.blob)
        eph_public = r.take_lp()
        sealed = r.take_lp()
        secret = X25519PrivateKey.from_private_bytes(enc_secret)
        shared = secret.exchange(X25519PublicKey.from_public_bytes(eph_public))
        my_public = secret.public_key().public_bytes_raw()
        wrap = HKDF(
            algorithm=hashes.SHA256(),
            length=DATA_KEY_LEN,
            salt=None,
            info=_WRAP_INFO + eph_public + my_public,
        ).derive(shared)
        return DataKey(AESGCM(wrap).decrypt(_ZERO_NONCE, sealed, None))
    except (InvalidTag, ValueError, TypeError) as exc:
        raise UnwrapFailure("sealed key blob could not be opened") from exc
