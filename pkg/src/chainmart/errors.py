"""Exception hierarchy shared by every chainmart component.

Every domain error derives from ChainmartError so API layers can map an
exception class name to a stable machine-readable error code.
"""


class ChainmartError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# -- keys, digests, encryption ---------------------------------------------

class SeedLength(ChainmartError):
    """Identity seed must be exactly 32 bytes."""


class EmptyKey(ChainmartError):
    """Address derivation needs a non-empty public key."""


class AuthFailure(ChainmartError):
    """Authenticated decryption failed: wrong key or tampered ciphertext."""


class UnwrapFailure(ChainmartError):
    """Sealed key blob could not be opened with the given secret."""


class BadPublicKey(ChainmartError):
    """Recipient public key bytes are not valid for the sealing scheme."""


# -- ledger ------------------------------------------------------------------

class BadConfig(ChainmartError):
    """Chain or scenario configuration violates its invariants."""


class BadSignature(ChainmartError):
    """Transaction signature does not verify against the sender key."""


class BadNonce(ChainmartError):
    """Transaction nonce is not the sender's last nonce + 1."""


class DuplicateTx(ChainmartError):
    """Transaction with this txid was already submitted or committed."""


class NotYourTurn(ChainmartError):
    """Validator tried to produce a block out of rotation."""


class UnknownValidator(ChainmartError):
    """Address is not in the validator set (or its key is unavailable)."""


class UnknownStream(ChainmartError):
    """Stream name was not declared in the genesis configuration."""


class BadItem(ChainmartError):
    """Stream item fields violate their invariants."""


class UnknownTx(ChainmartError):
    """No committed or pending transaction with this txid."""


class PendingTx(ChainmartError):
    """Transaction is still in the mempool; no inclusion proof yet."""


# -- off-chain store ----------------------------------------------------------

class EmptyPayload(ChainmartError):
    """Refusing to store an empty ciphertext."""


class NotFound(ChainmartError):
    """No entry under this reference."""


# -- tokens and escrow ---------------------------------------------------------

class ZeroAmount(ChainmartError):
    """Token transfers must move a positive amount."""


class InsufficientFunds(ChainmartError):
    """Balance is too low for the transfer or deposit."""


class BadTerms(ChainmartError):
    """Escrow contract terms are invalid."""


class AlreadyFunded(ChainmartError):
    """This party has already posted its deposit."""


class WrongState(ChainmartError):
    """Operation is not legal in the contract's current state."""


class NotParty(ChainmartError):
    """Address is neither the provider nor the consumer of the contract."""


class NotConsumer(ChainmartError):
    """Only the consumer may confirm or raise a mismatch."""


class BadReceiptSignature(ChainmartError):
    """Delivery receipt is not signed by the contract's provider."""


class PastDeadline(ChainmartError):
    """Delivery happened after the contract's delivery deadline."""


class DigestMismatch(ChainmartError):
    """Receipt does not match the on-chain commitments; raise a mismatch instead."""


class NoMismatch(ChainmartError):
    """Receipt matches the on-chain commitments; there is nothing to slash."""


class NotYetTimedOut(ChainmartError):
    """No timeout clause applies at this clock reading."""


# -- sharing node ---------------------------------------------------------------

class UnsupportedValue(ChainmartError):
    """Record field value outside the canonical encoding's type set."""


class DuplicateRequest(ChainmartError):
    """A retrieval for this digest is already in flight."""


class UnexpectedResponse(ChainmartError):
    """Data response does not match any in-flight retrieval."""


class UnknownCategory(ChainmartError):
    """Owner holds no consent policy for this category."""


# -- shop service ------------------------------------------------------------------

class UnknownSku(ChainmartError):
    """No catalog product with this sku."""


class UnknownSession(ChainmartError):
    """No cart bound to this session id."""


class EmptyCart(ChainmartError):
    """Checkout requires at least one cart line."""


class OutOfStock(ChainmartError):
    """Catalog stock cannot cover the requested quantity."""


class UnknownCustomer(ChainmartError):
    """Address is not a customer of this shop."""


class BadBody(ChainmartError):
    """Request body is not the JSON object an endpoint expects."""
