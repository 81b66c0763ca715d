"""Exception hierarchy shared by every subsystem.

Errors are grouped per layer so callers can catch a whole family
(e.g. ``except ChainError``) or a precise condition. The CLI maps each
leaf class to a distinct exit code; see ``paidata.cli.EXIT_CODES``.
"""


class PaiDataError(Exception):
    """Base class for every error raised by this package."""


# --- wire codec -------------------------------------------------------------

class CodecError(PaiDataError):
    """Malformed bytes on the wire."""


class BadMagic(CodecError):
    """Payload does not start with the protocol magic; not ours, skip it."""


class BadVersion(CodecError):
    pass


class BadOpKind(CodecError):
    pass


class BadLength(CodecError):
    pass


class TooManyDataOutputs(CodecError):
    """A transaction may carry at most one data output."""


class MalformedTransaction(CodecError):
    """Transaction bytes do not parse under the documented layout."""


class IndexOutOfRange(PaiDataError):
    """An index (signing input, chunk number) is outside the valid range."""


# --- crypto -----------------------------------------------------------------

class CryptoError(PaiDataError):
    pass


class AuthFailure(CryptoError):
    """Wrong key or tampered blob; the two are indistinguishable by design."""


class MalformedBlob(CryptoError):
    """Sealed blob bytes are structurally invalid (e.g. truncated)."""


class MalformedSignature(CryptoError):
    """Signature bytes do not parse as a DER-encoded ECDSA signature."""


# --- chain ------------------------------------------------------------------

class ChainError(PaiDataError):
    pass


class InvalidSignature(ChainError):
    """An input's signature does not authorize spending its outpoint."""


class UnknownInput(ChainError):
    """Input references an outpoint that never existed."""


class DoubleSpend(ChainError):
    """Input references an outpoint that is already spent."""


class ValueOverflow(ChainError):
    """Outputs claim more value than the inputs provide."""


class MissingInputs(ChainError):
    """Non-coinbase transactions must spend at least one outpoint."""


class TimestampRegression(ChainError):
    """Explicit block timestamp is earlier than the parent's."""


class RangeOutOfBounds(ChainError):
    """Scan range falls outside [0, tip height]."""


class CorruptChainFile(ChainError):
    """Persisted chain bytes fail replay validation."""


# --- provider ---------------------------------------------------------------

class ProviderError(PaiDataError):
    pass


class NotFound(ProviderError):
    """Content is not hosted here; never stored and revoked look identical."""


class EmptyBlob(ProviderError):
    pass


class StorageFull(ProviderError):
    pass


class Unauthorized(ProviderError):
    """Delete request not signed by the recorded submitter key."""


class ChunkMismatch(ProviderError):
    """Served chunk bytes fail their digest check; corrupt or malicious host."""


class ProviderUnavailable(ProviderError):
    """No configured provider answered."""


# --- custody ledger ---------------------------------------------------------

class LedgerError(PaiDataError):
    pass


class OutOfOrderEvent(LedgerError):
    """Events must be applied in (height, tx_index) order."""


class UnknownContent(LedgerError):
    """No on-chain event mentions this content id."""


# --- client workflows -------------------------------------------------------

class WorkflowError(PaiDataError):
    pass


class InsufficientFunds(WorkflowError):
    pass


class NotOwner(WorkflowError):
    """Local guard: only the content owner issues grants and revokes."""


class ChainRejected(WorkflowError):
    """The chain refused a workflow-built transaction."""
