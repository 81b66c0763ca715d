"""Byte-exact wire formats: data envelopes and transactions.

Envelope layout, 38 bytes total, well under the 80-byte OP_RETURN
relay limit:

| Size | Field      | Value                                  |
|------|------------|----------------------------------------|
| 4    | magic      | "PAID" (0x50 0x41 0x49 0x44)           |
| 1    | version    | 0x01                                   |
| 1    | op kind    | 0x00 store / 0x01 grant / 0x02 revoke  |
| 32   | content id | sha256 of the sealed (encrypted) blob  |

Transaction layout. All integers are unsigned LEB128 varints
(minimal-length encoding required); ``varbytes`` is a varint length
followed by that many raw bytes:

    tx      := varint(n_inputs) input* varint(n_outputs) output*
    input   := prev_txid(32) varint(prev_index) varbytes(pubkey) varbytes(signature)
    output  := 0x00 varbytes(address) varint(amount)     (value output)
             | 0x01 varbytes(payload)                    (data output)

txid = sha256 over the full serialization, signatures included; no
malleability defenses at this scale. The signing digest zeroes every
signature field and appends the signing input's index, so all honest
signers of one transaction body hash identical bytes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Union

from .crypto import hash_blob
from .errors import (
    BadLength,
    BadMagic,
    BadOpKind,
    BadVersion,
    IndexOutOfRange,
    MalformedTransaction,
    TooManyDataOutputs,
)

MAGIC = b"PAID"
VERSION = 0x01
CONTENT_ID_LEN = 32
ENVELOPE_LEN = len(MAGIC) + 1 + 1 + CONTENT_ID_LEN  # 38
OP_RETURN_LIMIT = 80

_VALUE_TAG = 0x00
_DATA_TAG = 0x01


class OpKind(enum.IntEnum):
    """Operation byte carried in a data envelope."""

    STORE = 0x00
    GRANT = 0x01
    REVOKE = 0x02


@dataclass(frozen=True)
class PayloadEnvelope:
    """Decoded OP_RETURN payload: an operation on one content id."""

    op: OpKind
    content_id: bytes

    def __post_init__(self) -> None:
        if len(self.content_id) != CONTENT_ID_LEN:
            raise ValueError(
                f"content_id must be {CONTENT_ID_LEN} bytes, got {len(self.content_id)}"
            )
        if not isinstance(self.op, OpKind):
            object.__setattr__(self, "op", OpKind(self.op))


def encode_envelope(env: PayloadEnvelope) -> bytes:
    """Serialize an envelope to its 38-byte wire form."""
    return MAGIC + bytes((VERSION, env.op.value)) + env.content_id


def decode_envelope(raw: bytes) -> PayloadEnvelope:
    """Strict inverse of encode_envelope; no trailing bytes permitted.

    BadMagic means "not one of ours": scanners skip such outputs instead
    of treating them as chain errors.
    """
    if raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"payload magic {raw[:len(MAGIC)]!r} is not {MAGIC!r}")
    if len(raw) != ENVELOPE_LEN:
        raise BadLength(f"envelope must be {ENVELOPE_LEN} bytes, got {len(raw)}")
    if raw[4] != VERSION:
        raise BadVersion(f"unsupported envelope version {raw[4]:#04x}")
    try:
        op = OpKind(raw[5])
    except ValueError:
        raise BadOpKind(f"unknown operation byte {raw[5]:#04x}") from None
    return PayloadEnvelope(op=op, content_id=raw[6:])


# --- varint (unsigned LEB128) -------------------------------------------------

def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varints are unsigned")
    out = bytearray()
    while True:
        group = value & 0x7F
        value >>= 7
        if value:
            out.append(group | 0x80)
        else:
            out.append(group)
            return bytes(out)


class _Reader:
    """Cursor over immutable bytes with strict, bounds-checked reads."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def take(self, n: int) -> bytes:
        if self.remaining() < n:
            raise MalformedTransaction(
                f"need {n} bytes at offset {self._pos}, only {self.remaining()} left"
            )
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def varint(self) -> int:
        shift = 0
        value = 0
        while True:
            byte = self.take(1)[0]
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                if byte == 0 and shift > 0:
                    raise MalformedTransaction("non-minimal varint encoding")
                return value
            shift += 7
            if shift > 63:
                raise MalformedTransaction("varint exceeds 64 bits")

    def varbytes(self) -> bytes:
        return self.take(self.varint())


# --- transactions -------------------------------------------------------------

@dataclass(frozen=True)
class TxInput:
    """Reference to an unspent value output plus the authorizing signature."""

    prev_txid: bytes
    prev_index: int
    pubkey: bytes
    signature: bytes = b""

    def __post_init__(self) -> None:
        if len(self.prev_txid) != 32:
            raise ValueError("prev_txid must be 32 bytes")
        if self.prev_index < 0:
            raise ValueError("prev_index must be non-negative")

    @property
    def outpoint(self) -> tuple[bytes, int]:
        return (self.prev_txid, self.prev_index)


@dataclass(frozen=True)
class ValueOutput:
    address: bytes
    amount: int

    def __post_init__(self) -> None:
        if self.amount < 0:
            raise ValueError("amounts are non-negative integers")


@dataclass(frozen=True)
class DataOutput:
    """Unspendable output carrying raw payload bytes, zero value.

    The payload is arbitrary (foreign protocols share the chain); use
    :meth:`for_envelope` to build one of ours and :meth:`envelope` to
    decode, which raises for payloads that are not valid envelopes.
    """

    payload: bytes

    def __post_init__(self) -> None:
        if len(self.payload) > OP_RETURN_LIMIT:
            raise ValueError(
                f"data payload exceeds the {OP_RETURN_LIMIT}-byte relay limit"
            )

    @classmethod
    def for_envelope(cls, env: PayloadEnvelope) -> "DataOutput":
        return cls(encode_envelope(env))

    def envelope(self) -> PayloadEnvelope:
        return decode_envelope(self.payload)


TxOutput = Union[ValueOutput, DataOutput]


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]

    def __init__(self, inputs, outputs):
        object.__setattr__(self, "inputs", tuple(inputs))
        object.__setattr__(self, "outputs", tuple(outputs))

    @cached_property
    def txid(self) -> bytes:
        return compute_txid(self)

    def data_outputs(self) -> list[DataOutput]:
        return [o for o in self.outputs if isinstance(o, DataOutput)]

    def value_outputs(self) -> list[ValueOutput]:
        return [o for o in self.outputs if isinstance(o, ValueOutput)]

    def is_coinbase(self) -> bool:
        return not self.inputs


def _check_data_outputs(tx: Transaction) -> None:
    if len(tx.data_outputs()) > 1:
        raise TooManyDataOutputs("a transaction may carry at most one data output")


def _serialize(tx: Transaction, blank_signatures: bool = False) -> bytes:
    _check_data_outputs(tx)
    out = bytearray()
    out += encode_varint(len(tx.inputs))
    for inp in tx.inputs:
        out += inp.prev_txid
        out += encode_varint(inp.prev_index)
        out += encode_varint(len(inp.pubkey)) + inp.pubkey
        sig = b"" if blank_signatures else inp.signature
        out += encode_varint(len(sig)) + sig
    out += encode_varint(len(tx.outputs))
    for output in tx.outputs:
        if isinstance(output, ValueOutput):
            out.append(_VALUE_TAG)
            out += encode_varint(len(output.address)) + output.address
            out += encode_varint(output.amount)
        else:
            out.append(_DATA_TAG)
            out += encode_varint(len(output.payload)) + output.payload
    return bytes(out)


def serialize_tx(tx: Transaction) -> bytes:
    """Canonical deterministic serialization; equal transactions, equal bytes."""
    return _serialize(tx)


def deserialize_tx(raw: bytes) -> Transaction:
    """Strict inverse of serialize_tx; trailing bytes are an error."""
    reader = _Reader(raw)
    try:
        inputs = []
        for _ in range(reader.varint()):
            prev_txid = reader.take(32)
            prev_index = reader.varint()
            pubkey = reader.varbytes()
            signature = reader.varbytes()
            inputs.append(TxInput(prev_txid, prev_index, pubkey, signature))
        outputs: list[TxOutput] = []
        for _ in range(reader.varint()):
            tag = reader.take(1)[0]
            if tag == _VALUE_TAG:
                address = reader.varbytes()
                amount = reader.varint()
                outputs.append(ValueOutput(address, amount))
            elif tag == _DATA_TAG:
                outputs.append(DataOutput(reader.varbytes()))
            else:
                raise MalformedTransaction(f"unknown output tag {tag:#04x}")
    except ValueError as exc:
        raise MalformedTransaction(str(exc)) from exc
    if reader.remaining():
        raise MalformedTransaction(f"{reader.remaining()} trailing bytes")
    tx = Transaction(inputs, outputs)
    _check_data_outputs(tx)
    return tx


def compute_txid(tx: Transaction) -> bytes:
    """sha256 of the full serialization; stable across processes."""
    return hash_blob(serialize_tx(tx))


def digest_for_signing(tx: Transaction, input_index: int) -> bytes:
    """Digest each honest signer of ``input_index`` commits to.

    Signatures are blanked so the digest is independent of any
    signatures already present; the index is appended so each input
    signs a distinct message.
    """
    if not 0 <= input_index < len(tx.inputs):
        raise IndexOutOfRange(
            f"input index {input_index} out of range for {len(tx.inputs)} inputs"
        )
    return hash_blob(_serialize(tx, blank_signatures=True) + encode_varint(input_index))
