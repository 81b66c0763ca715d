"""Deterministic append-only blockchain simulator.

Single block producer, no proof of work, no reorgs: the data protocol
is consensus-agnostic, so consensus stays trivial and reproducible.
Blocks drain the mempool in submission order; every block starts with a
coinbase minting a fixed subsidy. The coinbase carries a small foreign
data payload tagging the block height, which keeps coinbase txids
unique when the same address mines twice (and doubles as a fixture for
the scanner's skip-unknown-magic rule).

Value that a transaction leaves unclaimed (inputs exceed outputs) is
destroyed, not paid to the miner, so the supply ledger stays a one-line
equation: sum(UTXO) + destroyed == blocks * SUBSIDY.

Block layout (hash is sha256 over these bytes):

    block := varint(height) prev_hash(32) varint(timestamp)
             varint(n_tx) varbytes(tx)*

The chain optionally persists to an append-only file: an 8-byte header
"PAIDCHN1" followed by varbytes(block) records. Reload replays from
genesis with full validation and reproduces the tip hash bit-exactly.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .codec import (
    DataOutput,
    PayloadEnvelope,
    Transaction,
    ValueOutput,
    _Reader,
    digest_for_signing,
    encode_varint,
    serialize_tx,
    deserialize_tx,
)
from .crypto import address_from_pubkey, hash_blob, verify
from .errors import (
    ChainError,
    CodecError,
    CorruptChainFile,
    DoubleSpend,
    InvalidSignature,
    MalformedSignature,
    MissingInputs,
    RangeOutOfBounds,
    TimestampRegression,
    TooManyDataOutputs,
    UnknownInput,
    ValueOverflow,
)

SUBSIDY = 50_000_000
GENESIS_PREV_HASH = bytes(32)

_CHAIN_FILE_MAGIC = b"PAIDCHN1"
_COINBASE_TAG = b"MINE"

Outpoint = tuple[bytes, int]


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    timestamp: int
    transactions: tuple[Transaction, ...]

    def __init__(self, height, prev_hash, timestamp, transactions):
        object.__setattr__(self, "height", height)
        object.__setattr__(self, "prev_hash", prev_hash)
        object.__setattr__(self, "timestamp", timestamp)
        object.__setattr__(self, "transactions", tuple(transactions))

    @cached_property
    def block_hash(self) -> bytes:
        return hash_blob(serialize_block(self))


@dataclass(frozen=True)
class ScanRecord:
    """One decoded data output, addressed by its chain coordinates."""

    height: int
    tx_index: int
    txid: bytes
    sender_addresses: tuple[bytes, ...]
    output_addresses: tuple[bytes, ...]
    envelope: PayloadEnvelope


def serialize_block(block: Block) -> bytes:
    out = bytearray()
    out += encode_varint(block.height)
    out += block.prev_hash
    out += encode_varint(block.timestamp)
    out += encode_varint(len(block.transactions))
    for tx in block.transactions:
        raw = serialize_tx(tx)
        out += encode_varint(len(raw)) + raw
    return bytes(out)


def deserialize_block(raw: bytes) -> Block:
    reader = _Reader(raw)
    height = reader.varint()
    prev_hash = reader.take(32)
    timestamp = reader.varint()
    transactions = [deserialize_tx(reader.varbytes()) for _ in range(reader.varint())]
    if reader.remaining():
        raise CorruptChainFile(f"{reader.remaining()} trailing bytes in block record")
    return Block(height, prev_hash, timestamp, transactions)


def _coinbase_for(height: int, address: bytes) -> Transaction:
    # The height tag makes each coinbase serialization unique.
    tag = DataOutput(_COINBASE_TAG + encode_varint(height))
    return Transaction(inputs=(), outputs=(ValueOutput(address, SUBSIDY), tag))


class Chain:
    """Chain state plus mempool behind a single lock.

    All mutating operations are serialized; reads take the same lock
    briefly and return immutable snapshots, so the structure is safe to
    share across threads.
    """

    def __init__(self, persist_path: str | Path | None = None,
                 default_miner: bytes | None = None):
        self._lock = threading.RLock()
        self.blocks: list[Block] = []
        self.default_miner = default_miner
        # (txid, index) -> (address, amount) for unspent value outputs.
        self._utxos: dict[Outpoint, tuple[bytes, int]] = {}
        # Every value outpoint that ever existed, spent or not; lets
        # validation tell a double spend apart from a reference to nowhere.
        self._ever_outpoints: set[Outpoint] = set()
        self._tx_location: dict[bytes, tuple[int, int]] = {}
        self._destroyed = 0
        self._mempool: list[Transaction] = []
        self._mempool_spent: set[Outpoint] = set()
        self._mempool_created: dict[Outpoint, tuple[bytes, int]] = {}
        self._persist_path = Path(persist_path) if persist_path else None
        if self._persist_path is not None:
            if self._persist_path.exists():
                self._replay_file()
            else:
                self._persist_path.parent.mkdir(parents=True, exist_ok=True)
                self._persist_path.write_bytes(_CHAIN_FILE_MAGIC)

    # --- queries ---------------------------------------------------------

    @property
    def tip_height(self) -> int:
        """Height of the newest block, -1 when no block is mined yet."""
        with self._lock:
            return len(self.blocks) - 1

    @property
    def tip_hash(self) -> bytes:
        with self._lock:
            return self.blocks[-1].block_hash if self.blocks else GENESIS_PREV_HASH

    def block_at(self, height: int) -> Block:
        with self._lock:
            if not 0 <= height < len(self.blocks):
                raise RangeOutOfBounds(f"no block at height {height}")
            return self.blocks[height]

    def get_balance(self, address: bytes) -> int:
        with self._lock:
            return sum(
                amount for (addr, amount) in self._utxos.values() if addr == address
            )

    def list_utxos(self, address: bytes) -> list[tuple[bytes, int, int]]:
        """Unspent (txid, index, amount) triples for ``address`` at the tip."""
        with self._lock:
            return [
                (txid, index, amount)
                for (txid, index), (addr, amount) in self._utxos.items()
                if addr == address
            ]

    def available_utxos(self, address: bytes) -> list[tuple[bytes, int, int]]:
        """Like list_utxos but mempool-aware: pending spends are excluded
        and pending change is included, so a wallet can chain unconfirmed
        transactions without double-spending itself."""
        with self._lock:
            merged = {
                op: entry
                for op, entry in self._utxos.items()
                if op not in self._mempool_spent
            }
            merged.update(self._mempool_created)
            return [
                (txid, index, amount)
                for (txid, index), (addr, amount) in merged.items()
                if addr == address
            ]

    def tx_height(self, txid: bytes) -> int | None:
        """Height of the block containing ``txid``, None while unmined."""
        with self._lock:
            loc = self._tx_location.get(txid)
            return loc[0] if loc else None

    def utxo_total(self) -> int:
        with self._lock:
            return sum(amount for (_, amount) in self._utxos.values())

    @property
    def destroyed(self) -> int:
        with self._lock:
            return self._destroyed

    def mempool_size(self) -> int:
        with self._lock:
            return len(self._mempool)

    # --- validation ------------------------------------------------------

    def _validate_tx(self, tx: Transaction, view: dict[Outpoint, tuple[bytes, int]]) -> None:
        """Full validation of a non-coinbase transaction against a UTXO view."""
        if tx.is_coinbase():
            raise MissingInputs("non-coinbase transactions need at least one input")
        if len(tx.data_outputs()) > 1:
            raise TooManyDataOutputs("at most one data output per transaction")
        seen: set[Outpoint] = set()
        value_in = 0
        for index, inp in enumerate(tx.inputs):
            outpoint = inp.outpoint
            if outpoint in seen:
                raise DoubleSpend(f"input {index} repeats an outpoint within the tx")
            seen.add(outpoint)
            if outpoint not in view:
                if outpoint in self._ever_outpoints:
                    raise DoubleSpend(
                        f"outpoint {outpoint[0].hex()}:{outpoint[1]} already spent"
                    )
                raise UnknownInput(
                    f"outpoint {outpoint[0].hex()}:{outpoint[1]} does not exist"
                )
            owner, amount = view[outpoint]
            if address_from_pubkey(inp.pubkey) != owner:
                raise InvalidSignature(
                    f"input {index} pubkey does not own the referenced output"
                )
            digest = digest_for_signing(tx, index)
            try:
                ok = verify(digest, inp.signature, inp.pubkey)
            except MalformedSignature as exc:
                raise InvalidSignature(f"input {index}: {exc}") from exc
            if not ok:
                raise InvalidSignature(f"input {index} signature does not verify")
            value_in += amount
        value_out = sum(o.amount for o in tx.value_outputs())
        if value_out > value_in:
            raise ValueOverflow(f"outputs {value_out} exceed inputs {value_in}")

    def _validate_coinbase(self, tx: Transaction) -> None:
        if not tx.is_coinbase():
            raise ChainError("block does not start with a coinbase")
        minted = sum(o.amount for o in tx.value_outputs())
        if minted != SUBSIDY:
            raise ChainError(f"coinbase mints {minted}, expected {SUBSIDY}")
        if len(tx.data_outputs()) > 1:
            raise TooManyDataOutputs("at most one data output per transaction")

    # --- mutations -------------------------------------------------------

    def submit_tx(self, tx: Transaction) -> bytes:
        """Validate and enqueue a transaction; returns its txid."""
        with self._lock:
            view = {
                op: entry
                for op, entry in self._utxos.items()
                if op not in self._mempool_spent
            }
            view.update(self._mempool_created)
            self._validate_tx(tx, view)
            txid = tx.txid
            for inp in tx.inputs:
                self._mempool_spent.add(inp.outpoint)
                self._mempool_created.pop(inp.outpoint, None)
            for index, output in enumerate(tx.outputs):
                if isinstance(output, ValueOutput):
                    outpoint = (txid, index)
                    self._mempool_created[outpoint] = (output.address, output.amount)
                    self._ever_outpoints.add(outpoint)
            self._mempool.append(tx)
            return txid

    def mine_block(self, timestamp: int | None = None,
                   coinbase_to: bytes | None = None) -> Block:
        """Drain the mempool in FIFO order into a new block."""
        with self._lock:
            miner = coinbase_to if coinbase_to is not None else self.default_miner
            if miner is None:
                raise ValueError("no coinbase address: pass coinbase_to or set default_miner")
            height = len(self.blocks)
            parent_ts = self.blocks[-1].timestamp if self.blocks else None
            if timestamp is None:
                timestamp = int(time.time())
                if parent_ts is not None:
                    timestamp = max(parent_ts + 1, timestamp)
            else:
                if timestamp < 0:
                    raise TimestampRegression("timestamps are non-negative")
                if parent_ts is not None and timestamp < parent_ts:
                    raise TimestampRegression(
                        f"timestamp {timestamp} precedes parent {parent_ts}"
                    )
            txs = [_coinbase_for(height, miner)] + self._mempool
            block = Block(height, self.tip_hash, timestamp, txs)
            self._connect_block(block)
            self._mempool = []
            self._mempool_spent = set()
            self._mempool_created = {}
            if self._persist_path is not None:
                raw = serialize_block(block)
                with self._persist_path.open("ab") as fh:
                    fh.write(encode_varint(len(raw)) + raw)
            return block

    def _connect_block(self, block: Block) -> None:
        """Validate a block against the tip and apply it. Lock held."""
        if block.height != len(self.blocks):
            raise ChainError(f"expected height {len(self.blocks)}, got {block.height}")
        if block.prev_hash != self.tip_hash:
            raise ChainError("prev_hash does not match the tip")
        if self.blocks and block.timestamp < self.blocks[-1].timestamp:
            raise TimestampRegression(
                f"timestamp {block.timestamp} precedes parent {self.blocks[-1].timestamp}"
            )
        if not block.transactions:
            raise ChainError("blocks carry at least a coinbase")
        self._validate_coinbase(block.transactions[0])
        view = dict(self._utxos)
        destroyed = 0
        for tx_index, tx in enumerate(block.transactions):
            if tx_index > 0:
                self._validate_tx(tx, view)
            value_in = 0
            for inp in tx.inputs:
                value_in += view.pop(inp.outpoint)[1]
            txid = tx.txid
            for index, output in enumerate(tx.outputs):
                if isinstance(output, ValueOutput):
                    view[(txid, index)] = (output.address, output.amount)
            if not tx.is_coinbase():
                destroyed += value_in - sum(o.amount for o in tx.value_outputs())
        for tx_index, tx in enumerate(block.transactions):
            txid = tx.txid
            self._tx_location[txid] = (block.height, tx_index)
            for index, output in enumerate(tx.outputs):
                if isinstance(output, ValueOutput):
                    self._ever_outpoints.add((txid, index))
        self._utxos = view
        self._destroyed += destroyed
        self.blocks.append(block)

    # --- scanning --------------------------------------------------------

    def scan_data_outputs(self, from_height: int, to_height: int) -> list[ScanRecord]:
        """Decoded data envelopes in (height, tx_index) order, inclusive range.

        Payloads that do not decode as protocol envelopes (foreign magic
        or malformed) are skipped silently; the chain hosts them, the
        protocol ignores them.
        """
        with self._lock:
            if not 0 <= from_height <= to_height <= self.tip_height:
                raise RangeOutOfBounds(
                    f"range [{from_height}, {to_height}] outside [0, {self.tip_height}]"
                )
            records = []
            for height in range(from_height, to_height + 1):
                block = self.blocks[height]
                for tx_index, tx in enumerate(block.transactions):
                    for output in tx.data_outputs():
                        try:
                            envelope = output.envelope()
                        except CodecError:
                            continue
                        senders = []
                        for inp in tx.inputs:
                            addr = address_from_pubkey(inp.pubkey)
                            if addr not in senders:
                                senders.append(addr)
                        records.append(
                            ScanRecord(
                                height=height,
                                tx_index=tx_index,
                                txid=tx.txid,
                                sender_addresses=tuple(senders),
                                output_addresses=tuple(
                                    o.address for o in tx.value_outputs()
                                ),
                                envelope=envelope,
                            )
                        )
            return records

    # --- persistence -----------------------------------------------------

    def _replay_file(self) -> None:
        raw = self._persist_path.read_bytes()
        if raw[: len(_CHAIN_FILE_MAGIC)] != _CHAIN_FILE_MAGIC:
            raise CorruptChainFile(f"{self._persist_path} is not a chain file")
        reader = _Reader(raw[len(_CHAIN_FILE_MAGIC) :])
        try:
            while reader.remaining():
                block = deserialize_block(reader.varbytes())
                self._connect_block(block)
        except CorruptChainFile:
            raise
        except ChainError as exc:
            raise CorruptChainFile(f"replay failed: {exc}") from exc
        except CodecError as exc:
            raise CorruptChainFile(f"undecodable block record: {exc}") from exc
