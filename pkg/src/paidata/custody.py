"""Custody ledger: folds on-chain data envelopes into access state.

Replaying every store/grant/revoke envelope in (height, tx_index)
order yields, per content id: who owns it (the actor of the first
store event, first writer wins), who currently holds a grant, and the
complete event history. The fold is pure: the same chain always
rebuilds the same state.

Authorization policy: only the owner issues effective grants and
revokes. Everything else still lands in the history, marked
ineffective, because the chain cannot censor it and auditors want to
see it; it just never changes the access sets. Re-granting after a
revoke is allowed and effective.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .chain import Chain, ScanRecord
from .codec import OpKind
from .errors import OutOfOrderEvent, UnknownContent


class AccessStatus(enum.Enum):
    OWNER = "Owner"
    GRANTED = "Granted"
    REVOKED = "Revoked"
    NO_RELATION = "NoRelation"


@dataclass(frozen=True)
class CustodyEvent:
    """One protocol envelope at its chain coordinates.

    ``actor`` is the first input's address (who signed and paid);
    ``subject`` is the first value-output address other than the
    actor's own, the grant or revoke target. The block timestamp rides
    along so existence proofs need no second chain lookup.
    """

    height: int
    tx_index: int
    txid: bytes
    op: OpKind
    content_id: bytes
    actor: bytes | None
    subject: bytes | None
    block_timestamp: int

    @property
    def position(self) -> tuple[int, int]:
        return (self.height, self.tx_index)


@dataclass(frozen=True)
class HistoryEntry:
    event: CustodyEvent
    effective: bool
    note: str = ""


@dataclass(frozen=True)
class ProofOfExistence:
    height: int
    timestamp: int
    txid: bytes


@dataclass(eq=True)
class ContentCustody:
    """Access state of a single content id."""

    owner: bytes | None = None
    active_grants: set[bytes] = field(default_factory=set)
    ever_granted: set[bytes] = field(default_factory=set)
    history: list[HistoryEntry] = field(default_factory=list)


@dataclass(eq=True)
class CustodyState:
    """Access state for every content id seen on the chain."""

    contents: dict[bytes, ContentCustody] = field(default_factory=dict)
    last_applied: tuple[int, int] | None = None

    def apply_event(self, event: CustodyEvent) -> None:
        """Fold one event in; events must arrive in chain order."""
        if self.last_applied is not None and event.position <= self.last_applied:
            raise OutOfOrderEvent(
                f"event at {event.position} after {self.last_applied}"
            )
        self.last_applied = event.position
        record = self.contents.setdefault(event.content_id, ContentCustody())
        effective, note = self._effect(record, event)
        record.history.append(HistoryEntry(event, effective, note))

    @staticmethod
    def _effect(record: ContentCustody, event: CustodyEvent) -> tuple[bool, str]:
        if event.op is OpKind.STORE:
            if event.actor is None:
                return False, "no-actor"
            if record.owner is None:
                record.owner = event.actor
                return True, ""
            return False, "duplicate-store"
        if event.op is OpKind.GRANT:
            if record.owner is None or event.actor != record.owner:
                return False, "unauthorized"
            if event.subject is None:
                return False, "no-subject"
            record.active_grants.add(event.subject)
            record.ever_granted.add(event.subject)
            return True, ""
        # revoke
        if record.owner is None or event.actor != record.owner:
            return False, "unauthorized"
        if event.subject is None:
            return False, "no-subject"
        if event.subject not in record.active_grants:
            return False, "not-granted"
        record.active_grants.discard(event.subject)
        return True, ""

    @classmethod
    def rebuild(cls, events) -> "CustodyState":
        """Left fold from empty state; deterministic."""
        state = cls()
        for event in events:
            state.apply_event(event)
        return state

    def query_access(self, content_id: bytes, address: bytes) -> AccessStatus:
        record = self.contents.get(content_id)
        if record is None:
            raise UnknownContent(content_id.hex())
        if address == record.owner:
            return AccessStatus.OWNER
        if address in record.active_grants:
            return AccessStatus.GRANTED
        if address in record.ever_granted:
            return AccessStatus.REVOKED
        return AccessStatus.NO_RELATION

    def proof_of_existence(self, content_id: bytes) -> ProofOfExistence:
        """Chain coordinates of the earliest store event for ``content_id``."""
        record = self.contents.get(content_id)
        if record is not None:
            for entry in record.history:
                if entry.event.op is OpKind.STORE:
                    return ProofOfExistence(
                        height=entry.event.height,
                        timestamp=entry.event.block_timestamp,
                        txid=entry.event.txid,
                    )
        raise UnknownContent(f"no store event for {content_id.hex()}")


def event_from_scan(record: ScanRecord, block_timestamp: int) -> CustodyEvent:
    actor = record.sender_addresses[0] if record.sender_addresses else None
    subject = next((a for a in record.output_addresses if a != actor), None)
    return CustodyEvent(
        height=record.height,
        tx_index=record.tx_index,
        txid=record.txid,
        op=record.envelope.op,
        content_id=record.envelope.content_id,
        actor=actor,
        subject=subject,
        block_timestamp=block_timestamp,
    )


def events_from_chain(chain: Chain, from_height: int = 0,
                      to_height: int | None = None) -> list[CustodyEvent]:
    if to_height is None:
        to_height = chain.tip_height
    if to_height < from_height:
        return []
    records = chain.scan_data_outputs(from_height, to_height)
    return [
        event_from_scan(r, chain.block_at(r.height).timestamp) for r in records
    ]


def rebuild_from_chain(chain: Chain, from_height: int = 0,
                       to_height: int | None = None) -> CustodyState:
    """Scan the chain and fold every envelope into a fresh state."""
    return CustodyState.rebuild(events_from_chain(chain, from_height, to_height))
