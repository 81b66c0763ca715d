"""End-to-end flows wiring crypto, provider, chain, and custody ledger.

Storing: seal to your own key, upload the sealed bytes, commit the
content id on-chain in a store envelope, keep the change. Sharing:
seal to the recipient's key, upload, claim the fresh content id with a
store envelope, then grant it with a grant envelope whose dust output
names the recipient. Retrieval downloads and verifies every chunk
before any decryption. Revocation writes the revoke envelope on-chain
and, on request, asks every configured provider to delete its copy.

Workflow calls return once their transactions sit in the mempool;
mining is the caller's move (tests and the CLI mine explicitly), so
receipts carry ``height=None`` until the caller confirms them.

A share uploads bytes sealed to the recipient, so it creates a brand
new content id. The grant alone would be unauthorized: nobody owns an
id until its first store event. The share flow therefore submits an
ownership-claim store transaction immediately before the grant; both
confirm in order and the custody ledger shows store-then-grant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

from .chain import Chain
from .codec import (
    DataOutput,
    OpKind,
    PayloadEnvelope,
    Transaction,
    TxInput,
    ValueOutput,
    digest_for_signing,
    encode_varint,
    _Reader,
)
from .crypto import (
    KeyPair,
    SealedBlob,
    address_from_pubkey,
    hash_blob,
    seal,
    sign,
    unseal,
    verify,
)
from .custody import rebuild_from_chain
from .errors import (
    ChainError,
    ChainRejected,
    ChunkMismatch,
    CodecError,
    InsufficientFunds,
    NotFound,
    NotOwner,
    PaiDataError,
    ProviderUnavailable,
    StorageFull,
)
from .provider import ContentManifest, ProviderStore, deletion_digest
from .provider_http import HttpProviderClient

Provider = Union[ProviderStore, HttpProviderClient]

DEFAULT_DUST = 1000

CLAIM_MAGIC = b"PAIC"


@dataclass(frozen=True)
class WalletContext:
    """Everything a party needs to act: key, chain handle, providers."""

    keypair: KeyPair
    chain: Chain
    providers: Sequence[Provider]
    dust: int = DEFAULT_DUST

    @property
    def address(self) -> bytes:
        return self.keypair.address


@dataclass
class StoreReceipt:
    """Outcome of a store or share; height stays None until mined."""

    content_id: bytes
    txid: bytes
    manifest: ContentManifest
    height: int | None = None
    claim_txid: bytes | None = None

    def confirm(self, chain: Chain) -> "StoreReceipt":
        self.height = chain.tx_height(self.txid)
        return self

    def to_json(self) -> dict:
        return {
            "content_id": self.content_id.hex(),
            "txid": self.txid.hex(),
            "claim_txid": self.claim_txid.hex() if self.claim_txid else None,
            "height": self.height,
            "manifest": self.manifest.to_json(),
        }


@dataclass(frozen=True)
class ProviderDeleteResult:
    location: str
    deleted: bool
    detail: str = ""


@dataclass
class RevokeReceipt:
    txid: bytes
    height: int | None = None
    provider_results: tuple[ProviderDeleteResult, ...] = ()

    def to_json(self) -> dict:
        return {
            "txid": self.txid.hex(),
            "height": self.height,
            "providers": [
                {"location": r.location, "deleted": r.deleted, "detail": r.detail}
                for r in self.provider_results
            ],
        }


# --- ownership claim header ---------------------------------------------------

@dataclass(frozen=True)
class OwnershipClaim:
    """Optional plaintext prefix binding a claimant to the document.

    Verifiable only after decryption, which is the point: the claim
    travels inside the sealed payload, invisible to providers.
    """

    claimant: str
    pubkey: bytes
    signature: bytes

    def verify(self, document: bytes) -> bool:
        try:
            return verify(hash_blob(document), self.signature, self.pubkey)
        except PaiDataError:
            return False


def add_claim_header(document: bytes, claimant: str, key: KeyPair) -> bytes:
    """Prepend a signed authorship claim to ``document``."""
    name = claimant.encode()
    signature = sign(hash_blob(document), key)
    return (
        CLAIM_MAGIC
        + encode_varint(len(name)) + name
        + encode_varint(len(key.public_bytes)) + key.public_bytes
        + encode_varint(len(signature)) + signature
        + document
    )


def split_claim_header(data: bytes) -> tuple[OwnershipClaim | None, bytes]:
    """Separate a claim header from the document; (None, data) if absent."""
    if not data.startswith(CLAIM_MAGIC):
        return None, data
    reader = _Reader(data[len(CLAIM_MAGIC):])
    try:
        name = reader.varbytes()
        pubkey = reader.varbytes()
        signature = reader.varbytes()
        claim = OwnershipClaim(name.decode(), pubkey, signature)
    except (CodecError, UnicodeDecodeError):
        return None, data
    return claim, data[len(data) - reader.remaining():]


# --- transaction assembly -------------------------------------------------------

def _build_signed_tx(ctx: WalletContext, envelope: PayloadEnvelope,
                     value_outputs: Sequence[ValueOutput]) -> Transaction:
    """Select coins, attach the envelope and outputs, sign every input."""
    needed = sum(o.amount for o in value_outputs)
    candidates = [
        u for u in ctx.chain.available_utxos(ctx.address) if u[2] > 0
    ]
    candidates.sort(key=lambda u: (-u[2], u[0], u[1]))
    selected: list[tuple[bytes, int, int]] = []
    total = 0
    for utxo in candidates:
        selected.append(utxo)
        total += utxo[2]
        if total >= needed and selected:
            break
    if total < needed or not selected:
        raise InsufficientFunds(
            f"need {needed} plus an anchor input, have {total} spendable"
        )
    outputs: list = [DataOutput.for_envelope(envelope), *value_outputs]
    change = total - needed
    if change > 0:
        outputs.append(ValueOutput(ctx.address, change))
    inputs = tuple(
        TxInput(txid, index, ctx.keypair.public_bytes) for txid, index, _ in selected
    )
    unsigned = Transaction(inputs=inputs, outputs=tuple(outputs))
    signed_inputs = tuple(
        replace(inp, signature=sign(digest_for_signing(unsigned, i), ctx.keypair))
        for i, inp in enumerate(unsigned.inputs)
    )
    return Transaction(inputs=signed_inputs, outputs=unsigned.outputs)


def _submit(ctx: WalletContext, tx: Transaction) -> bytes:
    try:
        return ctx.chain.submit_tx(tx)
    except ChainError as exc:
        raise ChainRejected(f"{type(exc).__name__}: {exc}") from exc


def _upload(ctx: WalletContext, blob: bytes) -> ContentManifest:
    """First reachable provider wins; full providers are skipped too."""
    failures = []
    for provider in ctx.providers:
        try:
            return provider.upload(blob, ctx.keypair.public_bytes)
        except (ProviderUnavailable, StorageFull) as exc:
            failures.append(f"{provider.location}: {exc}")
    raise ProviderUnavailable("; ".join(failures) or "no providers configured")


def _payment_outputs(provider_payment: tuple[bytes, int] | None) -> list[ValueOutput]:
    if provider_payment is None:
        return []
    address, amount = provider_payment
    return [ValueOutput(address, amount)]


# --- workflows ------------------------------------------------------------------

def store_data(ctx: WalletContext, plaintext: bytes,
               provider_payment: tuple[bytes, int] | None = None,
               claim: str | None = None) -> StoreReceipt:
    """Seal to self, host with a provider, commit the id on-chain."""
    body = add_claim_header(plaintext, claim, ctx.keypair) if claim else plaintext
    blob = seal(body, ctx.keypair.public_bytes).to_bytes()
    content_id = hash_blob(blob)
    manifest = _upload(ctx, blob)
    if manifest.content_id != content_id:
        raise ChunkMismatch(
            f"provider manifest names {manifest.content_id.hex()}, "
            f"uploaded bytes hash to {content_id.hex()}"
        )
    envelope = PayloadEnvelope(OpKind.STORE, content_id)
    tx = _build_signed_tx(ctx, envelope, _payment_outputs(provider_payment))
    txid = _submit(ctx, tx)
    return StoreReceipt(content_id=content_id, txid=txid, manifest=manifest)


def share_data(ctx: WalletContext, plaintext: bytes, recipient_pubkey: bytes,
               provider_payment: tuple[bytes, int] | None = None,
               claim: str | None = None) -> StoreReceipt:
    """Seal to the recipient, host, then claim and grant the new id."""
    body = add_claim_header(plaintext, claim, ctx.keypair) if claim else plaintext
    blob = seal(body, recipient_pubkey).to_bytes()
    content_id = hash_blob(blob)
    manifest = _upload(ctx, blob)
    if manifest.content_id != content_id:
        raise ChunkMismatch(
            f"provider manifest names {manifest.content_id.hex()}, "
            f"uploaded bytes hash to {content_id.hex()}"
        )
    claim_tx = _build_signed_tx(ctx, PayloadEnvelope(OpKind.STORE, content_id), [])
    claim_txid = _submit(ctx, claim_tx)
    recipient_addr = address_from_pubkey(recipient_pubkey)
    grant_outputs = [ValueOutput(recipient_addr, ctx.dust)]
    grant_outputs += _payment_outputs(provider_payment)
    grant_tx = _build_signed_tx(
        ctx, PayloadEnvelope(OpKind.GRANT, content_id), grant_outputs
    )
    txid = _submit(ctx, grant_tx)
    return StoreReceipt(
        content_id=content_id, txid=txid, manifest=manifest, claim_txid=claim_txid
    )


def retrieve_data(ctx: WalletContext, content_id: bytes) -> bytes:
    """Fetch, verify chunk by chunk, and open with our private key."""
    providers = list(ctx.providers)
    unreachable = 0
    for provider in providers:
        try:
            manifest = provider.get_manifest(content_id)
            chunks = [
                provider.get_chunk(content_id, i) for i in range(manifest.chunk_count)
            ]
        except NotFound:
            continue
        except ProviderUnavailable:
            unreachable += 1
            continue
        for i, chunk in enumerate(chunks):
            if hash_blob(chunk) != manifest.chunk_digests[i]:
                raise ChunkMismatch(
                    f"chunk {i} from {provider.location} fails its digest"
                )
        blob = b"".join(chunks)
        if hash_blob(blob) != content_id or manifest.content_id != content_id:
            raise ChunkMismatch(
                f"reassembled bytes from {provider.location} do not hash to the id"
            )
        return unseal(SealedBlob.from_bytes(blob), ctx.keypair)
    if providers and unreachable == len(providers):
        raise ProviderUnavailable("every configured provider is unreachable")
    raise NotFound(content_id.hex())


def revoke_access(ctx: WalletContext, content_id: bytes, recipient_addr: bytes,
                  also_delete_from_providers: bool = False) -> RevokeReceipt:
    """Write a revoke envelope; optionally ask providers to drop the bytes.

    The on-chain revoke is the permanent record; provider deletions are
    best-effort and reported per provider without failing the call.
    Callers who want the revoke mined before the bytes vanish should
    mine between this and :func:`delete_from_providers` themselves.
    """
    state = rebuild_from_chain(ctx.chain)
    record = state.contents.get(content_id)
    if record is None or record.owner != ctx.address:
        raise NotOwner(
            f"{ctx.address.hex()} does not own {content_id.hex()} per the ledger"
        )
    envelope = PayloadEnvelope(OpKind.REVOKE, content_id)
    tx = _build_signed_tx(ctx, envelope, [ValueOutput(recipient_addr, ctx.dust)])
    txid = _submit(ctx, tx)
    results: tuple[ProviderDeleteResult, ...] = ()
    if also_delete_from_providers:
        results = delete_from_providers(ctx, content_id)
    return RevokeReceipt(txid=txid, provider_results=results)


def delete_from_providers(ctx: WalletContext,
                          content_id: bytes) -> tuple[ProviderDeleteResult, ...]:
    """Signed delete to every configured provider; never raises."""
    signature = sign(deletion_digest(content_id), ctx.keypair)
    results = []
    for provider in ctx.providers:
        try:
            provider.delete_content(content_id, ctx.keypair.public_bytes, signature)
            results.append(ProviderDeleteResult(provider.location, True))
        except PaiDataError as exc:
            results.append(
                ProviderDeleteResult(provider.location, False, f"{type(exc).__name__}: {exc}")
            )
    return tuple(results)
