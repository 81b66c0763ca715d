"""Keys, hashing, signatures, and encrypt-to-recipient sealing.

Everything runs on secp256k1. Signatures are deterministic ECDSA
(RFC 6979 nonces) over a caller-supplied 32-byte digest, so byte
fixtures are stable across runs. Sealing is a hybrid scheme: a fresh
ephemeral keypair performs ECDH against the recipient's public key,
HKDF-SHA256 expands the shared secret into an AES-256-GCM key, and the
AEAD tag authenticates ephemeral key, nonce, and ciphertext together.

Serialized forms used on the wire:

| Object      | Layout                                                |
|-------------|-------------------------------------------------------|
| public key  | 33 bytes, X9.62 compressed point                      |
| address     | 20 bytes, sha256(compressed public key)[:20]          |
| sealed blob | ephemeral pubkey (33) | nonce (12) | tag (16) | ct    |
| signature   | DER-encoded ECDSA, variable length                    |
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature as _LibInvalidSignature
from cryptography.exceptions import InvalidTag as _LibInvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    Prehashed,
    decode_dss_signature,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import AuthFailure, MalformedBlob, MalformedSignature

CURVE = ec.SECP256K1()
# Order of the secp256k1 group, used to reduce seed material into a scalar.
CURVE_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141

PUBKEY_LEN = 33
NONCE_LEN = 12
TAG_LEN = 16
ADDRESS_LEN = 20

_KDF_INFO = b"paidata/ecies/v1"
_SEED_TAG = b"paidata/keygen/v1"

_SIGN_ALGO = ec.ECDSA(Prehashed(hashes.SHA256()), deterministic_signing=True)
_VERIFY_ALGO = ec.ECDSA(Prehashed(hashes.SHA256()))


def hash_blob(data: bytes) -> bytes:
    """SHA-256 of ``data``; the 32-byte digest used for all identifiers."""
    return hashlib.sha256(data).digest()


def address_from_pubkey(pubkey: bytes) -> bytes:
    """20-byte address of a compressed public key."""
    return hash_blob(pubkey)[:ADDRESS_LEN]


@dataclass(frozen=True)
class KeyPair:
    """A secp256k1 private scalar with its derived public point."""

    _private: ec.EllipticCurvePrivateKey

    @property
    def public_bytes(self) -> bytes:
        """Compressed public key, 33 bytes."""
        return self._private.public_key().public_bytes(
            serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
        )

    @property
    def private_scalar(self) -> int:
        return self._private.private_numbers().private_value

    @property
    def address(self) -> bytes:
        return address_from_pubkey(self.public_bytes)

    @classmethod
    def from_scalar(cls, scalar: int) -> "KeyPair":
        if not 1 <= scalar < CURVE_ORDER:
            raise ValueError("private scalar out of range")
        return cls(ec.derive_private_key(scalar, CURVE))


def generate_keypair(seed: int | bytes | str | None = None) -> KeyPair:
    """Create a keypair; seeded generation is reproducible, unseeded uses os RNG.

    Seeds are convenience for tests and throwaway wallets, not a KDF for
    human passphrases.
    """
    if seed is None:
        return KeyPair(ec.generate_private_key(CURVE))
    if isinstance(seed, int):
        seed_bytes = str(seed).encode()
    elif isinstance(seed, str):
        seed_bytes = seed.encode()
    else:
        seed_bytes = seed
    counter = 0
    while True:
        material = hash_blob(_SEED_TAG + seed_bytes + counter.to_bytes(4, "big"))
        scalar = int.from_bytes(material, "big")
        if 1 <= scalar < CURVE_ORDER:
            return KeyPair.from_scalar(scalar)
        counter += 1


def _load_public(pubkey: bytes) -> ec.EllipticCurvePublicKey:
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, pubkey)
    except ValueError as exc:
        raise MalformedBlob(f"not a valid compressed secp256k1 point: {exc}") from exc


def _derive_key(shared_secret: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=_KDF_INFO
    ).derive(shared_secret)


@dataclass(frozen=True)
class SealedBlob:
    """Ciphertext addressed to a single public key.

    Only the holder of the matching private key can open it; any bit
    flip in any field makes opening fail.
    """

    ephemeral_pubkey: bytes
    nonce: bytes
    ciphertext: bytes
    auth_tag: bytes

    def to_bytes(self) -> bytes:
        return self.ephemeral_pubkey + self.nonce + self.auth_tag + self.ciphertext

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SealedBlob":
        header = PUBKEY_LEN + NONCE_LEN + TAG_LEN
        if len(raw) < header:
            raise MalformedBlob(f"sealed blob too short: {len(raw)} < {header} bytes")
        return cls(
            ephemeral_pubkey=raw[:PUBKEY_LEN],
            nonce=raw[PUBKEY_LEN : PUBKEY_LEN + NONCE_LEN],
            auth_tag=raw[PUBKEY_LEN + NONCE_LEN : header],
            ciphertext=raw[header:],
        )


def seal(plaintext: bytes, recipient_pubkey: bytes) -> SealedBlob:
    """Encrypt ``plaintext`` so only ``recipient_pubkey``'s holder can read it.

    Fresh ephemeral key and nonce per call, so sealing the same message
    twice yields unrelated ciphertexts.
    """
    recipient = _load_public(recipient_pubkey)
    ephemeral = ec.generate_private_key(CURVE)
    ephemeral_pub = ephemeral.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )
    key = _derive_key(ephemeral.exchange(ec.ECDH(), recipient))
    nonce = os.urandom(NONCE_LEN)
    sealed = AESGCM(key).encrypt(nonce, plaintext, ephemeral_pub + nonce)
    return SealedBlob(
        ephemeral_pubkey=ephemeral_pub,
        nonce=nonce,
        ciphertext=sealed[:-TAG_LEN],
        auth_tag=sealed[-TAG_LEN:],
    )


def unseal(blob: SealedBlob, recipient: KeyPair) -> bytes:
    """Open a sealed blob; raises AuthFailure on wrong key or tampering."""
    try:
        ephemeral = _load_public(blob.ephemeral_pubkey)
    except MalformedBlob as exc:
        # A flipped bit can turn the ephemeral key into a non-point; to the
        # caller that is the same failure as a bad tag.
        raise AuthFailure("sealed blob does not open under this key") from exc
    key = _derive_key(recipient._private.exchange(ec.ECDH(), ephemeral))
    try:
        return AESGCM(key).decrypt(
            blob.nonce,
            blob.ciphertext + blob.auth_tag,
            blob.ephemeral_pubkey + blob.nonce,
        )
    except _LibInvalidTag as exc:
        raise AuthFailure("sealed blob does not open under this key") from exc


def sign(digest: bytes, key: KeyPair) -> bytes:
    """Deterministic ECDSA signature over a 32-byte digest."""
    if len(digest) != 32:
        raise ValueError("digest must be exactly 32 bytes")
    return key._private.sign(digest, _SIGN_ALGO)


def verify(digest: bytes, signature: bytes, pubkey: bytes) -> bool:
    """True iff ``signature`` over ``digest`` verifies under ``pubkey``.

    Raises MalformedSignature when the bytes are not even DER; a
    well-formed but wrong signature returns False.
    """
    if len(digest) != 32:
        raise ValueError("digest must be exactly 32 bytes")
    try:
        decode_dss_signature(signature)
    except Exception as exc:
        raise MalformedSignature(f"undecodable signature: {exc}") from exc
    try:
        public = _load_public(pubkey)
    except MalformedBlob:
        return False
    try:
        public.verify(signature, digest, _VERIFY_ALGO)
        return True
    except _LibInvalidSignature:
        return False
