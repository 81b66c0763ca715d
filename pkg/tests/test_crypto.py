"""Key, hash, signature, and sealing tests."""

import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from paidata import (
    KeyPair,
    SealedBlob,
    address_from_pubkey,
    generate_keypair,
    hash_blob,
    seal,
    sign,
    unseal,
    verify,
)
from paidata.errors import AuthFailure, MalformedBlob, MalformedSignature


# --- hashing ----------------------------------------------------------------

def test_hash_empty_standard_vector():
    assert hash_blob(b"") == bytes.fromhex(
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )


def test_hash_abc_standard_vector():
    assert hash_blob(b"abc") == bytes.fromhex(
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )


@given(st.binary(max_size=256))
def test_hash_deterministic(data):
    assert hash_blob(data) == hashlib.sha256(data).digest()


# --- keys -------------------------------------------------------------------

def test_seeded_keypair_reproducible():
    assert generate_keypair(seed=42).private_scalar == generate_keypair(seed=42).private_scalar
    assert generate_keypair(seed="x").address == generate_keypair(seed="x").address


def test_distinct_seeds_distinct_keys():
    scalars = {generate_keypair(seed=i).private_scalar for i in range(100)}
    assert len(scalars) == 100


def test_unseeded_keypairs_differ():
    assert generate_keypair().private_scalar != generate_keypair().private_scalar


def test_public_key_is_scalar_times_generator():
    kp = generate_keypair(seed=7)
    rebuilt = KeyPair.from_scalar(kp.private_scalar)
    assert rebuilt.public_bytes == kp.public_bytes
    assert len(kp.public_bytes) == 33
    assert kp.public_bytes[0] in (2, 3)


def test_address_is_20_bytes_and_deterministic():
    kp = generate_keypair(seed=9)
    assert len(kp.address) == 20
    assert kp.address == address_from_pubkey(kp.public_bytes)
    assert kp.address == hashlib.sha256(kp.public_bytes).digest()[:20]


def test_scalar_bounds_rejected():
    with pytest.raises(ValueError):
        KeyPair.from_scalar(0)


# --- sealing ------------------------------------------------------------------

@given(st.binary(max_size=2048))
def test_seal_unseal_round_trip(message):
    kp = generate_keypair(seed="sealer")
    assert unseal(seal(message, kp.public_bytes), kp) == message


def test_empty_message_round_trips():
    kp = generate_keypair(seed=1)
    assert unseal(seal(b"", kp.public_bytes), kp) == b""


def test_sealing_is_randomized():
    kp = generate_keypair(seed=1)
    first = seal(b"same message", kp.public_bytes)
    second = seal(b"same message", kp.public_bytes)
    assert first.to_bytes() != second.to_bytes()
    assert first.ephemeral_pubkey != second.ephemeral_pubkey
    assert first.nonce != second.nonce


def test_ciphertext_differs_from_plaintext():
    kp = generate_keypair(seed=1)
    message = b"sixteen byte msg" * 4
    blob = seal(message, kp.public_bytes)
    assert message not in blob.to_bytes()


def test_wrong_key_fails():
    kp = generate_keypair(seed=1)
    other = generate_keypair(seed=2)
    blob = seal(b"only for one", kp.public_bytes)
    with pytest.raises(AuthFailure):
        unseal(blob, other)


def test_every_single_bit_flip_fails():
    """Exhaustive flip over a short fixture blob: all fields covered."""
    kp = generate_keypair(seed="bits")
    raw = seal(b"fixture message!", kp.public_bytes).to_bytes()
    for byte_index in range(len(raw)):
        for bit in range(8):
            mutated = bytearray(raw)
            mutated[byte_index] ^= 1 << bit
            with pytest.raises(AuthFailure):
                unseal(SealedBlob.from_bytes(bytes(mutated)), kp)


def test_truncated_blob_rejected():
    kp = generate_keypair(seed=1)
    raw = seal(b"msg", kp.public_bytes).to_bytes()
    with pytest.raises(MalformedBlob):
        SealedBlob.from_bytes(raw[:60])
    with pytest.raises(AuthFailure):
        unseal(SealedBlob.from_bytes(raw[:-1]), kp)


def test_sealed_blob_serialization_round_trip():
    kp = generate_keypair(seed=1)
    blob = seal(b"payload bytes", kp.public_bytes)
    again = SealedBlob.from_bytes(blob.to_bytes())
    assert again == blob
    assert len(again.ephemeral_pubkey) == 33
    assert len(again.nonce) == 12
    assert len(again.auth_tag) == 16


# --- signatures -----------------------------------------------------------------

@given(st.binary(min_size=32, max_size=32))
def test_sign_verify_round_trip(digest):
    kp = generate_keypair(seed="signer")
    assert verify(digest, sign(digest, kp), kp.public_bytes)


def test_signatures_deterministic():
    kp = generate_keypair(seed=3)
    digest = hash_blob(b"stable fixture")
    assert sign(digest, kp) == sign(digest, kp)


def test_verify_wrong_pubkey_false():
    kp = generate_keypair(seed=3)
    other = generate_keypair(seed=4)
    digest = hash_blob(b"doc")
    assert not verify(digest, sign(digest, kp), other.public_bytes)


@given(st.binary(min_size=32, max_size=32), st.integers(0, 255))
def test_verify_flipped_digest_false(digest, flip):
    kp = generate_keypair(seed="flip")
    signature = sign(digest, kp)
    mutated = bytearray(digest)
    mutated[flip // 8] ^= 1 << (flip % 8)
    assert not verify(bytes(mutated), signature, kp.public_bytes)


def test_garbage_signature_is_malformed():
    kp = generate_keypair(seed=3)
    with pytest.raises(MalformedSignature):
        verify(hash_blob(b"x"), b"not a der signature", kp.public_bytes)


def test_digest_length_enforced():
    kp = generate_keypair(seed=3)
    with pytest.raises(ValueError):
        sign(b"short", kp)
    with pytest.raises(ValueError):
        verify(b"short", b"\x30\x00", kp.public_bytes)
