"""Acceptance suite: one test per criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to watch the lines.
Random inputs are seeded, so every run exercises the same corpus.
"""

import random
import time
from contextlib import contextmanager

import pytest

from paidata import (
    AccessStatus,
    Chain,
    CustodyState,
    OpKind,
    ProviderStore,
    WalletContext,
    decode_envelope,
    encode_envelope,
    generate_keypair,
    hash_blob,
    rebuild_from_chain,
    retrieve_data,
    revoke_access,
    seal,
    share_data,
    sign,
    store_data,
    unseal,
    verify,
)
from paidata.codec import PayloadEnvelope
from paidata.crypto import SealedBlob
from paidata.custody import CustodyEvent
from paidata.errors import AuthFailure, CodecError, NotFound

from custody_oracle import naive_access, naive_fold

MIB = 1024 * 1024


@contextmanager
def criterion(number, name, budget=None):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number} {name}: FAIL", flush=True)
        raise
    elapsed = time.perf_counter() - started
    if budget is not None:
        assert elapsed < budget, f"{name} took {elapsed:.1f}s, budget {budget}s"
    note = f" ({elapsed:.1f}s, budget {budget}s)" if budget else f" ({elapsed:.1f}s)"
    print(f"\nACCEPTANCE {number} {name}: PASS{note}", flush=True)


def document_sizes(rng, count):
    """Sizes spanning 0 bytes to 4 MiB with both endpoints forced in."""
    sizes = [0, 4 * MIB]
    while len(sizes) < count:
        if rng.random() < 0.5:
            sizes.append(rng.randrange(0, 16 * 1024))
        else:
            sizes.append(rng.randrange(0, 4 * MIB + 1))
    rng.shuffle(sizes)
    return sizes


def test_criterion_1_storage_round_trip(tmp_path):
    with criterion(1, "storage-round-trip", budget=60):
        rng = random.Random(0xF161)
        chain = Chain()
        provider = ProviderStore(tmp_path / "store-provider")
        alice = generate_keypair(seed="acc1-alice")
        ctx = WalletContext(alice, chain, [provider])
        chain.mine_block(coinbase_to=alice.address)

        documents = [rng.randbytes(size) for size in document_sizes(rng, 100)]
        receipts = []
        for document in documents:
            receipt = store_data(ctx, document)
            chain.mine_block(coinbase_to=alice.address)
            receipts.append(receipt)

        for document, receipt in zip(documents, receipts):
            assert retrieve_data(ctx, receipt.content_id) == document

        state = rebuild_from_chain(chain)
        proofs = {}
        for receipt in receipts:
            assert state.query_access(receipt.content_id, alice.address) is AccessStatus.OWNER
            proofs[receipt.content_id] = state.proof_of_existence(receipt.content_id)

        chain.mine_block(coinbase_to=alice.address)
        chain.mine_block(coinbase_to=alice.address)
        extended = rebuild_from_chain(chain)
        for content_id, proof in proofs.items():
            assert extended.proof_of_existence(content_id) == proof


def test_criterion_2_sharing_round_trip(tmp_path):
    with criterion(2, "sharing-round-trip", budget=60):
        rng = random.Random(0xF162)
        chain = Chain()
        provider = ProviderStore(tmp_path / "share-provider")
        alice = generate_keypair(seed="acc2-alice")
        bob = generate_keypair(seed="acc2-bob")
        carol = generate_keypair(seed="acc2-carol")
        actx = WalletContext(alice, chain, [provider])
        bctx = WalletContext(bob, chain, [provider])
        cctx = WalletContext(carol, chain, [provider])
        chain.mine_block(coinbase_to=alice.address)

        documents = [rng.randbytes(rng.randrange(0, 64 * 1024)) for _ in range(100)]
        receipts = []
        for document in documents:
            receipt = share_data(actx, document, bob.public_bytes)
            chain.mine_block(coinbase_to=alice.address)
            receipts.append(receipt)

        for document, receipt in zip(documents, receipts):
            assert retrieve_data(bctx, receipt.content_id) == document
            with pytest.raises(AuthFailure):
                retrieve_data(actx, receipt.content_id)
            with pytest.raises(AuthFailure):
                retrieve_data(cctx, receipt.content_id)


def test_criterion_3_custody_oracle_equivalence():
    with criterion(3, "custody-oracle-equivalence", budget=30):
        rng = random.Random(0xF163)
        addresses = [bytes([x]) * 20 for x in range(1, 7)]
        contents = [hash_blob(bytes([x])) for x in range(4)]
        for _ in range(1000):
            events = []
            for i in range(rng.randrange(51)):
                events.append(CustodyEvent(
                    height=i,
                    tx_index=rng.randrange(3),
                    txid=hash_blob(f"{i}".encode()),
                    op=rng.choice(list(OpKind)),
                    content_id=rng.choice(contents),
                    actor=rng.choice(addresses + [None]),
                    subject=rng.choice(addresses + [None]),
                    block_timestamp=i,
                ))
            state = CustodyState.rebuild(events)
            oracle = naive_fold(
                [(e.op.name.lower(), e.content_id, e.actor, e.subject) for e in events]
            )
            assert set(state.contents) == set(oracle)
            for content_id, row in oracle.items():
                record = state.contents[content_id]
                assert record.owner == row["owner"]
                assert record.active_grants == row["active"]
                assert record.ever_granted == row["ever"]
                assert len(record.history) == row["n_events"]
                assert [h.effective for h in record.history] == row["effects"]
                for address in addresses:
                    assert (state.query_access(content_id, address).value
                            == naive_access(row, address))


def test_criterion_4_provider_blindness(tmp_path):
    with criterion(4, "provider-blindness", budget=30):
        rng = random.Random(0xF164)
        marker = bytes(rng.randbytes(64))
        chain = Chain()
        provider = ProviderStore(tmp_path / "blind-provider")
        alice = generate_keypair(seed="acc4-alice")
        ctx = WalletContext(alice, chain, [provider])
        chain.mine_block(coinbase_to=alice.address)

        for _ in range(50):
            size = rng.randrange(256, 32 * 1024)
            body = bytearray(rng.randbytes(size))
            offset = rng.randrange(0, size - 64) if size > 64 else 0
            body[offset : offset + 64] = marker
            store_data(ctx, bytes(body))
            chain.mine_block(coinbase_to=alice.address)

        files = [p for p in provider.data_dir.rglob("*") if p.is_file()]
        assert len(files) >= 50 * 3  # manifest + entry + at least one chunk each
        for path in files:
            assert marker not in path.read_bytes()


def test_criterion_5_revoke_semantics(tmp_path):
    with criterion(5, "revoke-semantics"):
        chain = Chain()
        provider = ProviderStore(tmp_path / "revoke-provider")
        alice = generate_keypair(seed="acc5-alice")
        bob = generate_keypair(seed="acc5-bob")
        actx = WalletContext(alice, chain, [provider])
        bctx = WalletContext(bob, chain, [provider])
        chain.mine_block(timestamp=1_700_000_000, coinbase_to=alice.address)

        receipt = share_data(actx, b"granted then revoked", bob.public_bytes)
        chain.mine_block(timestamp=1_700_000_100, coinbase_to=alice.address)
        assert retrieve_data(bctx, receipt.content_id) == b"granted then revoked"
        granted_state = rebuild_from_chain(chain)
        assert granted_state.query_access(receipt.content_id, bob.address) is AccessStatus.GRANTED

        revoke = revoke_access(actx, receipt.content_id, bob.address,
                               also_delete_from_providers=True)
        chain.mine_block(timestamp=1_700_000_200, coinbase_to=alice.address)

        state = rebuild_from_chain(chain)
        assert state.query_access(receipt.content_id, bob.address) is AccessStatus.REVOKED
        assert all(r.deleted for r in revoke.provider_results)
        with pytest.raises(NotFound):
            retrieve_data(bctx, receipt.content_id)

        # the full grant/revoke sequence stays embedded on the chain
        history = state.contents[receipt.content_id].history
        assert [h.event.op for h in history] == [OpKind.STORE, OpKind.GRANT, OpKind.REVOKE]
        assert [h.effective for h in history] == [True, True, True]
        rerun = rebuild_from_chain(chain)
        assert rerun == state  # deterministic replay


def test_criterion_6_codec_fuzzing():
    with criterion(6, "codec-fuzzing", budget=60):
        rng = random.Random(0xF166)
        bases = [
            encode_envelope(PayloadEnvelope(rng.choice(list(OpKind)), rng.randbytes(32)))
            for _ in range(64)
        ]
        decoded_valid = 0
        for _ in range(100_000):
            raw = bytearray(rng.choice(bases))
            for _ in range(rng.randrange(1, 4)):
                mutation = rng.randrange(4)
                if mutation == 0 and raw:
                    raw[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
                elif mutation == 1 and raw:
                    del raw[rng.randrange(len(raw))]
                elif mutation == 2:
                    raw.insert(rng.randrange(len(raw) + 1), rng.randrange(256))
                else:
                    raw = bytearray(rng.randbytes(rng.randrange(0, 80)))
            raw = bytes(raw)
            try:
                envelope = decode_envelope(raw)
            except CodecError:
                continue
            assert encode_envelope(envelope) == raw
            decoded_valid += 1
        assert decoded_valid > 0  # some mutations land on valid encodings


def test_criterion_7_conservation_and_replay(tmp_path):
    with criterion(7, "chain-conservation-and-replay"):
        from paidata.chain import SUBSIDY

        path = tmp_path / "acceptance-chain.dat"
        chain = Chain(persist_path=path)
        provider = ProviderStore(tmp_path / "acc7-provider")
        alice = generate_keypair(seed="acc7-alice")
        bob = generate_keypair(seed="acc7-bob")
        actx = WalletContext(alice, chain, [provider])
        chain.mine_block(coinbase_to=alice.address)
        chain.mine_block(coinbase_to=bob.address)

        stored = store_data(actx, b"conserved data",
                            provider_payment=(bob.address, 4321))
        chain.mine_block(coinbase_to=alice.address)
        shared = share_data(actx, b"shared conserved data", bob.public_bytes)
        chain.mine_block(coinbase_to=alice.address)
        revoke_access(actx, shared.content_id, bob.address,
                      also_delete_from_providers=True)
        chain.mine_block(coinbase_to=bob.address)

        assert chain.utxo_total() == len(chain.blocks) * SUBSIDY
        assert chain.destroyed == 0

        reloaded = Chain(persist_path=path)
        assert reloaded.tip_hash == chain.tip_hash
        assert reloaded.tip_height == chain.tip_height
        assert reloaded.utxo_total() == chain.utxo_total()
        assert [b.block_hash for b in reloaded.blocks] == [b.block_hash for b in chain.blocks]
        # the reloaded chain serves identical scan results
        assert (reloaded.scan_data_outputs(0, reloaded.tip_height)
                == chain.scan_data_outputs(0, chain.tip_height))


def test_criterion_8_crypto_property_suites():
    with criterion(8, "crypto-property-suites"):
        rng = random.Random(0xF168)
        keys = [generate_keypair(seed=f"acc8-{i}") for i in range(8)]

        # seal/open: 1000 randomized round trips with wrong-key rejections
        for i in range(1000):
            keypair = keys[i % len(keys)]
            message = rng.randbytes(rng.randrange(0, 512))
            blob = seal(message, keypair.public_bytes)
            assert unseal(blob, keypair) == message
            if i % 10 == 0:
                wrong = keys[(i + 1) % len(keys)]
                with pytest.raises(AuthFailure):
                    unseal(blob, wrong)

        # sign/verify: 1000 randomized matched and mismatched checks
        for i in range(1000):
            keypair = keys[i % len(keys)]
            digest = rng.randbytes(32)
            signature = sign(digest, keypair)
            assert verify(digest, signature, keypair.public_bytes)
            other = keys[(i + 3) % len(keys)]
            assert not verify(digest, signature, other.public_bytes)

        # bit-flip rejection: 1000 single-bit corruptions must fail closed
        sealed_pool = [
            (keys[i % len(keys)], seal(rng.randbytes(64), keys[i % len(keys)].public_bytes))
            for i in range(16)
        ]
        for i in range(500):
            keypair, blob = sealed_pool[i % len(sealed_pool)]
            raw = bytearray(blob.to_bytes())
            raw[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
            with pytest.raises(AuthFailure):
                unseal(SealedBlob.from_bytes(bytes(raw)), keypair)
        for i in range(500):
            keypair = keys[i % len(keys)]
            digest = rng.randbytes(32)
            signature = sign(digest, keypair)
            flipped = bytearray(digest)
            flipped[rng.randrange(32)] ^= 1 << rng.randrange(8)
            assert not verify(bytes(flipped), signature, keypair.public_bytes)
