import dataclasses

import pytest

from paidata import (
    Chain,
    DataOutput,
    OpKind,
    PayloadEnvelope,
    ProviderStore,
    Transaction,
    TxInput,
    ValueOutput,
    WalletContext,
    digest_for_signing,
    generate_keypair,
    sign,
)
from paidata.chain import SUBSIDY


@pytest.fixture
def alice():
    return generate_keypair(seed="alice")


@pytest.fixture
def bob():
    return generate_keypair(seed="bob")


@pytest.fixture
def carol():
    return generate_keypair(seed="carol")


@pytest.fixture
def chain():
    return Chain()


@pytest.fixture
def provider(tmp_path):
    return ProviderStore(tmp_path / "provider")


@pytest.fixture
def funded_alice(chain, provider, alice):
    """Alice with one coinbase to spend and a local provider."""
    chain.mine_block(coinbase_to=alice.address)
    return WalletContext(alice, chain, [provider])


def sign_tx(tx: Transaction, keypair) -> Transaction:
    """Sign every input of ``tx`` with one key."""
    signed = tuple(
        dataclasses.replace(inp, signature=sign(digest_for_signing(tx, i), keypair))
        for i, inp in enumerate(tx.inputs)
    )
    return Transaction(inputs=signed, outputs=tx.outputs)


def simple_spend(chain: Chain, keypair, outputs) -> Transaction:
    """Build and sign a tx spending the key's first UTXO into ``outputs``."""
    utxos = chain.available_utxos(keypair.address)
    assert utxos, "no funds to spend"
    txid, index, amount = max(utxos, key=lambda u: u[2])
    total_out = sum(o.amount for o in outputs if isinstance(o, ValueOutput))
    change = amount - total_out
    assert change >= 0, "test spends more than the utxo holds"
    outs = list(outputs)
    if change > 0:
        outs.append(ValueOutput(keypair.address, change))
    tx = Transaction(
        inputs=(TxInput(txid, index, keypair.public_bytes),),
        outputs=tuple(outs),
    )
    return sign_tx(tx, keypair)


def storage_tx(chain: Chain, keypair, content_id: bytes,
               op: OpKind = OpKind.STORE, extra_outputs=()) -> Transaction:
    """The canonical protocol transaction: one envelope plus value outputs."""
    env = PayloadEnvelope(op, content_id)
    return simple_spend(chain, keypair, [DataOutput.for_envelope(env), *extra_outputs])


__all__ = ["SUBSIDY", "sign_tx", "simple_spend", "storage_tx"]
