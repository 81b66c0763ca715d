"""Storage and sharing transactions over OP_RETURN data envelopes.

Data is sealed to a recipient key, hosted by content-addressed storage
providers, and anchored on a simulated UTXO chain whose store, grant,
and revoke envelopes fold into an immutable custody ledger.
"""

from .chain import SUBSIDY, Block, Chain, ScanRecord
from .codec import (
    DataOutput,
    OpKind,
    PayloadEnvelope,
    Transaction,
    TxInput,
    ValueOutput,
    compute_txid,
    decode_envelope,
    digest_for_signing,
    encode_envelope,
    serialize_tx,
    deserialize_tx,
)
from .crypto import (
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
from .custody import (
    AccessStatus,
    CustodyEvent,
    CustodyState,
    ProofOfExistence,
    events_from_chain,
    rebuild_from_chain,
)
from .provider import ContentManifest, ProviderStore, build_manifest, deletion_digest
from .provider_http import HttpProviderClient, ProviderHTTPServer, start_in_thread
from .workflows import (
    StoreReceipt,
    RevokeReceipt,
    WalletContext,
    add_claim_header,
    delete_from_providers,
    retrieve_data,
    revoke_access,
    share_data,
    split_claim_header,
    store_data,
)

__version__ = "0.1.0"
