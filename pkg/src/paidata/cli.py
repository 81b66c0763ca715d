"""Command line surface: node, provider, wallet, data, and custody commands.

Configuration comes from a JSON file (--config flag or PAIDATA_CONFIG
env var) with per-command flags taking precedence:

    {
      "chain_path": "chain.dat",
      "wallet_path": "wallet.json",      # PAIDATA_WALLET overrides
      "providers": ["http://127.0.0.1:8470", "/path/to/local/store"],
      "dust": 1000,
      "chunk_size": 262144,
      "json": false
    }

Every subcommand accepts --json for machine-readable output. Ids,
addresses, keys, and signatures are hex on this surface. Exit codes:
0 success, 2 usage error, and one distinct code per protocol error
class (see EXIT_CODES; the README carries the full table).
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import click

from . import errors as E
from .chain import Chain
from .crypto import KeyPair, generate_keypair
from .custody import rebuild_from_chain
from .provider import DEFAULT_CHUNK_SIZE, ProviderStore
from .provider_http import HttpProviderClient, ProviderHTTPServer
from .workflows import (
    DEFAULT_DUST,
    OwnershipClaim,
    WalletContext,
    delete_from_providers,
    retrieve_data,
    revoke_access,
    share_data,
    split_claim_header,
    store_data,
)

EXIT_CODES: dict[type, int] = {
    E.CodecError: 10,
    E.BadMagic: 11,
    E.BadVersion: 12,
    E.BadOpKind: 13,
    E.BadLength: 14,
    E.TooManyDataOutputs: 15,
    E.MalformedTransaction: 16,
    E.IndexOutOfRange: 17,
    E.CryptoError: 20,
    E.AuthFailure: 21,
    E.MalformedBlob: 22,
    E.MalformedSignature: 23,
    E.ChainError: 30,
    E.InvalidSignature: 31,
    E.UnknownInput: 32,
    E.DoubleSpend: 33,
    E.ValueOverflow: 34,
    E.MissingInputs: 35,
    E.TimestampRegression: 36,
    E.RangeOutOfBounds: 37,
    E.CorruptChainFile: 38,
    E.ProviderError: 40,
    E.NotFound: 41,
    E.EmptyBlob: 42,
    E.StorageFull: 43,
    E.Unauthorized: 44,
    E.ChunkMismatch: 45,
    E.ProviderUnavailable: 46,
    E.LedgerError: 50,
    E.OutOfOrderEvent: 51,
    E.UnknownContent: 52,
    E.WorkflowError: 60,
    E.InsufficientFunds: 61,
    E.NotOwner: 62,
    E.ChainRejected: 63,
    E.PaiDataError: 70,
}


def exit_code_for(exc: E.PaiDataError) -> int:
    for klass in type(exc).__mro__:
        if klass in EXIT_CODES:
            return EXIT_CODES[klass]
    return 70


@dataclass
class CliConfig:
    chain_path: Path = Path("paidata-chain.dat")
    wallet_path: Path = Path("paidata-wallet.json")
    providers: list[str] = field(default_factory=list)
    dust: int = DEFAULT_DUST
    chunk_size: int = DEFAULT_CHUNK_SIZE
    json_output: bool = False

    @classmethod
    def load(cls, config_path: str | None) -> "CliConfig":
        path = config_path or os.environ.get("PAIDATA_CONFIG")
        doc: dict = {}
        if path:
            try:
                doc = json.loads(Path(path).read_text())
            except FileNotFoundError:
                raise click.ClickException(f"config file not found: {path}")
            except json.JSONDecodeError as exc:
                raise click.ClickException(f"config file {path} is not JSON: {exc}")
        cfg = cls(
            chain_path=Path(doc.get("chain_path", "paidata-chain.dat")),
            wallet_path=Path(doc.get("wallet_path", "paidata-wallet.json")),
            providers=list(doc.get("providers", [])),
            dust=int(doc.get("dust", DEFAULT_DUST)),
            chunk_size=int(doc.get("chunk_size", DEFAULT_CHUNK_SIZE)),
            json_output=bool(doc.get("json", False)),
        )
        wallet_env = os.environ.get("PAIDATA_WALLET")
        if wallet_env:
            cfg.wallet_path = Path(wallet_env)
        # Resolve everything up front; no surprises mid-operation.
        cfg.chain_path = cfg.chain_path.expanduser().resolve()
        cfg.wallet_path = cfg.wallet_path.expanduser().resolve()
        return cfg


def _load_wallet(cfg: CliConfig) -> KeyPair:
    if not cfg.wallet_path.exists():
        raise click.ClickException(
            f"wallet file {cfg.wallet_path} does not exist; run `paidata wallet new`"
        )
    doc = json.loads(cfg.wallet_path.read_text())
    return KeyPair.from_scalar(int(doc["private_key_hex"], 16))


def _open_chain(cfg: CliConfig) -> Chain:
    return Chain(persist_path=cfg.chain_path)


def _providers(cfg: CliConfig):
    built = []
    for spec in cfg.providers:
        if spec.startswith("http://") or spec.startswith("https://"):
            built.append(HttpProviderClient(spec))
        else:
            built.append(ProviderStore(Path(spec), chunk_size=cfg.chunk_size))
    return built


def _wallet_ctx(cfg: CliConfig) -> WalletContext:
    providers = _providers(cfg)
    if not providers:
        raise click.ClickException("no providers configured (config key: providers)")
    return WalletContext(
        keypair=_load_wallet(cfg),
        chain=_open_chain(cfg),
        providers=providers,
        dust=cfg.dust,
    )


def _emit(cfg: CliConfig, as_json: bool, doc, human: str) -> None:
    if as_json or cfg.json_output:
        click.echo(json.dumps(doc, indent=2))
    else:
        click.echo(human)


def _parse_hex(value: str, length: int | None, what: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise click.UsageError(f"{what} must be hex")
    if length is not None and len(raw) != length:
        raise click.UsageError(f"{what} must be {length} bytes ({2 * length} hex chars)")
    return raw


def _parse_payment(value: str | None) -> tuple[bytes, int] | None:
    if value is None:
        return None
    try:
        addr_hex, amount = value.rsplit(":", 1)
        return (_parse_hex(addr_hex, 20, "payment address"), int(amount))
    except ValueError:
        raise click.UsageError("--pay expects ADDR_HEX:AMOUNT")


json_flag = click.option("--json", "as_json", is_flag=True, default=False,
                         help="Emit machine-readable JSON.")


@click.group()
@click.option("--config", "config_path", envvar="PAIDATA_CONFIG", default=None,
              help="Path to the JSON config file.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    """Store, share, and revoke access to data anchored on a simulated chain."""
    ctx.obj = CliConfig.load(config_path)


# --- node ---------------------------------------------------------------------

@cli.group()
def node() -> None:
    """Operate the chain node (file-backed, one writer at a time)."""


@node.command("start")
@json_flag
@click.option("--mine-interval", type=float, default=None,
              help="Keep running and mine a block every N seconds.")
@click.pass_obj
def node_start(cfg: CliConfig, as_json: bool, mine_interval: float | None) -> None:
    """Initialize (or replay-validate) the chain file and report status."""
    chain = _open_chain(cfg)
    doc = {
        "chain_path": str(cfg.chain_path),
        "tip_height": chain.tip_height,
        "tip_hash": chain.tip_hash.hex(),
        "mempool": chain.mempool_size(),
    }
    _emit(cfg, as_json, doc,
          f"chain {cfg.chain_path}: height {doc['tip_height']}, tip {doc['tip_hash']}")
    if mine_interval is not None:
        miner = _load_wallet(cfg).address
        click.echo(f"mining to {miner.hex()} every {mine_interval}s; ctrl-c to stop",
                   err=True)
        try:
            while True:
                time.sleep(mine_interval)
                block = chain.mine_block(coinbase_to=miner)
                click.echo(f"mined height {block.height} {block.block_hash.hex()}", err=True)
        except KeyboardInterrupt:
            pass


@node.command("mine")
@json_flag
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--timestamp", type=int, default=None,
              help="Explicit block timestamp (seconds since epoch).")
@click.option("--to", "to_hex", default=None, help="Coinbase address (hex), defaults to the wallet.")
@click.pass_obj
def node_mine(cfg: CliConfig, as_json: bool, count: int, timestamp: int | None,
              to_hex: str | None) -> None:
    """Mine one or more blocks, minting the subsidy to an address."""
    chain = _open_chain(cfg)
    miner = _parse_hex(to_hex, 20, "--to") if to_hex else _load_wallet(cfg).address
    mined = []
    for _ in range(count):
        block = chain.mine_block(timestamp=timestamp, coinbase_to=miner)
        mined.append({
            "height": block.height,
            "block_hash": block.block_hash.hex(),
            "timestamp": block.timestamp,
            "transactions": len(block.transactions),
        })
    human = "\n".join(
        f"mined height {b['height']} ({b['transactions']} txs) {b['block_hash']}"
        for b in mined
    )
    _emit(cfg, as_json, mined, human)


@node.command("scan")
@json_flag
@click.option("--from-height", type=int, default=0, show_default=True)
@click.option("--to-height", type=int, default=None, help="Defaults to the tip.")
@click.pass_obj
def node_scan(cfg: CliConfig, as_json: bool, from_height: int, to_height: int | None) -> None:
    """List every decoded data envelope in a height range."""
    chain = _open_chain(cfg)
    if to_height is None:
        to_height = chain.tip_height
    records = []
    if not (from_height == 0 and to_height < 0):  # empty chain, default range
        records = chain.scan_data_outputs(from_height, to_height)
    doc = [
        {
            "height": r.height,
            "tx_index": r.tx_index,
            "txid": r.txid.hex(),
            "op": r.envelope.op.name.lower(),
            "content_id": r.envelope.content_id.hex(),
            "senders": [a.hex() for a in r.sender_addresses],
            "outputs": [a.hex() for a in r.output_addresses],
        }
        for r in records
    ]
    human = "\n".join(
        f"h{d['height']}#{d['tx_index']} {d['op']:6s} {d['content_id']} tx {d['txid']}"
        for d in doc
    ) or "no data outputs"
    _emit(cfg, as_json, doc, human)


# --- provider -----------------------------------------------------------------

@cli.group()
def provider() -> None:
    """Run a storage provider."""


@provider.command("start")
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--listen", default="127.0.0.1:8470", show_default=True,
              help="HOST:PORT to serve on (port 0 picks a free port).")
@click.option("--capacity", type=int, default=None, help="Capacity cap in bytes.")
@click.option("--chunk-size", type=int, default=None,
              help="Chunk size in bytes, defaults to the config value.")
@click.pass_obj
def provider_start(cfg: CliConfig, data_dir: str, listen: str,
                   capacity: int | None, chunk_size: int | None) -> None:
    """Serve the provider HTTP API until interrupted."""
    try:
        host, port_text = listen.rsplit(":", 1)
        port = int(port_text)
    except ValueError:
        raise click.UsageError("--listen expects HOST:PORT")
    store = ProviderStore(
        Path(data_dir),
        chunk_size=chunk_size or cfg.chunk_size,
        capacity_bytes=capacity,
    )
    server = ProviderHTTPServer(store, host, port)
    click.echo(f"provider serving {store.location} on {server.url}")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


# --- wallet -------------------------------------------------------------------

@cli.group()
def wallet() -> None:
    """Create and inspect wallets."""


def _wallet_doc(keypair: KeyPair) -> dict:
    return {
        "address": keypair.address.hex(),
        "public_key": keypair.public_bytes.hex(),
    }


@wallet.command("new")
@json_flag
@click.option("--seed", default=None, help="Deterministic seed (tests only).")
@click.option("--force", is_flag=True, help="Overwrite an existing wallet file.")
@click.pass_obj
def wallet_new(cfg: CliConfig, as_json: bool, seed: str | None, force: bool) -> None:
    """Generate a keypair and write the wallet file."""
    if cfg.wallet_path.exists() and not force:
        raise click.ClickException(
            f"{cfg.wallet_path} already exists; pass --force to overwrite"
        )
    keypair = generate_keypair(seed)
    cfg.wallet_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.wallet_path.write_text(json.dumps({
        "private_key_hex": f"{keypair.private_scalar:064x}",
        "public_key_hex": keypair.public_bytes.hex(),
        "address_hex": keypair.address.hex(),
    }))
    os.chmod(cfg.wallet_path, 0o600)
    doc = _wallet_doc(keypair) | {"wallet_path": str(cfg.wallet_path)}
    _emit(cfg, as_json, doc, f"address {doc['address']}\npublic key {doc['public_key']}")


@wallet.command("address")
@json_flag
@click.pass_obj
def wallet_address(cfg: CliConfig, as_json: bool) -> None:
    """Print the wallet's address and public key."""
    doc = _wallet_doc(_load_wallet(cfg))
    _emit(cfg, as_json, doc, f"address {doc['address']}\npublic key {doc['public_key']}")


@wallet.command("balance")
@json_flag
@click.pass_obj
def wallet_balance(cfg: CliConfig, as_json: bool) -> None:
    """Spendable balance at the chain tip."""
    keypair = _load_wallet(cfg)
    chain = _open_chain(cfg)
    balance = chain.get_balance(keypair.address)
    doc = {"address": keypair.address.hex(), "balance": balance}
    _emit(cfg, as_json, doc, f"{doc['address']}: {balance}")


# --- data ---------------------------------------------------------------------

@cli.group()
def data() -> None:
    """Store, share, retrieve, and revoke data."""


def _mine_to_self(ctx: WalletContext) -> None:
    ctx.chain.mine_block(coinbase_to=ctx.address)


@data.command("store")
@json_flag
@click.option("--file", "file_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--pay", default=None, help="Provider payment ADDR_HEX:AMOUNT.")
@click.option("--claim", default=None, help="Embed a signed authorship claim.")
@click.option("--no-mine", is_flag=True, help="Leave the transaction in the mempool.")
@click.pass_obj
def data_store(cfg: CliConfig, as_json: bool, file_path: str, pay: str | None,
               claim: str | None, no_mine: bool) -> None:
    """Seal a file to yourself, upload it, and commit the id on-chain."""
    ctx = _wallet_ctx(cfg)
    receipt = store_data(ctx, Path(file_path).read_bytes(),
                         provider_payment=_parse_payment(pay), claim=claim)
    if not no_mine:
        _mine_to_self(ctx)
        receipt.confirm(ctx.chain)
    doc = receipt.to_json()
    _emit(cfg, as_json, doc,
          f"content {doc['content_id']}\ntx {doc['txid']} height {doc['height']}")


@data.command("share")
@json_flag
@click.option("--file", "file_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--to-pubkey", required=True, help="Recipient public key (33-byte hex).")
@click.option("--pay", default=None, help="Provider payment ADDR_HEX:AMOUNT.")
@click.option("--claim", default=None, help="Embed a signed authorship claim.")
@click.option("--no-mine", is_flag=True, help="Leave the transactions in the mempool.")
@click.pass_obj
def data_share(cfg: CliConfig, as_json: bool, file_path: str, to_pubkey: str,
               pay: str | None, claim: str | None, no_mine: bool) -> None:
    """Seal a file to a recipient, upload it, and grant them on-chain."""
    ctx = _wallet_ctx(cfg)
    recipient = _parse_hex(to_pubkey, 33, "--to-pubkey")
    receipt = share_data(ctx, Path(file_path).read_bytes(), recipient,
                         provider_payment=_parse_payment(pay), claim=claim)
    if not no_mine:
        _mine_to_self(ctx)
        receipt.confirm(ctx.chain)
    doc = receipt.to_json()
    _emit(cfg, as_json, doc,
          f"content {doc['content_id']}\ngrant tx {doc['txid']} height {doc['height']}")


@data.command("retrieve")
@json_flag
@click.option("--id", "id_hex", required=True, help="Content id (32-byte hex).")
@click.option("--out", "out_path", default=None,
              type=click.Path(dir_okay=False), help="Write bytes here instead of stdout.")
@click.option("--strip-claim", is_flag=True,
              help="Parse, verify, and remove an authorship claim header.")
@click.pass_obj
def data_retrieve(cfg: CliConfig, as_json: bool, id_hex: str, out_path: str | None,
                  strip_claim: bool) -> None:
    """Download, verify, and decrypt a content id."""
    ctx = _wallet_ctx(cfg)
    content_id = _parse_hex(id_hex, 32, "--id")
    body = retrieve_data(ctx, content_id)
    claim: OwnershipClaim | None = None
    claim_valid = None
    if strip_claim:
        claim, body = split_claim_header(body)
        if claim is not None:
            claim_valid = claim.verify(body)
    if out_path:
        Path(out_path).write_bytes(body)
    doc = {
        "content_id": id_hex,
        "bytes": len(body),
        "out": out_path,
        "claimant": claim.claimant if claim else None,
        "claim_valid": claim_valid,
    }
    if out_path or as_json or cfg.json_output:
        human = f"wrote {len(body)} bytes to {out_path}"
        if claim:
            human += f"\nclaimant {claim.claimant} (signature valid: {claim_valid})"
        _emit(cfg, as_json, doc, human)
    else:
        sys.stdout.buffer.write(body)


@data.command("revoke")
@json_flag
@click.option("--id", "id_hex", required=True, help="Content id (32-byte hex).")
@click.option("--addr", "addr_hex", required=True, help="Recipient address (20-byte hex).")
@click.option("--delete-from-providers", "delete_flag", is_flag=True,
              help="Also ask every provider to delete its copy (after mining).")
@click.option("--no-mine", is_flag=True, help="Leave the transaction in the mempool.")
@click.pass_obj
def data_revoke(cfg: CliConfig, as_json: bool, id_hex: str, addr_hex: str,
                delete_flag: bool, no_mine: bool) -> None:
    """Revoke a recipient's grant; optionally delete hosted copies."""
    ctx = _wallet_ctx(cfg)
    content_id = _parse_hex(id_hex, 32, "--id")
    recipient = _parse_hex(addr_hex, 20, "--addr")
    receipt = revoke_access(ctx, content_id, recipient,
                            also_delete_from_providers=False)
    if not no_mine:
        _mine_to_self(ctx)
        receipt.height = ctx.chain.tx_height(receipt.txid)
    if delete_flag:
        # Deletion goes out only after the revoke is on-chain.
        receipt.provider_results = delete_from_providers(ctx, content_id)
    doc = receipt.to_json()
    human = f"revoke tx {doc['txid']} height {doc['height']}"
    for result in doc["providers"]:
        status = "deleted" if result["deleted"] else f"failed: {result['detail']}"
        human += f"\nprovider {result['location']}: {status}"
    _emit(cfg, as_json, doc, human)


# --- custody ------------------------------------------------------------------

@cli.group()
def custody() -> None:
    """Query the chain-derived custody ledger."""


@custody.command("history")
@json_flag
@click.option("--id", "id_hex", required=True, help="Content id (32-byte hex).")
@click.pass_obj
def custody_history(cfg: CliConfig, as_json: bool, id_hex: str) -> None:
    """Full event history for a content id."""
    content_id = _parse_hex(id_hex, 32, "--id")
    state = rebuild_from_chain(_open_chain(cfg))
    record = state.contents.get(content_id)
    if record is None:
        raise E.UnknownContent(id_hex)
    doc = {
        "content_id": id_hex,
        "owner": record.owner.hex() if record.owner else None,
        "active_grants": sorted(a.hex() for a in record.active_grants),
        "history": [
            {
                "height": e.event.height,
                "tx_index": e.event.tx_index,
                "txid": e.event.txid.hex(),
                "op": e.event.op.name.lower(),
                "actor": e.event.actor.hex() if e.event.actor else None,
                "subject": e.event.subject.hex() if e.event.subject else None,
                "timestamp": e.event.block_timestamp,
                "effective": e.effective,
                "note": e.note,
            }
            for e in record.history
        ],
    }
    lines = [f"owner {doc['owner']}"]
    for entry in doc["history"]:
        mark = "ok" if entry["effective"] else f"ineffective ({entry['note']})"
        lines.append(
            f"h{entry['height']}#{entry['tx_index']} {entry['op']:6s} "
            f"actor {entry['actor']} subject {entry['subject']} [{mark}]"
        )
    _emit(cfg, as_json, doc, "\n".join(lines))


@custody.command("access")
@json_flag
@click.option("--id", "id_hex", required=True, help="Content id (32-byte hex).")
@click.option("--addr", "addr_hex", required=True, help="Address (20-byte hex).")
@click.pass_obj
def custody_access(cfg: CliConfig, as_json: bool, id_hex: str, addr_hex: str) -> None:
    """Access status of an address for a content id."""
    content_id = _parse_hex(id_hex, 32, "--id")
    address = _parse_hex(addr_hex, 20, "--addr")
    state = rebuild_from_chain(_open_chain(cfg))
    status = state.query_access(content_id, address)
    doc = {"content_id": id_hex, "address": addr_hex, "status": status.value}
    _emit(cfg, as_json, doc, status.value)


@custody.command("proof")
@json_flag
@click.option("--id", "id_hex", required=True, help="Content id (32-byte hex).")
@click.pass_obj
def custody_proof(cfg: CliConfig, as_json: bool, id_hex: str) -> None:
    """Existence proof: chain coordinates of the first store event."""
    content_id = _parse_hex(id_hex, 32, "--id")
    state = rebuild_from_chain(_open_chain(cfg))
    proof = state.proof_of_existence(content_id)
    doc = {
        "content_id": id_hex,
        "height": proof.height,
        "timestamp": proof.timestamp,
        "txid": proof.txid.hex(),
    }
    _emit(cfg, as_json, doc,
          f"height {proof.height} timestamp {proof.timestamp} tx {proof.txid.hex()}")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except E.PaiDataError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(exit_code_for(exc))


if __name__ == "__main__":
    main()
