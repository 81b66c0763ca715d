"""Storage provider: a content-addressed chunk store with signed deletion.

The provider only ever sees sealed (encrypted) bytes. Each blob is
split into fixed-size chunks and addressed by the sha256 of the whole
blob; the manifest lists per-chunk digests so clients verify every
byte they download. Deletion is bound to the uploader: requests must
be signed by the public key recorded at upload time.

On-disk layout under the data directory, one subdirectory per blob:

    <content_id hex>/
        manifest.json     written last on upload, removed first on delete
        entry.json        submitter pubkey and upload time
        00000000.chunk
        00000001.chunk
        ...

Readers treat the presence of manifest.json as the commit point, so a
half-written upload or half-finished delete is never served.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .crypto import hash_blob, verify
from .errors import (
    EmptyBlob,
    IndexOutOfRange,
    MalformedSignature,
    NotFound,
    StorageFull,
    Unauthorized,
)

DEFAULT_CHUNK_SIZE = 262_144  # 256 KiB, a common torrent piece size

_DELETE_CONTEXT = b"DELETE"


def deletion_digest(content_id: bytes) -> bytes:
    """Digest a submitter signs to authorize deleting ``content_id``."""
    return hash_blob(content_id + _DELETE_CONTEXT)


@dataclass(frozen=True)
class ContentManifest:
    """Enough to fetch and verify a blob piecewise: the torrent-file analog."""

    content_id: bytes
    total_length: int
    chunk_size: int
    chunk_digests: tuple[bytes, ...]

    def __init__(self, content_id, total_length, chunk_size, chunk_digests):
        object.__setattr__(self, "content_id", content_id)
        object.__setattr__(self, "total_length", total_length)
        object.__setattr__(self, "chunk_size", chunk_size)
        object.__setattr__(self, "chunk_digests", tuple(chunk_digests))

    @property
    def chunk_count(self) -> int:
        return len(self.chunk_digests)

    def to_json(self) -> dict:
        return {
            "content_id": self.content_id.hex(),
            "total_length": self.total_length,
            "chunk_size": self.chunk_size,
            "chunk_digests": [d.hex() for d in self.chunk_digests],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ContentManifest":
        return cls(
            content_id=bytes.fromhex(doc["content_id"]),
            total_length=int(doc["total_length"]),
            chunk_size=int(doc["chunk_size"]),
            chunk_digests=tuple(bytes.fromhex(d) for d in doc["chunk_digests"]),
        )


@dataclass(frozen=True)
class StoredEntry:
    manifest: ContentManifest
    submitter_pubkey: bytes
    stored_at: int


def split_chunks(blob: bytes, chunk_size: int) -> list[bytes]:
    return [blob[i : i + chunk_size] for i in range(0, len(blob), chunk_size)]


def build_manifest(blob: bytes, chunk_size: int) -> ContentManifest:
    chunks = split_chunks(blob, chunk_size)
    return ContentManifest(
        content_id=hash_blob(blob),
        total_length=len(blob),
        chunk_size=chunk_size,
        chunk_digests=tuple(hash_blob(c) for c in chunks),
    )


class ProviderStore:
    """Disk-backed provider.

    Mutations (upload, delete) run under one lock; reads only rely on
    the manifest-last / manifest-first file ordering, so they can
    proceed concurrently with each other.
    """

    def __init__(self, data_dir: str | Path,
                 chunk_size: int = DEFAULT_CHUNK_SIZE,
                 capacity_bytes: int | None = None):
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.chunk_size = chunk_size
        self.capacity_bytes = capacity_bytes
        self._lock = threading.Lock()
        self._used = sum(
            self._manifest_length(p) for p in self.data_dir.iterdir() if p.is_dir()
        )

    @property
    def location(self) -> str:
        return str(self.data_dir)

    @staticmethod
    def _manifest_length(content_dir: Path) -> int:
        path = content_dir / "manifest.json"
        if not path.exists():
            return 0
        return int(json.loads(path.read_text())["total_length"])

    def _content_dir(self, content_id: bytes) -> Path:
        return self.data_dir / content_id.hex()

    # --- provider API ------------------------------------------------------

    def upload(self, blob: bytes, submitter_pubkey: bytes) -> ContentManifest:
        """Store a sealed blob; returns the manifest. Idempotent on bytes."""
        if not blob:
            raise EmptyBlob("nothing to host")
        content_id = hash_blob(blob)
        with self._lock:
            existing = self._read_manifest(content_id)
            if existing is not None:
                return existing
            if self.capacity_bytes is not None and self._used + len(blob) > self.capacity_bytes:
                raise StorageFull(
                    f"{self._used + len(blob)} bytes would exceed cap {self.capacity_bytes}"
                )
            manifest = build_manifest(blob, self.chunk_size)
            content_dir = self._content_dir(content_id)
            content_dir.mkdir(exist_ok=True)
            for index, chunk in enumerate(split_chunks(blob, self.chunk_size)):
                (content_dir / f"{index:08d}.chunk").write_bytes(chunk)
            (content_dir / "entry.json").write_text(
                json.dumps(
                    {"submitter_pubkey": submitter_pubkey.hex(),
                     "stored_at": int(time.time())}
                )
            )
            self._write_manifest(content_dir, manifest)
            self._used += len(blob)
            return manifest

    def get_manifest(self, content_id: bytes) -> ContentManifest:
        manifest = self._read_manifest(content_id)
        if manifest is None:
            raise NotFound(content_id.hex())
        return manifest

    def get_entry(self, content_id: bytes) -> StoredEntry:
        manifest = self.get_manifest(content_id)
        doc = json.loads((self._content_dir(content_id) / "entry.json").read_text())
        return StoredEntry(
            manifest=manifest,
            submitter_pubkey=bytes.fromhex(doc["submitter_pubkey"]),
            stored_at=int(doc["stored_at"]),
        )

    def get_chunk(self, content_id: bytes, index: int) -> bytes:
        manifest = self.get_manifest(content_id)
        if not 0 <= index < manifest.chunk_count:
            raise IndexOutOfRange(
                f"chunk {index} out of range for {manifest.chunk_count} chunks"
            )
        path = self._content_dir(content_id) / f"{index:08d}.chunk"
        try:
            return path.read_bytes()
        except FileNotFoundError:
            # Deleted between the manifest read and here.
            raise NotFound(content_id.hex()) from None

    def delete_content(self, content_id: bytes, requester_pubkey: bytes,
                       signature: bytes) -> bool:
        """Remove content if the request is signed by the recorded submitter.

        Deleting content that is not here succeeds (idempotent); an
        unauthorized request leaves the content untouched.
        """
        with self._lock:
            manifest = self._read_manifest(content_id)
            if manifest is None:
                return True
            entry_doc = json.loads(
                (self._content_dir(content_id) / "entry.json").read_text()
            )
            submitter = bytes.fromhex(entry_doc["submitter_pubkey"])
            if requester_pubkey != submitter:
                raise Unauthorized("requester is not the recorded submitter")
            try:
                authorized = verify(deletion_digest(content_id), signature, requester_pubkey)
            except MalformedSignature:
                authorized = False
            if not authorized:
                raise Unauthorized("deletion signature does not verify")
            content_dir = self._content_dir(content_id)
            # Manifest goes first so no reader sees a partially removed blob.
            (content_dir / "manifest.json").unlink()
            for path in sorted(content_dir.iterdir()):
                path.unlink()
            content_dir.rmdir()
            self._used -= manifest.total_length
            return True

    # --- internals ---------------------------------------------------------

    def _read_manifest(self, content_id: bytes) -> ContentManifest | None:
        path = self._content_dir(content_id) / "manifest.json"
        try:
            return ContentManifest.from_json(json.loads(path.read_text()))
        except FileNotFoundError:
            return None

    @staticmethod
    def _write_manifest(content_dir: Path, manifest: ContentManifest) -> None:
        tmp = content_dir / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest.to_json()))
        os.replace(tmp, content_dir / "manifest.json")

    def stored_content_ids(self) -> list[bytes]:
        with self._lock:
            return sorted(
                bytes.fromhex(p.name)
                for p in self.data_dir.iterdir()
                if p.is_dir() and (p / "manifest.json").exists()
            )
