"""Content-addressed blob store with deduplication.

A desk-scale stand-in for a distributed content-addressed file server: each
blob is stored once, keyed by the SHA-256 of its bytes, and the address
itself verifies the content on the way out. Addresses render as
``cas1-`` + 64 lowercase hex chars.

Two backends share one interface: :class:`DiskBlobStore` persists one file
per blob under ``<root>/blobs/<first2hex>/<fullhex>`` (written to a temp file
then atomically renamed, so concurrent puts of identical content cannot
corrupt state), and :class:`MemoryBlobStore` backs tests.
"""

from __future__ import annotations

import os
import tempfile
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .crypto import Digest, hash_content
from .errors import BlobIntegrityError, BlobNotFoundError

ADDRESS_PREFIX = "cas1-"


@dataclass(frozen=True)
class IpfsHash:
    """Content address of a stored blob: the digest of its bytes."""

    digest: Digest

    @property
    def address(self) -> str:
        return ADDRESS_PREFIX + self.digest.hex()

    @classmethod
    def from_address(cls, address: str) -> "IpfsHash":
        if not address.startswith(ADDRESS_PREFIX):
            raise ValueError(f"blob address must start with {ADDRESS_PREFIX!r}")
        return cls(Digest.from_hex(address[len(ADDRESS_PREFIX):]))

    def __str__(self) -> str:
        return self.address


@dataclass
class StoreStats:
    """Counters over the store: blobs held, bytes held, puts of already-present content."""

    blob_count: int = 0
    total_bytes: int = 0
    dedup_hits: int = 0


class BlobStore(ABC):
    """Deduplicating content-addressed store keyed by blob digest."""

    @abstractmethod
    def put(self, blob: bytes) -> IpfsHash:
        """Store ``blob``; idempotent. Re-putting identical bytes returns the
        same address, stores nothing new, and counts one dedup hit."""

    @abstractmethod
    def get(self, h: IpfsHash) -> bytes:
        """Exact bytes previously put under ``h``.

        Raises:
            BlobNotFoundError: nothing stored under this address.
            BlobIntegrityError: stored bytes no longer hash to the address.
        """

    @abstractmethod
    def has(self, h: IpfsHash) -> bool:
        """True iff a blob with this address is stored."""

    @abstractmethod
    def stats(self) -> StoreStats:
        """Current counters."""

    @abstractmethod
    def gc(self, live: Iterable[IpfsHash]) -> int:
        """Remove blobs not in ``live``; returns how many were removed.

        Maintenance hook only: normal operation never deletes, so ciphertexts
        superseded by re-encryption stay retrievable by address.
        """


class MemoryBlobStore(BlobStore):
    """Dict-backed store for tests; same contract as the disk store."""

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}
        self._dedup_hits = 0
        self._lock = threading.Lock()

    def put(self, blob: bytes) -> IpfsHash:
        h = IpfsHash(hash_content(blob))
        with self._lock:
            if h.address in self._blobs:
                self._dedup_hits += 1
            else:
                self._blobs[h.address] = bytes(blob)
        return h

    def get(self, h: IpfsHash) -> bytes:
        blob = self._blobs.get(h.address)
        if blob is None:
            raise BlobNotFoundError(f"no blob stored at {h.address}")
        if hash_content(blob) != h.digest:
            raise BlobIntegrityError(f"stored bytes no longer match {h.address}")
        return blob

    def has(self, h: IpfsHash) -> bool:
        return h.address in self._blobs

    def stats(self) -> StoreStats:
        return StoreStats(
            blob_count=len(self._blobs),
            total_bytes=sum(len(b) for b in self._blobs.values()),
            dedup_hits=self._dedup_hits,
        )

    def gc(self, live: Iterable[IpfsHash]) -> int:
        keep = {h.address for h in live}
        doomed = [a for a in self._blobs if a not in keep]
        for address in doomed:
            del self._blobs[address]
        return len(doomed)


class DiskBlobStore(BlobStore):
    """One file per blob under ``<root>/blobs/<first2hex>/<fullhex>``.

    blob_count and total_bytes are recomputed from the directory on open;
    dedup_hits counts hits observed through this handle.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._blobs_dir = self.root / "blobs"
        self._blobs_dir.mkdir(parents=True, exist_ok=True)
        self._dedup_hits = 0
        self._blob_count = 0
        self._total_bytes = 0
        self._lock = threading.Lock()
        for path in self._blobs_dir.glob("??/*"):
            self._blob_count += 1
            self._total_bytes += path.stat().st_size

    def _path(self, h: IpfsHash) -> Path:
        hex_name = h.digest.hex()
        return self._blobs_dir / hex_name[:2] / hex_name

    def put(self, blob: bytes) -> IpfsHash:
        h = IpfsHash(hash_content(blob))
        path = self._path(h)
        with self._lock:
            if path.exists():
                self._dedup_hits += 1
                return h
        # write outside the lock; identical racing writers are harmless
        # because the rename is atomic and the content is the same
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".put-")
        try:
            with os.fdopen(fd, "wb") as tmp:
                tmp.write(blob)
                tmp.flush()
                os.fsync(tmp.fileno())
            with self._lock:
                if path.exists():
                    os.unlink(tmp_name)
                    self._dedup_hits += 1
                else:
                    os.replace(tmp_name, path)
                    self._blob_count += 1
                    self._total_bytes += len(blob)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
        return h

    def get(self, h: IpfsHash) -> bytes:
        path = self._path(h)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            raise BlobNotFoundError(f"no blob stored at {h.address}") from None
        if hash_content(blob) != h.digest:
            raise BlobIntegrityError(f"stored bytes no longer match {h.address}")
        return blob

    def has(self, h: IpfsHash) -> bool:
        return self._path(h).is_file()

    def stats(self) -> StoreStats:
        with self._lock:
            return StoreStats(
                blob_count=self._blob_count,
                total_bytes=self._total_bytes,
                dedup_hits=self._dedup_hits,
            )

    def gc(self, live: Iterable[IpfsHash]) -> int:
        keep = {h.address for h in live}
        removed = 0
        for path in list(self._blobs_dir.glob("??/*")):
            if ADDRESS_PREFIX + path.name not in keep:
                size = path.stat().st_size
                path.unlink()
                removed += 1
                self._blob_count -= 1
                self._total_bytes -= size
        return removed
