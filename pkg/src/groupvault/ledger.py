"""Append-only hash-chained transaction ledger.

A single-writer stand-in for a public transaction log: every upload record
becomes one block whose hash covers its index, the previous block's hash and
the canonical record bytes, so modifying any persisted byte is detectable.
There is no consensus and no mining; "broadcast" is the durable append
itself. Reads need no credentials.

On disk the chain is one length-prefixed block per record appended to
``<root>/chain.log``. Transaction ids render as ``tx-`` + 64 hex chars and
are the digest of (block index || canonical record bytes), so they are
deterministic given the chain state at submission and can be recomputed
offline.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .content_store import IpfsHash
from .crypto import DIGEST_SIZE, Digest
from .errors import TransactionNotFoundError

TRANS_ID_PREFIX = "tx-"
GENESIS_PREV_HASH = Digest(b"\x00" * DIGEST_SIZE)

CHAIN_FILE = "chain.log"


@dataclass(frozen=True)
class TransactionRecord:
    """One upload record: who stored which file in which group, under which key."""

    group_id: str
    user_id: str
    file_hash: Digest
    ipfs_hash: IpfsHash
    key_version: int

    def __post_init__(self) -> None:
        if not self.group_id:
            raise ValueError("group_id must be non-empty")
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.key_version < 1:
            raise ValueError("key_version must be >= 1")

    def encode(self) -> bytes:
        """Canonical byte encoding; bit-exact across runs.

        Fields in fixed order, strings/digests as 4-byte big-endian length +
        bytes (raw 32-byte digests for the two hashes), then key_version as
        8-byte big-endian.
        """
        parts = []
        for field in (
            self.group_id.encode("utf-8"),
            self.user_id.encode("utf-8"),
            self.file_hash.value,
            self.ipfs_hash.digest.value,
        ):
            parts.append(len(field).to_bytes(4, "big"))
            parts.append(field)
        parts.append(self.key_version.to_bytes(8, "big"))
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> "TransactionRecord":
        fields = []
        offset = 0
        for _ in range(4):
            if offset + 4 > len(data):
                raise ValueError("truncated transaction record")
            length = int.from_bytes(data[offset:offset + 4], "big")
            offset += 4
            if offset + length > len(data):
                raise ValueError("truncated transaction record")
            fields.append(data[offset:offset + length])
            offset += length
        if offset + 8 != len(data):
            raise ValueError("malformed transaction record")
        key_version = int.from_bytes(data[offset:offset + 8], "big")
        return cls(
            group_id=fields[0].decode("utf-8"),
            user_id=fields[1].decode("utf-8"),
            file_hash=Digest(fields[2]),
            ipfs_hash=IpfsHash(Digest(fields[3])),
            key_version=key_version,
        )


@dataclass(frozen=True)
class TransId:
    """Handle for one ledger entry: digest of (block index || record bytes)."""

    digest: Digest

    @classmethod
    def compute(cls, index: int, tx: bytes) -> "TransId":
        return cls(Digest(hashlib.sha256(index.to_bytes(8, "big") + tx).digest()))

    @classmethod
    def from_string(cls, text: str) -> "TransId":
        if not text.startswith(TRANS_ID_PREFIX):
            raise ValueError(f"transaction id must start with {TRANS_ID_PREFIX!r}")
        return cls(Digest.from_hex(text[len(TRANS_ID_PREFIX):]))

    def __str__(self) -> str:
        return TRANS_ID_PREFIX + self.digest.hex()


@dataclass(frozen=True)
class Block:
    """Chain element: ``block_hash`` recomputes from the other fields."""

    index: int
    prev_hash: Digest
    tx: bytes
    block_hash: Digest

    @staticmethod
    def compute_hash(index: int, prev_hash: Digest, tx: bytes) -> Digest:
        h = hashlib.sha256()
        h.update(index.to_bytes(8, "big"))
        h.update(prev_hash.value)
        h.update(tx)
        return Digest(h.digest())

    @classmethod
    def build(cls, index: int, prev_hash: Digest, tx: bytes) -> "Block":
        return cls(index, prev_hash, tx, cls.compute_hash(index, prev_hash, tx))

    def to_bytes(self) -> bytes:
        return b"".join((
            self.index.to_bytes(8, "big"),
            self.prev_hash.value,
            len(self.tx).to_bytes(4, "big"),
            self.tx,
            self.block_hash.value,
        ))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        if len(data) < 8 + DIGEST_SIZE + 4 + DIGEST_SIZE:
            raise ValueError("block too short")
        index = int.from_bytes(data[:8], "big")
        prev_hash = Digest(data[8:8 + DIGEST_SIZE])
        tx_len = int.from_bytes(data[40:44], "big")
        if len(data) != 44 + tx_len + DIGEST_SIZE:
            raise ValueError("block length mismatch")
        tx = data[44:44 + tx_len]
        block_hash = Digest(data[44 + tx_len:])
        return cls(index, prev_hash, tx, block_hash)

    def trans_id(self) -> TransId:
        return TransId.compute(self.index, self.tx)


def _read_frames(raw: bytes) -> list[bytes]:
    """Split ``raw`` into length-prefixed frames; raises ValueError on any
    inconsistency including trailing bytes."""
    frames = []
    offset = 0
    while offset < len(raw):
        if offset + 4 > len(raw):
            raise ValueError("truncated frame header")
        length = int.from_bytes(raw[offset:offset + 4], "big")
        offset += 4
        if offset + length > len(raw):
            raise ValueError("truncated frame")
        frames.append(raw[offset:offset + length])
        offset += length
    return frames


class HashChainLedger:
    """Single-writer hash chain over ``<root>/chain.log``.

    Opening parses the longest valid prefix of the file (so a tampered chain
    can still be inspected); :meth:`verify_chain` is strict and re-reads the
    persisted bytes on every call.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._path = self.root / CHAIN_FILE
        self._blocks: list[Block] = []
        self._by_trans_id: dict[str, tuple[Block, TransactionRecord]] = {}
        self._append_lock = threading.Lock()
        self._load()

    @property
    def path(self) -> Path:
        return self._path

    def _load(self) -> None:
        if not self._path.exists():
            return
        raw = self._path.read_bytes()
        try:
            frames = _read_frames(raw)
        except ValueError:
            frames = []
            # salvage whole frames before the corruption point
            offset = 0
            while offset + 4 <= len(raw):
                length = int.from_bytes(raw[offset:offset + 4], "big")
                if offset + 4 + length > len(raw):
                    break
                frames.append(raw[offset + 4:offset + 4 + length])
                offset += 4 + length
        for frame in frames:
            try:
                block = Block.from_bytes(frame)
                record = TransactionRecord.decode(block.tx)
            except ValueError:
                break
            self._index_block(block, record)

    def _index_block(self, block: Block, record: TransactionRecord) -> None:
        self._blocks.append(block)
        self._by_trans_id[str(block.trans_id())] = (block, record)

    def submit(self, tx: TransactionRecord) -> TransId:
        """Append one block holding ``tx``; the record is immutable thereafter."""
        if not isinstance(tx, TransactionRecord):
            raise ValueError("submit expects a TransactionRecord")
        encoded = tx.encode()
        prev_hash = self._blocks[-1].block_hash if self._blocks else GENESIS_PREV_HASH
        block = Block.build(len(self._blocks), prev_hash, encoded)
        frame = len(block.to_bytes()).to_bytes(4, "big") + block.to_bytes()
        with open(self._path, "ab") as chain:
            chain.write(frame)
            chain.flush()
            os.fsync(chain.fileno())
        self._index_block(block, tx)
        return block.trans_id()

    def get_transaction(self, trans_id: TransId | str) -> TransactionRecord:
        """Exact record submitted under ``trans_id``; no credentials required."""
        key = str(trans_id) if isinstance(trans_id, TransId) else trans_id
        try:
            return self._by_trans_id[key][1]
        except KeyError:
            raise TransactionNotFoundError(f"no transaction {key}") from None

    def height(self) -> int:
        return len(self._blocks)

    def blocks(self) -> list[Block]:
        return list(self._blocks)

    def records(self) -> list[tuple[Block, TransactionRecord]]:
        """(block, decoded record) pairs in chain order."""
        return [self._by_trans_id[str(b.trans_id())] for b in self._blocks]

    def verify_chain(self) -> bool:
        """True iff every persisted block's hash recomputes and every
        prev_hash links to its predecessor. Corruption never raises."""
        if not self._path.exists():
            return True
        try:
            frames = _read_frames(self._path.read_bytes())
        except ValueError:
            return False
        prev_hash = GENESIS_PREV_HASH
        for position, frame in enumerate(frames):
            try:
                block = Block.from_bytes(frame)
            except ValueError:
                return False
            if block.index != position:
                return False
            if block.prev_hash != prev_hash:
                return False
            if Block.compute_hash(block.index, block.prev_hash, block.tx) != block.block_hash:
                return False
            prev_hash = block.block_hash
        return True
