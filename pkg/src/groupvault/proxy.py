"""The trusted proxy: group key management, access control, and orchestration.

The proxy is the only trusted component. It owns the mapping table
(group -> owner, current group key, members' public keys, file index), is the
sole writer to the content store and the ledger, and performs every
encryption on behalf of members: files are encrypted under the group key
before they reach the store, and group keys leave the proxy only wrapped to a
member's public encryption key.

Authentication is by signature over the canonical messages in
:mod:`groupvault.protocol`, verified against the public keys registered in
the mapping table. Any failing precondition raises before any state, store,
or ledger mutation, so rejected operations are side-effect free.

Mutations on one group are serialized by a per-group lock; operations on
different groups may run concurrently. The whole mapping table — membership,
keys, file index, and pending join requests — persists in a single versioned
state file (``<root>/proxy.state``) that round-trips losslessly.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import secrets
import tempfile
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import protocol
from .content_store import BlobStore, DiskBlobStore, IpfsHash
from .crypto import (
    Ciphertext,
    Digest,
    GroupKey,
    Rng,
    WrappedKey,
    decrypt_file,
    encrypt_file,
    generate_group_key,
    hash_content,
    validate_encryption_public_key,
    validate_signing_public_key,
    verify,
    wrap_key,
)
from .errors import (
    AlreadyMemberError,
    BadSignatureError,
    CannotRevokeOwnerError,
    DuplicateJoinRequestError,
    HashNotInGroupError,
    NotAMemberError,
    NotPendingError,
    SupersededHashError,
    UnknownGroupError,
)
from .ledger import HashChainLedger, TransactionRecord, TransId

GROUP_ID_PREFIX = "grp-"
STATE_FILE = "proxy.state"
STATE_FORMAT = 1


@dataclass
class MemberEntry:
    """One member's registered public keys; ``joined_at`` is a per-group
    monotonic sequence number (owner is 0)."""

    user_id: str
    sig_public: bytes
    enc_public: bytes
    joined_at: int


@dataclass
class FileIndexEntry:
    """Latest location of one uploaded file within a group."""

    file_hash: Digest
    current_ipfs_hash: IpfsHash
    latest_trans_id: TransId
    uploader: str


@dataclass
class GroupState:
    """Everything the proxy knows about one group."""

    group_id: str
    owner: str
    current_key: GroupKey
    members: dict[str, MemberEntry] = field(default_factory=dict)
    pending: dict[str, tuple[bytes, bytes]] = field(default_factory=dict)
    files: list[FileIndexEntry] = field(default_factory=list)
    # old blob address -> the address that replaced it (kept current across
    # repeated rotations so a stale download can be redirected in one hop)
    superseded: dict[str, str] = field(default_factory=dict)
    member_seq: int = 1


@dataclass
class MappingTable:
    """The access-control policy store: group_id -> group state."""

    groups: dict[str, GroupState] = field(default_factory=dict)


@dataclass(frozen=True)
class RevocationReport:
    """Outcome of one revocation; counts are exact (n-1 wraps, one
    re-encryption and one new transaction per indexed file)."""

    group_id: str
    revoked_user: str
    new_key_version: int
    reencrypted_files: int
    wrapped_keys_issued: int
    new_trans_ids: list[TransId]
    wrapped_keys: list[WrappedKey]


class Proxy:
    """Trusted coordinator between identities, the blob store, and the ledger."""

    def __init__(
        self,
        store: BlobStore,
        ledger: HashChainLedger,
        state_path: str | Path | None = None,
        rng: Rng = secrets.token_bytes,
    ) -> None:
        self.store = store
        self.ledger = ledger
        self.table = MappingTable()
        self._state_path = Path(state_path) if state_path is not None else None
        self._rng = rng
        self._registration_seq = 0
        self._table_lock = threading.RLock()
        self._group_locks: dict[str, threading.RLock] = {}
        if self._state_path is not None and self._state_path.exists():
            self._load_state()

    @classmethod
    def open(cls, root: str | Path, rng: Rng = secrets.token_bytes) -> "Proxy":
        """Proxy over a state directory: blobs/, chain.log, proxy.state."""
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        return cls(
            store=DiskBlobStore(root),
            ledger=HashChainLedger(root),
            state_path=root / STATE_FILE,
            rng=rng,
        )

    # -- access helpers ------------------------------------------------

    def _lock_for(self, group_id: str) -> threading.RLock:
        with self._table_lock:
            lock = self._group_locks.get(group_id)
            if lock is None:
                lock = self._group_locks[group_id] = threading.RLock()
            return lock

    def _group(self, group_id: str) -> GroupState:
        group = self.table.groups.get(group_id)
        if group is None:
            raise UnknownGroupError(f"no such group: {group_id}")
        return group

    @staticmethod
    def _member(group: GroupState, user_id: str) -> MemberEntry:
        member = group.members.get(user_id)
        if member is None:
            raise NotAMemberError(f"{user_id} is not a member of {group.group_id}")
        return member

    @staticmethod
    def _require_signature(public: bytes, message: bytes, signature: bytes, what: str) -> None:
        if not verify(public, message, signature):
            raise BadSignatureError(f"invalid signature on {what}")

    # -- operations ------------------------------------------------------

    def register_owner(self, user_id: str, sig_public: bytes, enc_public: bytes) -> str:
        """Create a new group with ``user_id`` as owner and sole member.

        Returns the fresh group id (``grp-`` + digest of owner id and a
        registration sequence number). The group starts at key version 1.
        """
        protocol.validate_user_id(user_id)
        validate_signing_public_key(sig_public)
        validate_encryption_public_key(enc_public)
        with self._table_lock:
            seq = self._registration_seq
            group_id = GROUP_ID_PREFIX + hashlib.sha256(
                user_id.encode("utf-8") + seq.to_bytes(8, "big")
            ).hexdigest()
            group = GroupState(
                group_id=group_id,
                owner=user_id,
                current_key=generate_group_key(1, self._rng),
                members={user_id: MemberEntry(user_id, sig_public, enc_public, joined_at=0)},
            )
            self._registration_seq = seq + 1
            self.table.groups[group_id] = group
            self._save()
        return group_id

    def request_join(self, group_id: str, user_id: str, sig_public: bytes, enc_public: bytes) -> None:
        """Park a join request for the owner to approve; grants nothing yet."""
        protocol.validate_user_id(user_id)
        validate_signing_public_key(sig_public)
        validate_encryption_public_key(enc_public)
        with self._lock_for(group_id):
            group = self._group(group_id)
            if user_id in group.members:
                raise AlreadyMemberError(f"{user_id} is already a member of {group_id}")
            if user_id in group.pending:
                raise DuplicateJoinRequestError(f"{user_id} already has a pending request for {group_id}")
            group.pending[user_id] = (sig_public, enc_public)
            self._save()

    def approve_join(self, group_id: str, candidate_user_id: str, owner_signature: bytes) -> None:
        """Move a pending candidate into the membership; owner-signed only."""
        with self._lock_for(group_id):
            group = self._group(group_id)
            if candidate_user_id not in group.pending:
                raise NotPendingError(f"{candidate_user_id} has no pending request for {group_id}")
            owner = group.members[group.owner]
            self._require_signature(
                owner.sig_public,
                protocol.join_approval_message(group_id, candidate_user_id),
                owner_signature,
                "join approval",
            )
            sig_public, enc_public = group.pending.pop(candidate_user_id)
            group.members[candidate_user_id] = MemberEntry(
                candidate_user_id, sig_public, enc_public, joined_at=group.member_seq
            )
            group.member_seq += 1
            self._save()

    def upload(
        self, group_id: str, user_id: str, file: bytes, signature: bytes
    ) -> tuple[TransId, IpfsHash, Digest]:
        """Encrypt, store, and record one file on behalf of a member.

        The file is hashed, encrypted under the group's current key, put to
        the content store, and recorded on the ledger; the group file index
        gains one entry. A file whose hash is already indexed in this group
        reuses the existing ciphertext so the store deduplicates it.
        """
        with self._lock_for(group_id):
            group = self._group(group_id)
            member = self._member(group, user_id)
            file_hash = hash_content(file)
            self._require_signature(
                member.sig_public, protocol.upload_message(file_hash), signature, "upload"
            )
            existing = next((e for e in group.files if e.file_hash == file_hash), None)
            if existing is not None:
                ipfs_hash = self.store.put(self.store.get(existing.current_ipfs_hash))
            else:
                ciphertext = encrypt_file(group.current_key, file, self._rng)
                ipfs_hash = self.store.put(ciphertext.to_bytes())
            trans_id = self.ledger.submit(TransactionRecord(
                group_id=group_id,
                user_id=user_id,
                file_hash=file_hash,
                ipfs_hash=ipfs_hash,
                key_version=group.current_key.version,
            ))
            group.files.append(FileIndexEntry(file_hash, ipfs_hash, trans_id, user_id))
            self._save()
            return trans_id, ipfs_hash, file_hash


    def download(
        self, group_id: str, user_id: str, ipfs_hash: IpfsHash, signature: bytes
    ) -> tuple[Ciphertext, WrappedKey]:
        """Hand a member the stored ciphertext plus the group key wrapped to them.

        Raises SupersededHashError (carrying the replacement address) when the
        requested blob was re-encrypted away by a revocation.
        """
        with self._lock_for(group_id):
            group = self._group(group_id)
            member = self._member(group, user_id)
            self._require_signature(
                member.sig_public,
                protocol.download_message(group_id, user_id, ipfs_hash.address),
                signature,
                "download request",
            )
            entry = next((e for e in group.files if e.current_ipfs_hash == ipfs_hash), None)
            if entry is None:
                current = group.superseded.get(ipfs_hash.address)
                if current is not None:
                    raise SupersededHashError(
                        f"{ipfs_hash.address} was re-encrypted; current address is {current}",
                        current_ipfs_hash=current,
                    )
                raise HashNotInGroupError(f"{ipfs_hash.address} is not in the file index of {group_id}")
            ciphertext = Ciphertext.from_bytes(self.store.get(entry.current_ipfs_hash))
            wrapped = wrap_key(member.enc_public, group.current_key, group_id, user_id, self._rng)
            return ciphertext, wrapped

    def revoke(self, group_id: str, revoked_user_id: str, owner_signature: bytes) -> RevocationReport:
        """Remove a member, rotate the group key, and re-encrypt every file.

        All-or-nothing on the mapping table: if any re-encryption or ledger
        submit fails, the group state rolls back to its pre-revocation
        snapshot. Old ciphertext blobs stay in the store but the index (and
        the superseded map) point at the new ones. One wrapped copy of the
        new key is issued per remaining member.
        """
        with self._lock_for(group_id):
            group = self._group(group_id)
            if revoked_user_id not in group.members:
                raise NotAMemberError(f"{revoked_user_id} is not a member of {group_id}")
            if revoked_user_id == group.owner:
                raise CannotRevokeOwnerError(f"cannot revoke the owner of {group_id}")
            owner = group.members[group.owner]
            self._require_signature(
                owner.sig_public,
                protocol.revoke_message(group_id, revoked_user_id),
                owner_signature,
                "revocation",
            )
            snapshot = copy.deepcopy(group)
            try:
                old_key = group.current_key
                new_key = generate_group_key(old_key.version + 1, self._rng)
                new_trans_ids: list[TransId] = []
                rotation: dict[str, str] = {}
                for entry in group.files:
                    plaintext = decrypt_file(
                        old_key, Ciphertext.from_bytes(self.store.get(entry.current_ipfs_hash))
                    )
                    new_hash = self.store.put(encrypt_file(new_key, plaintext, self._rng).to_bytes())
                    trans_id = self.ledger.submit(TransactionRecord(
                        group_id=group_id,
                        user_id=entry.uploader,
                        file_hash=entry.file_hash,
                        ipfs_hash=new_hash,
                        key_version=new_key.version,
                    ))
                    rotation[entry.current_ipfs_hash.address] = new_hash.address
                    entry.current_ipfs_hash = new_hash
                    entry.latest_trans_id = trans_id
                    new_trans_ids.append(trans_id)
                for old, current in group.superseded.items():
                    if current in rotation:
                        group.superseded[old] = rotation[current]
                group.superseded.update(rotation)
                del group.members[revoked_user_id]
                group.pending.pop(revoked_user_id, None)
                group.current_key = new_key
                wrapped_keys = [
                    wrap_key(m.enc_public, new_key, group_id, m.user_id, self._rng)
                    for m in sorted(group.members.values(), key=lambda m: m.joined_at)
                ]
                self._save()
            except Exception:
                self.table.groups[group_id] = snapshot
                raise
            return RevocationReport(
                group_id=group_id,
                revoked_user=revoked_user_id,
                new_key_version=new_key.version,
                reencrypted_files=len(group.files),
                wrapped_keys_issued=len(wrapped_keys),
                new_trans_ids=new_trans_ids,
                wrapped_keys=wrapped_keys,
            )

    def list_group_files(self, group_id: str, user_id: str, signature: bytes) -> list[FileIndexEntry]:
        """Current file index snapshot, for members only (signed request)."""
        with self._lock_for(group_id):
            group = self._group(group_id)
            member = self._member(group, user_id)
            self._require_signature(
                member.sig_public,
                protocol.list_files_message(group_id, user_id),
                signature,
                "file listing request",
            )
            return [replace(entry) for entry in group.files]

    # -- persistence ----------------------------------------------------

    def state_dict(self) -> dict:
        """Canonical JSON-ready form of the full persistent state."""
        return {
            "format": STATE_FORMAT,
            "registration_seq": self._registration_seq,
            "groups": {
                group_id: {
                    "owner": g.owner,
                    "member_seq": g.member_seq,
                    "current_key": {
                        "key_material": g.current_key.key_material.hex(),
                        "version": g.current_key.version,
                    },
                    "members": [
                        {
                            "user_id": m.user_id,
                            "sig_public": m.sig_public.hex(),
                            "enc_public": m.enc_public.hex(),
                            "joined_at": m.joined_at,
                        }
                        for m in sorted(g.members.values(), key=lambda m: m.joined_at)
                    ],
                    "files": [
                        {
                            "file_hash": e.file_hash.hex(),
                            "current_ipfs_hash": e.current_ipfs_hash.address,
                            "latest_trans_id": str(e.latest_trans_id),
                            "uploader": e.uploader,
                        }
                        for e in g.files
                    ],
                    "pending": {
                        user_id: {"sig_public": sig.hex(), "enc_public": enc.hex()}
                        for user_id, (sig, enc) in sorted(g.pending.items())
                    },
                    "superseded": dict(sorted(g.superseded.items())),
                }
                for group_id, g in sorted(self.table.groups.items())
            },
        }

    def _save(self) -> None:
        if self._state_path is None:
            return
        data = json.dumps(self.state_dict(), indent=2, sort_keys=True).encode("utf-8")
        self._state_path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=self._state_path.parent, prefix=".state-")
        try:
            with os.fdopen(fd, "wb") as tmp:
                tmp.write(data)
                tmp.flush()
                os.fsync(tmp.fileno())
            os.replace(tmp_name, self._state_path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise

    def _load_state(self) -> None:
        data = json.loads(self._state_path.read_text("utf-8"))
        if data.get("format") != STATE_FORMAT:
            raise ValueError(f"unsupported proxy state format: {data.get('format')!r}")
        self._registration_seq = data["registration_seq"]
        groups: dict[str, GroupState] = {}
        for group_id, g in data["groups"].items():
            groups[group_id] = GroupState(
                group_id=group_id,
                owner=g["owner"],
                current_key=GroupKey(
                    key_material=bytes.fromhex(g["current_key"]["key_material"]),
                    version=g["current_key"]["version"],
                ),
                members={
                    m["user_id"]: MemberEntry(
                        user_id=m["user_id"],
                        sig_public=bytes.fromhex(m["sig_public"]),
                        enc_public=bytes.fromhex(m["enc_public"]),
                        joined_at=m["joined_at"],
                    )
                    for m in g["members"]
                },
                files=[
                    FileIndexEntry(
                        file_hash=Digest.from_hex(e["file_hash"]),
                        current_ipfs_hash=IpfsHash.from_address(e["current_ipfs_hash"]),
                        latest_trans_id=TransId.from_string(e["latest_trans_id"]),
                        uploader=e["uploader"],
                    )
                    for e in g["files"]
                ],
                pending={
                    user_id: (bytes.fromhex(p["sig_public"]), bytes.fromhex(p["enc_public"]))
                    for user_id, p in g.get("pending", {}).items()
                },
                superseded=dict(g["superseded"]),
                member_seq=g["member_seq"],
            )
        self.table = MappingTable(groups=groups)
