"""Member-side library: identities, the keystore, and the sharing flows.

An identity's private keys never leave the client; every proxy-bound request
carries only public keys, ids, and signatures. After a download the client
independently checks integrity by hashing the decrypted bytes and comparing
against the file hash recorded on the ledger, which it reads directly (the
ledger is public).

The client is written against duck-typed surfaces, so ``proxy`` may be an
in-process :class:`~groupvault.proxy.Proxy` or a remote adapter speaking to
the HTTP service, and ``ledger`` anything with ``get_transaction``.
"""

from __future__ import annotations

import os
import secrets
from dataclasses import dataclass
from pathlib import Path

from . import protocol
from .content_store import IpfsHash
from .crypto import (
    Digest,
    EncryptionKeypair,
    Rng,
    SigningKeypair,
    decrypt_file,
    generate_encryption_keypair,
    generate_signing_keypair,
    hash_content,
    sign,
    unwrap_key,
)
from .errors import KeystoreError, SupersededHashError
from .ledger import TransId
from .proxy import FileIndexEntry, RevocationReport

DEFAULT_KEYSTORE_DIR = Path.home() / ".groupvault"

_IDENTITY_FIELDS = ("user_id", "sig_public", "sig_private", "enc_public", "enc_private")


@dataclass(frozen=True)
class Identity:
    """A user: id plus signing and encryption keypairs."""

    user_id: str
    signing: SigningKeypair
    encryption: EncryptionKeypair


@dataclass(frozen=True)
class DownloadResult:
    """Decrypted file plus the integrity judgment against the ledger record."""

    plaintext: bytes
    file_hash_local: Digest
    file_hash_ledger: Digest
    verified: bool
    key_version: int


def create_identity(user_id: str, rng: Rng = secrets.token_bytes) -> Identity:
    """Fresh identity with independent signing and encryption keypairs."""
    protocol.validate_user_id(user_id)
    return Identity(
        user_id=user_id,
        signing=generate_signing_keypair(rng),
        encryption=generate_encryption_keypair(rng),
    )


class Keystore:
    """Identities persisted as ``<dir>/identity-<user_id>.keys``,
    line-oriented ``field=hexvalue``; file permissions restricted to the
    owner where the platform supports it."""

    def __init__(self, root: str | Path | None = None) -> None:
        self.root = Path(root) if root is not None else DEFAULT_KEYSTORE_DIR

    def path_for(self, user_id: str) -> Path:
        return self.root / f"identity-{user_id}.keys"

    def exists(self, user_id: str) -> bool:
        return self.path_for(user_id).is_file()

    def save(self, identity: Identity, force: bool = False) -> Path:
        path = self.path_for(identity.user_id)
        if path.exists() and not force:
            raise KeystoreError(f"identity {identity.user_id!r} already exists (use force to overwrite)")
        self.root.mkdir(parents=True, exist_ok=True)
        values = {
            "user_id": identity.user_id.encode("utf-8").hex(),
            "sig_public": identity.signing.public.hex(),
            "sig_private": identity.signing.private.hex(),
            "enc_public": identity.encryption.public.hex(),
            "enc_private": identity.encryption.private.hex(),
        }
        content = "".join(f"{name}={values[name]}\n" for name in _IDENTITY_FIELDS)
        path.write_text(content, encoding="ascii")
        try:
            os.chmod(path, 0o600)
        except OSError:
            pass
        return path

    def load(self, user_id: str) -> Identity:
        path = self.path_for(user_id)
        if not path.is_file():
            raise KeystoreError(f"no identity {user_id!r} in keystore {self.root}")
        values: dict[str, bytes] = {}
        for line in path.read_text(encoding="ascii").splitlines():
            if not line.strip():
                continue
            name, _, hexvalue = line.partition("=")
            try:
                values[name] = bytes.fromhex(hexvalue)
            except ValueError:
                raise KeystoreError(f"malformed keystore line in {path}: {name}") from None
        missing = [name for name in _IDENTITY_FIELDS if name not in values]
        if missing:
            raise KeystoreError(f"keystore file {path} is missing fields: {', '.join(missing)}")
        return Identity(
            user_id=values["user_id"].decode("utf-8"),
            signing=SigningKeypair(public=values["sig_public"], private=values["sig_private"]),
            encryption=EncryptionKeypair(public=values["enc_public"], private=values["enc_private"]),
        )


class FileSharingClient:
    """Orchestrates the full protocol flows against a proxy and a ledger."""

    def __init__(self, proxy, ledger) -> None:
        self.proxy = proxy
        self.ledger = ledger

    # -- group management -------------------------------------------------

    def create_group(self, identity: Identity) -> str:
        return self.proxy.register_owner(
            identity.user_id, identity.signing.public, identity.encryption.public
        )

    def request_join(self, identity: Identity, group_id: str) -> None:
        self.proxy.request_join(
            group_id, identity.user_id, identity.signing.public, identity.encryption.public
        )

    def approve_member(self, owner: Identity, group_id: str, candidate_user_id: str) -> None:
        signature = sign(
            owner.signing.private, protocol.join_approval_message(group_id, candidate_user_id)
        )
        self.proxy.approve_join(group_id, candidate_user_id, signature)

    def revoke_member(self, owner: Identity, group_id: str, user_id: str) -> RevocationReport:
        signature = sign(owner.signing.private, protocol.revoke_message(group_id, user_id))
        return self.proxy.revoke(group_id, user_id, signature)

    def list_files(self, identity: Identity, group_id: str) -> list[FileIndexEntry]:
        signature = sign(
            identity.signing.private, protocol.list_files_message(group_id, identity.user_id)
        )
        return self.proxy.list_group_files(group_id, identity.user_id, signature)

    # -- file transfer -----------------------------------------------------

    def upload_file(self, identity: Identity, group_id: str, file: bytes) -> TransId:
        """Sign and upload ``file``; returns its ledger transaction id."""
        signature = sign(identity.signing.private, protocol.upload_message(hash_content(file)))
        trans_id, _, _ = self.proxy.upload(group_id, identity.user_id, file, signature)
        return trans_id

    def download_file(self, identity: Identity, group_id: str, trans_id: TransId) -> DownloadResult:
        """Fetch, unwrap, decrypt, and integrity-check one file.

        Looks up the transaction on the ledger, requests the ciphertext and a
        wrapped group key from the proxy, and verifies the decrypted bytes
        against the file hash on the ledger. If the recorded address was
        re-encrypted away by a revocation, refreshes the group file index and
        retries exactly once. A failed integrity comparison is reported in
        ``verified``, not raised.
        """
        record = self.ledger.get_transaction(trans_id)
        try:
            ciphertext, wrapped = self._request_download(identity, group_id, record.ipfs_hash.address)
        except SupersededHashError:
            entry = next(
                (e for e in self.list_files(identity, group_id) if e.file_hash == record.file_hash),
                None,
            )
            if entry is None:
                raise
            ciphertext, wrapped = self._request_download(
                identity, group_id, entry.current_ipfs_hash.address
            )
        group_key = unwrap_key(identity.encryption.private, wrapped)
        plaintext = decrypt_file(group_key, ciphertext)
        local_hash = hash_content(plaintext)
        return DownloadResult(
            plaintext=plaintext,
            file_hash_local=local_hash,
            file_hash_ledger=record.file_hash,
            verified=local_hash == record.file_hash,
            key_version=group_key.version,
        )

    def _request_download(self, identity: Identity, group_id: str, address: str):
        signature = sign(
            identity.signing.private,
            protocol.download_message(group_id, identity.user_id, address),
        )
        return self.proxy.download(
            group_id, identity.user_id, IpfsHash.from_address(address), signature
        )

    def verify_file(self, file: bytes, trans_id: TransId) -> bool:
        """True iff ``file`` hashes to the file hash recorded on the ledger."""
        record = self.ledger.get_transaction(trans_id)
        return hash_content(file) == record.file_hash
