"""Exception types shared across the vault components.

Every error carries a stable machine-readable ``code`` so the HTTP service
can serialize it and the remote client can raise the exact same exception
class on the other side.
"""

from __future__ import annotations


class GroupVaultError(Exception):
    """Base class for all protocol and storage errors."""

    code = "error"


# --- crypto ---------------------------------------------------------------

class DecryptionError(GroupVaultError):
    """Authenticated decryption failed: wrong key, truncation, or tampering."""

    code = "decryption_failed"


class KeyUnwrapError(DecryptionError):
    """A wrapped group key could not be recovered with the given private key."""

    code = "key_unwrap_failed"


# --- content store --------------------------------------------------------

class BlobNotFoundError(GroupVaultError):
    """No blob is stored under the requested address."""

    code = "blob_not_found"


class BlobIntegrityError(GroupVaultError):
    """Stored bytes no longer hash to their address (at-rest corruption)."""

    code = "integrity_mismatch"


# --- ledger ---------------------------------------------------------------

class TransactionNotFoundError(GroupVaultError):
    """No ledger entry exists for the requested transaction id."""

    code = "transaction_not_found"


# --- proxy ----------------------------------------------------------------

class UnknownGroupError(GroupVaultError):
    code = "unknown_group"


class NotAMemberError(GroupVaultError):
    code = "not_a_member"


class BadSignatureError(GroupVaultError):
    """Request signature missing, malformed, or not by the required key."""

    code = "bad_signature"


class AlreadyMemberError(GroupVaultError):
    code = "already_member"


class DuplicateJoinRequestError(GroupVaultError):
    code = "duplicate_join_request"


class NotPendingError(GroupVaultError):
    """Approval referenced a user with no parked join request."""

    code = "not_pending"


class CannotRevokeOwnerError(GroupVaultError):
    code = "cannot_revoke_owner"


class HashNotInGroupError(GroupVaultError):
    """The requested address is not in the group's file index."""

    code = "hash_not_in_group"


class SupersededHashError(GroupVaultError):
    """The requested address was replaced by re-encryption.

    ``current_ipfs_hash`` carries the address that replaced it so the caller
    can retry.
    """

    code = "superseded_hash"

    def __init__(self, message: str, current_ipfs_hash: str):
        super().__init__(message)
        self.current_ipfs_hash = current_ipfs_hash


# --- client ---------------------------------------------------------------

class KeystoreError(GroupVaultError):
    """Identity keystore problem: missing, duplicate, or malformed entry."""

    code = "keystore_error"


ERROR_CODES: dict[str, type[GroupVaultError]] = {
    cls.code: cls
    for cls in (
        GroupVaultError,
        DecryptionError,
        KeyUnwrapError,
        BlobNotFoundError,
        BlobIntegrityError,
        TransactionNotFoundError,
        UnknownGroupError,
        NotAMemberError,
        BadSignatureError,
        AlreadyMemberError,
        DuplicateJoinRequestError,
        NotPendingError,
        CannotRevokeOwnerError,
        HashNotInGroupError,
        SupersededHashError,
        KeystoreError,
    )
}


def error_from_code(code: str, message: str, current_ipfs_hash: str | None = None) -> GroupVaultError:
    """Rebuild the exception a remote service reported."""
    cls = ERROR_CODES.get(code, GroupVaultError)
    if cls is SupersededHashError:
        return SupersededHashError(message, current_ipfs_hash or "")
    return cls(message)
