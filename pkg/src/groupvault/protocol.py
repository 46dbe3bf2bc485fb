"""Canonical byte encodings for the signed request protocol.

Every authenticated request signs a 1-byte domain prefix followed by the
32-byte digest of the request's canonical fields (fields joined by a 0x00
separator). The prefix keeps a signature from one request type from being
replayed as another. Both the proxy (verifier) and the client (signer) build
messages through these helpers so the encodings cannot drift apart.
"""

from __future__ import annotations

from .crypto import Digest, hash_content

UPLOAD_PREFIX = b"\x01"
JOIN_APPROVAL_PREFIX = b"\x02"
DOWNLOAD_PREFIX = b"\x03"
REVOKE_PREFIX = b"\x04"
LIST_FILES_PREFIX = b"\x05"

_SEP = b"\x00"


def _joined_digest(*fields: str) -> bytes:
    return hash_content(_SEP.join(f.encode("utf-8") for f in fields)).value


def upload_message(file_hash: Digest) -> bytes:
    """Signed by the uploader: 0x01 || digest(file)."""
    return UPLOAD_PREFIX + file_hash.value


def join_approval_message(group_id: str, candidate_user_id: str) -> bytes:
    """Signed by the group owner: 0x02 || digest(group_id || 0x00 || candidate)."""
    return JOIN_APPROVAL_PREFIX + _joined_digest(group_id, candidate_user_id)


def download_message(group_id: str, user_id: str, address: str) -> bytes:
    """Signed by the requesting member:
    0x03 || digest(group_id || 0x00 || user_id || 0x00 || address string)."""
    return DOWNLOAD_PREFIX + _joined_digest(group_id, user_id, address)


def revoke_message(group_id: str, revoked_user_id: str) -> bytes:
    """Signed by the group owner: 0x04 || digest(group_id || 0x00 || revoked user)."""
    return REVOKE_PREFIX + _joined_digest(group_id, revoked_user_id)


def list_files_message(group_id: str, user_id: str) -> bytes:
    """Signed by the requesting member: 0x05 || digest(group_id || 0x00 || user_id)."""
    return LIST_FILES_PREFIX + _joined_digest(group_id, user_id)


def validate_user_id(user_id: str) -> str:
    """Reject ids that would break canonical encodings or keystore paths.

    The 0x00 separator above relies on user ids never containing NUL; path
    separators are excluded because ids appear in keystore file names.
    """
    if not user_id:
        raise ValueError("user_id must be non-empty")
    if any(ord(c) < 0x20 for c in user_id):
        raise ValueError("user_id must not contain control characters")
    if "/" in user_id or "\\" in user_id:
        raise ValueError("user_id must not contain path separators")
    return user_id
